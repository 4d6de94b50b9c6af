import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)


def slow_cluster_amplitudes(cluster) -> np.ndarray:
    """Reference amplitudes built the obvious way, one basis state at a time.

    For each computational basis configuration the amplitude is
    2^(-n/2) * (-1)^m with m the number of lattice edges (a, a+gamma)
    whose near qubit reads 0 and far qubit reads 1.  Deliberately scalar
    so it shares no code with the vectorized production path.
    """
    n = cluster.n
    edges = [(cluster.index(a), cluster.index(b)) for a, b in cluster.forward_edges()]
    amps = np.empty(1 << n, dtype=complex)
    for idx in range(1 << n):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        m = sum(1 for ia, ib in edges if bits[ia] == 0 and bits[ib] == 1)
        amps[idx] = (-1.0) ** m
    return amps / np.sqrt(1 << n)


def random_unitary_2x2(rng) -> np.ndarray:
    m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def single_qubit_cliffords() -> list[np.ndarray]:
    """All 24 single-qubit Cliffords (mod global phase), generated from H and S."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.diag([1.0, 1.0j])

    def key(u):
        flat = u.flatten()
        piv = flat[np.argmax(np.abs(flat) > 1e-9)]
        return tuple(np.round(flat / piv * (np.abs(piv)), 6))

    found = {key(np.eye(2)): np.eye(2, dtype=complex)}
    frontier = list(found.values())
    while frontier:
        nxt = []
        for u in frontier:
            for g in (h, s):
                v = g @ u
                k = key(v)
                if k not in found:
                    found[k] = v
                    nxt.append(v)
        frontier = nxt
    assert len(found) == 24
    return list(found.values())
