"""Dense state-vector backend.

Conventions, used consistently everywhere:

* qubit ``q`` of an ``n``-qubit register is bit ``n - 1 - q`` of the
  amplitude index, i.e. qubit 0 is the most significant bit, so
  ``amps.reshape((2,) * n)`` puts qubit ``q`` on axis ``q``;
* measurement outcome 0 is the +1 eigenvalue of the measured observable,
  outcome 1 the -1 eigenvalue;
* a cluster's qubits are numbered by its site order (lexicographic).

The entangling evolution comes in two equivalent forms.  ``"standard"``
applies ``exp(-i phi S)`` with ``S = sum (1 + Z_a)(1 - Z_b)/4`` over the
directed occupied edges ``(a, b = a + gamma)``: each edge contributes the
phase ``exp(-i phi)`` exactly on ``|0>_a |1>_b``.  ``"ising"`` keeps only
the two-body piece ``exp(+i phi Z_a Z_b / 4)`` per edge; the one-body and
scalar factors that make the two coincide are returned by
:func:`ising_frame_corrections`.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InputError, ResourceLimitError
from .lattice import Cluster, Site

DEFAULT_MAX_QUBITS = 24
NORM_TOL = 1e-10
RANK_TOL = 1e-8

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

MAGIC = b"CLSV"
DUMP_VERSION = 1


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_size(n: int, max_qubits: int) -> None:
    if n > max_qubits:
        raise ResourceLimitError(
            f"dense backend limited to {max_qubits} qubits, requested {n}"
        )


@dataclass
class PureState:
    """A normalized pure state of ``n`` qubits.

    ``cluster`` records the lattice the qubits live on when there is one;
    states produced by sub-system extraction or as bare references (GHZ, W)
    may carry ``None``.
    """

    amps: np.ndarray
    cluster: Cluster | None = None

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        n = self.amps.size.bit_length() - 1
        if 2**n != self.amps.size:
            raise InputError(f"amplitude vector length {self.amps.size} is not a power of two")
        norm = np.linalg.norm(self.amps)
        if abs(norm - 1.0) > 1e-8:
            raise InputError(f"state is not normalized (norm {norm:.3e})")

    @property
    def n(self) -> int:
        return self.amps.size.bit_length() - 1

    def copy(self) -> "PureState":
        return PureState(self.amps.copy(), self.cluster)

    def qubit_of(self, site) -> int:
        """Resolve a site label (or pass through an integer index)."""
        if isinstance(site, (int, np.integer)):
            q = int(site)
            if not 0 <= q < self.n:
                raise InputError(f"qubit index {q} out of range for n={self.n}")
            return q
        if self.cluster is None:
            raise InputError("state carries no cluster, address qubits by index")
        return self.cluster.index(site)

    def tensor(self) -> np.ndarray:
        return self.amps.reshape((2,) * self.n)


@dataclass(frozen=True)
class MeasurementSpec:
    """One single-qubit measurement: a qubit (site tuple or index) and a
    basis, either an axis label ``"X" | "Y" | "Z"`` or a Bloch vector."""

    qubit: object
    basis: object = "Z"

    def eigenvectors(self) -> tuple[np.ndarray, np.ndarray]:
        return basis_vectors(self.basis)


def basis_vectors(basis) -> tuple[np.ndarray, np.ndarray]:
    """(+1, -1) eigenvectors of the named axis or of ``n . sigma``.

    A 2x2 array is taken as an explicit orthonormal pair, one eigenvector
    per row (outcome 0 first).
    """
    if isinstance(basis, str):
        axis = basis.upper()
        axes = {"X": (1.0, 0.0, 0.0), "Y": (0.0, 1.0, 0.0), "Z": (0.0, 0.0, 1.0)}
        if axis not in axes:
            raise InputError(f"unknown measurement basis {basis!r}")
        n = axes[axis]
    else:
        arr = np.asarray(basis)
        if arr.shape == (2, 2):
            v0 = arr[0].astype(complex)
            v1 = arr[1].astype(complex)
            gram = np.array(
                [[np.vdot(v0, v0), np.vdot(v0, v1)], [np.vdot(v1, v0), np.vdot(v1, v1)]]
            )
            if not np.allclose(gram, np.eye(2), atol=1e-9):
                raise InputError("explicit measurement basis is not orthonormal")
            return v0, v1
        if arr.shape != (3,):
            raise InputError("basis must be an axis name, a Bloch vector, or a 2x2 pair")
        norm = float(np.linalg.norm(arr))
        if norm < 1e-12:
            raise InputError("Bloch vector must be nonzero")
        n = tuple(float(c) / norm for c in arr)
    nx, ny, nz = n
    theta = np.arccos(np.clip(nz, -1.0, 1.0))
    phi = np.arctan2(ny, nx)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    v0 = np.array([c, s * np.exp(1j * phi)])
    v1 = np.array([-s * np.exp(-1j * phi), c])
    return v0, v1


# -- state construction --------------------------------------------------

def init_plus(cluster: Cluster, max_qubits: int = DEFAULT_MAX_QUBITS) -> PureState:
    """Product state ``|+>^n`` on the cluster's qubits."""
    _check_size(cluster.n, max_qubits)
    amps = np.full(2**cluster.n, 2 ** (-cluster.n / 2), dtype=complex)
    return PureState(amps, cluster)


def _bit_columns(n: int) -> np.ndarray:
    """(2^n, n) matrix of index bits, column q = value of qubit q."""
    idx = np.arange(2**n, dtype=np.int64)
    shifts = n - 1 - np.arange(n)
    return (idx[:, None] >> shifts[None, :]) & 1


def evolve(
    state: PureState,
    phi: float,
    form: str = "standard",
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> PureState:
    """Apply the entangling evolution at angle ``phi`` to ``state``.

    ``form="standard"`` multiplies each amplitude by ``exp(-i phi k)`` where
    ``k`` counts directed edges in the ``|0>|1>`` configuration;
    ``form="ising"`` applies ``exp(+i phi/4 Z_a Z_b)`` per edge instead.
    """
    if state.cluster is None:
        raise InputError("evolve needs a state with a cluster")
    cluster = state.cluster
    _check_size(cluster.n, max_qubits)
    bits = _bit_columns(cluster.n)
    src, dst = cluster.edge_index_arrays()
    if form == "standard":
        k = ((1 - bits[:, src]) * bits[:, dst]).sum(axis=1)
        phases = np.exp(-1j * phi * k)
    elif form == "ising":
        za = 1 - 2 * bits[:, src]
        zb = 1 - 2 * bits[:, dst]
        phases = np.exp(1j * (phi / 4) * (za * zb).sum(axis=1))
    else:
        raise InputError(f"unknown evolution form {form!r}")
    return PureState(state.amps * phases, cluster)


def ising_frame_corrections(cluster: Cluster, phi: float):
    """Scalar and one-body factors relating the two evolution forms.

    Returns ``(global_phase, rotations)`` with ``rotations`` a list of
    ``(site, diag_2x2)`` such that composing the Ising-form evolution with
    these factors reproduces the standard form:
    ``U_standard = global_phase * prod(rotations) * U_ising``.
    """
    edges = cluster.forward_edges()
    global_phase = np.exp(-1j * phi * len(edges) / 4)
    rotations = []
    for a in cluster.sites:
        out_deg = sum(b == a for b, _ in edges)
        in_deg = cluster.in_degree(a)
        c = out_deg - in_deg
        if c:
            rot = np.diag(np.exp(-1j * (phi / 4) * c * np.array([1.0, -1.0])))
            rotations.append((a, rot))
    return global_phase, rotations


def chain_state(n: int, max_qubits: int = DEFAULT_MAX_QUBITS) -> PureState:
    """Closed-form chain state on ``n`` qubits.

    Expanding the product form, the amplitude of a bit pattern is
    ``2^(-n/2)`` times ``(-1)`` for every adjacent pair reading ``01``.
    """
    cluster = Cluster.chain(n)
    _check_size(n, max_qubits)
    idx = np.arange(2**n, dtype=np.int64)
    mask = (1 << n) - 1
    pairs01 = (~idx) & (idx << 1) & mask
    signs = 1 - 2 * (bit_count(pairs01) & 1)
    amps = signs * 2 ** (-n / 2)
    return PureState(amps.astype(complex), cluster)


def bit_count(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.int64)


def cluster_state(cluster: Cluster, max_qubits: int = DEFAULT_MAX_QUBITS) -> PureState:
    """Closed-form cluster state: amplitude sign ``(-1)^m`` where ``m``
    counts directed occupied edges in the ``|0>|1>`` configuration."""
    _check_size(cluster.n, max_qubits)
    bits = _bit_columns(cluster.n)
    src, dst = cluster.edge_index_arrays()
    m = ((1 - bits[:, src]) * bits[:, dst]).sum(axis=1)
    amps = (1 - 2 * (m & 1)) * 2 ** (-cluster.n / 2)
    return PureState(amps.astype(complex), cluster)


def ghz_state(n: int, coeffs=None) -> PureState:
    """``a|0...0> + b|1...1>``; equal weights by default."""
    if n < 1:
        raise InputError("ghz_state needs at least one qubit")
    a, b = (1 / np.sqrt(2), 1 / np.sqrt(2)) if coeffs is None else coeffs
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = a
    amps[-1] = b
    return PureState(amps / np.linalg.norm(amps))


def w_state(n: int) -> PureState:
    amps = np.zeros(2**n, dtype=complex)
    for q in range(n):
        amps[1 << (n - 1 - q)] = 1
    return PureState(amps / np.sqrt(n))


def product_state(vectors) -> PureState:
    """Tensor product of single-qubit vectors (each length 2)."""
    amps = np.ones(1, dtype=complex)
    for v in vectors:
        amps = np.kron(amps, np.asarray(v, dtype=complex))
    return PureState(amps / np.linalg.norm(amps))


# -- local operations ----------------------------------------------------

def apply_local(state: PureState, qubit, u: np.ndarray) -> PureState:
    """Apply a 2x2 operator to one qubit (site label or index)."""
    q = state.qubit_of(qubit)
    u = np.asarray(u, dtype=complex)
    psi = state.tensor()
    psi = np.tensordot(u, psi, axes=([1], [q]))
    psi = np.moveaxis(psi, 0, q)
    return PureState(psi.reshape(-1), state.cluster)


def apply_local_many(state: PureState, ops) -> PureState:
    """Apply ``(qubit, u)`` pairs in order."""
    for qubit, u in ops:
        state = apply_local(state, qubit, u)
    return state


def apply_pauli_string(state: PureState, paulis: dict) -> PureState:
    """Apply ``{qubit: "X"|"Y"|"Z"}`` in one pass."""
    for qubit, name in paulis.items():
        state = apply_local(state, qubit, PAULI[name])
    return state


# -- measurement ---------------------------------------------------------

@dataclass(frozen=True)
class MeasurementResult:
    outcome: int
    probability: float
    state: PureState


def measure(
    state: PureState,
    spec: MeasurementSpec,
    rng=None,
    forced: int | None = None,
) -> MeasurementResult:
    """Projectively measure one qubit.

    With ``forced`` the given outcome is postselected (an error if its
    probability is zero); otherwise the outcome is drawn from ``rng`` by
    comparing a single uniform variate against the outcome-1 probability,
    which keeps the draw stream aligned with the stabilizer backend.
    """
    q = state.qubit_of(spec.qubit)
    v0, v1 = basis_vectors(spec.basis)
    psi = np.moveaxis(state.tensor(), q, 0).reshape(2, -1)
    branch0 = v0.conj() @ psi
    branch1 = v1.conj() @ psi
    p0 = float(np.real(np.vdot(branch0, branch0)))
    p1 = float(np.real(np.vdot(branch1, branch1)))
    if forced is not None:
        outcome = int(forced)
        if outcome not in (0, 1):
            raise InputError(f"outcome must be 0 or 1, got {forced}")
    elif max(p0, p1) > 1 - NORM_TOL:
        outcome = int(p1 > p0)
    else:
        u = float(as_rng(rng).random())
        outcome = int(u < p1)
    prob = (p0, p1)[outcome]
    if prob <= NORM_TOL:
        raise InputError(
            f"outcome {outcome} on qubit {spec.qubit} has probability {prob:.3e}"
        )
    vec, branch = ((v0, branch0), (v1, branch1))[outcome]
    post = np.tensordot(vec, branch / np.sqrt(prob), axes=0)
    post = np.moveaxis(post.reshape((2,) * state.n), 0, q)
    return MeasurementResult(outcome, prob, PureState(post.reshape(-1), state.cluster))


@dataclass(frozen=True)
class BranchLeaf:
    outcomes: tuple[int, ...]
    probability: float
    state: PureState


@dataclass(frozen=True)
class BranchTree:
    specs: tuple[MeasurementSpec, ...]
    leaves: tuple[BranchLeaf, ...]

    def __iter__(self):
        return iter(self.leaves)


def branch_all(state: PureState, specs, prob_tol: float = NORM_TOL) -> BranchTree:
    """Enumerate every measurement branch of a spec sequence.

    Leaves are ordered by their outcome tuples; branches of probability
    below ``prob_tol`` are dropped (they do not occur physically).
    """
    specs = tuple(specs)
    leaves: list[BranchLeaf] = []

    def walk(s: PureState, depth: int, outcomes: tuple[int, ...], prob: float):
        if depth == len(specs):
            leaves.append(BranchLeaf(outcomes, prob, s))
            return
        for outcome in (0, 1):
            try:
                r = measure(s, specs[depth], forced=outcome)
            except InputError:
                continue
            branch_prob = prob * r.probability
            if branch_prob > prob_tol:
                walk(r.state, depth + 1, outcomes + (outcome,), branch_prob)

    walk(state, 0, (), 1.0)
    return BranchTree(specs, tuple(leaves))


# -- spectra, cuts, comparisons -------------------------------------------

def reduced_density(state: PureState, keep) -> np.ndarray:
    """Density matrix of the listed qubits, rows ordered by ``keep``."""
    keep = [state.qubit_of(q) for q in keep]
    if len(set(keep)) != len(keep):
        raise InputError("duplicate qubits in keep list")
    k = len(keep)
    rest = [q for q in range(state.n) if q not in keep]
    m = np.transpose(state.tensor(), keep + rest).reshape(2**k, -1)
    return m @ m.conj().T


def entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in bits."""
    evals = np.linalg.eigvalsh(rho)
    evals = np.clip(evals.real, 0.0, 1.0)
    evals = evals[evals > 1e-15]
    return float(-(evals * np.log2(evals)).sum())


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def schmidt_coefficients(state: PureState, part) -> np.ndarray:
    """Singular values across the cut (part | rest), descending."""
    part = [state.qubit_of(q) for q in part]
    if not part or len(part) == state.n:
        raise InputError("bipartition must be a proper nonempty subset")
    rest = [q for q in range(state.n) if q not in part]
    m = np.transpose(state.tensor(), part + rest).reshape(2 ** len(part), -1)
    return np.linalg.svd(m, compute_uv=False)


def schmidt_rank(state: PureState, part, tol: float = RANK_TOL) -> int:
    return int((schmidt_coefficients(state, part) > tol).sum())


def fidelity(a: PureState, b: PureState) -> float:
    if a.n != b.n:
        raise InputError("states act on different qubit counts")
    return float(abs(np.vdot(a.amps, b.amps)))


def states_equal(a: PureState, b: PureState, tol: float = NORM_TOL) -> bool:
    """Equality up to global phase."""
    return fidelity(a, b) > 1 - tol


def subsystem_state(state: PureState, keep, tol: float = 1e-9) -> PureState:
    """Extract the pure state of ``keep`` when it is unentangled with the rest."""
    rho = reduced_density(state, keep)
    evals, evecs = np.linalg.eigh(rho)
    if evals[-1] < 1 - tol:
        raise InputError(
            f"subsystem is not pure (largest eigenvalue {evals[-1]:.6f})"
        )
    vec = evecs[:, -1]
    return PureState(vec / np.linalg.norm(vec))


# -- persistence ----------------------------------------------------------

def dump_state(state: PureState, path) -> None:
    """Write the raw amplitudes: 16-byte header (magic, format version,
    qubit count, reserved word) then little-endian complex128 pairs."""
    header = MAGIC + struct.pack("<III", DUMP_VERSION, state.n, 0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.amps, dtype="<c16").tobytes())


def load_state(path) -> PureState:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != MAGIC:
            raise InputError(f"{path}: not a state dump")
        version, n, _ = struct.unpack("<III", header[4:])
        if version != DUMP_VERSION:
            raise InputError(f"{path}: unsupported dump version {version}")
        raw = fh.read()
    amps = np.frombuffer(raw, dtype="<c16")
    if amps.size != 2**n:
        raise InputError(f"{path}: expected {2**n} amplitudes, found {amps.size}")
    return PureState(amps.astype(complex))


def summary(state: PureState, rank_profile_limit: int = 12) -> dict:
    """JSON-ready digest: norm, per-qubit marginal entropies, and the
    Schmidt ranks of all contiguous cuts (prefix | suffix)."""
    n = state.n
    out = {
        "n_qubits": n,
        "norm": float(np.linalg.norm(state.amps)),
        "qubit_entropies": [
            round(entropy(reduced_density(state, [q])), 12) for q in range(n)
        ],
    }
    if n >= 2:
        out["contiguous_cut_ranks"] = [
            schmidt_rank(state, list(range(k))) for k in range(1, n)
        ]
    if 2 <= n <= rank_profile_limit:
        best = 1
        for part in proper_bipartitions(n):
            best = max(best, schmidt_rank(state, part))
        out["max_bipartition_rank"] = best
    return out


def proper_bipartitions(n: int):
    """Yield one side of every proper bipartition, always including qubit 0."""
    for mask in range(2 ** (n - 1)):
        part = [0] + [q for q in range(1, n) if (mask >> (q - 1)) & 1]
        if len(part) < n:
            yield part
