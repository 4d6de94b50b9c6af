"""Cross-cutting analyses: lattice summaries, the phi sweep, the
dense/tableau cross-check harness, and construction benchmarks."""

from __future__ import annotations

import time

import numpy as np

from . import entanglement as en
from . import statevec as sv
from . import stabilizer as st
from .errors import EmptyLatticeError, InputError
from .lattice import Cluster, OccupationSet, decompose, random_connected

SWEEP_COLUMNS = (
    "phi",
    "mean_marginal_entropy",
    "half_cut_entropy",
    "max_cut_entropy",
    "is_product",
)


def build_summary(occ: OccupationSet) -> dict:
    """Connected-component digest of an occupation pattern."""
    if len(occ) == 0:
        raise EmptyLatticeError("occupation pattern holds no sites")
    parts = decompose(occ)
    return {
        "dim": occ.dim,
        "n_sites": len(occ),
        "n_clusters": len(parts),
        "clusters": [
            {
                "n": c.n,
                "min_site": list(c.sites[0]),
                "max_site": list(c.sites[-1]),
                "interior_sites": len(c.interior_sites()),
                "boundary_sites": c.n - len(c.interior_sites()),
                "edges": len(c.forward_edges()),
            }
            for c in parts
        ],
    }


def sweep_phi(n: int, steps: int, tol: float = 1e-10) -> dict:
    """Entanglement of the chain's evolved state at phi = 2 pi k / steps.

    Emits one row per k = 0..steps (both endpoints included).  Besides the
    contiguous half cut, the max-bipartition entropy is reported, since the
    half cut alone understates multipartite content: at phi = pi the rank
    across any contiguous cut is at most 2 while alternating-site cuts
    reach the full 2^(n//2).
    """
    if n < 2:
        raise InputError("sweep needs at least a 2-qubit chain")
    if steps < 1:
        raise InputError("steps must be positive")
    cluster = Cluster.chain(n)
    plus = sv.init_plus(cluster)
    half = list(range(n // 2))
    rows = []
    for k in range(steps + 1):
        phi = 2 * np.pi * k / steps
        state = sv.evolve(plus, phi)
        marginal = float(np.mean([
            sv.entropy(sv.reduced_density(state, [q])) for q in range(n)
        ]))
        half_ent = sv.entropy(sv.reduced_density(state, half))
        max_ent = max(
            sv.entropy(sv.reduced_density(state, part))
            for part in sv.proper_bipartitions(n)
        )
        rows.append({
            "phi": round(phi, 12),
            "mean_marginal_entropy": round(marginal, 12),
            "half_cut_entropy": round(half_ent, 12),
            "max_cut_entropy": round(max_ent, 12),
            "is_product": int(en.is_fully_product(state, tol)),
        })
    return {"n": n, "steps": steps, "columns": list(SWEEP_COLUMNS), "rows": rows}


def _random_cluster_and_script(rng: np.random.Generator, max_qubits: int):
    dim = int(rng.integers(1, 4))
    n = int(rng.integers(2, max_qubits + 1))
    cluster = random_connected(dim, n, rng)
    length = int(rng.integers(1, n + 1))
    sites = [cluster.sites[i] for i in rng.choice(n, size=length, replace=False)]
    axes = [("X", "Y", "Z")[i] for i in rng.integers(0, 3, size=length)]
    return cluster, list(zip(sites, axes))


def crosscheck_random(trials: int = 1000, max_qubits: int = 10,
                      seed: int = 0) -> dict:
    """Drive both backends through seeded random Pauli sequences.

    Each trial builds a random connected cluster, measures a random
    site/axis sequence on the tableau and on the dense state with
    identically seeded outcome streams, and compares determinism flags,
    outcomes, and probabilities.  Deterministic measurements draw nothing
    from either stream, so the streams stay aligned by construction.
    """
    mismatches = []
    for i in range(trials):
        setup_rng = np.random.default_rng((seed, i))
        cluster, script = _random_cluster_and_script(setup_rng, max_qubits)
        tab = st.cluster_tableau(cluster)
        psi = sv.cluster_state(cluster)
        rng_t = np.random.default_rng((seed, i, 17))
        rng_d = np.random.default_rng((seed, i, 17))
        for step_no, (site, axis) in enumerate(script):
            rec = tab.measure_site(site, axis, rng=rng_t)
            res = sv.measure(psi, sv.MeasurementSpec(site, axis), rng=rng_d)
            psi = res.state
            dense_det = res.probability > 1 - 1e-9
            if (
                rec.outcome != res.outcome
                or rec.deterministic != dense_det
                or abs(rec.probability - res.probability) > 1e-9
            ):
                mismatches.append({
                    "trial": i,
                    "step": step_no,
                    "site": list(site),
                    "axis": axis,
                    "tableau": {"outcome": rec.outcome,
                                "deterministic": rec.deterministic,
                                "probability": rec.probability},
                    "dense": {"outcome": res.outcome,
                              "deterministic": dense_det,
                              "probability": res.probability},
                })
                break
    return {
        "trials": trials,
        "max_qubits": max_qubits,
        "seed": seed,
        "agree": not mismatches,
        "mismatches": mismatches,
    }


MEASURE_BENCH_LIMIT = 20000   # measuring needs destabilizers, 4x the memory


def bench(chain_sizes=(1000, 10000, 100000), block_sides=(50, 100, 300),
          measurements: int = 2000, seed: int = 0) -> dict:
    """Construction and measurement-throughput timings on the tableau side.

    Large tableaus are dropped before the next one is built so peak memory
    stays bounded by a single instance; measurement throughput is skipped
    above MEASURE_BENCH_LIMIT qubits where the destabilizer half would
    dominate memory.
    """
    rows = []
    rng = np.random.default_rng(seed)
    for n in chain_sizes:
        t0 = time.perf_counter()
        tab = st.cluster_tableau(Cluster.chain(int(n)))
        built = time.perf_counter() - t0
        m = min(measurements, 4 * int(n)) if int(n) <= MEASURE_BENCH_LIMIT else 0
        t0 = time.perf_counter()
        for _ in range(m):
            q = int(rng.integers(int(n)))
            axis = ("X", "Y", "Z")[int(rng.integers(3))]
            tab.measure_site(q, axis, rng=rng)
        meas = time.perf_counter() - t0
        rows.append({
            "kind": "chain", "n": int(n),
            "construct_seconds": round(built, 6),
            "measurements": m,
            "measure_seconds": round(meas, 6),
            "measurements_per_second": round(m / meas, 1) if m and meas > 0 else None,
        })
        del tab
    for side in block_sides:
        shape = (int(side), int(side))
        t0 = time.perf_counter()
        tab = st.cluster_tableau(Cluster.block(shape))
        built = time.perf_counter() - t0
        rows.append({
            "kind": f"block-{side}x{side}", "n": int(side) ** 2,
            "construct_seconds": round(built, 6),
            "measurements": 0,
            "measure_seconds": 0.0,
            "measurements_per_second": None,
        })
        del tab
    return {"seed": seed, "rows": rows}
