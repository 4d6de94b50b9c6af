"""Entanglement certification and quantitative bounds.

The functions here never assert more than they can check: Schmidt-measure
results separate the rank lower bound (exact) from the decomposition upper
bound (exact for known forms, numerical evidence when it comes from the
alternating-least-squares fitter), and persistency claims are marked exact
only when the two meet.  Basis-restricted search results say so.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import protocols as pr
from . import statevec as sv
from .errors import InputError, ResourceLimitError, TargetMissError
from .lattice import Cluster

EXHAUSTIVE_CUT_LIMIT = 12
RANDOM_CUTS = 1000
ALS_FIT_TOL = 1e-6
ALS_NO_FIT_TOL = 1e-3
ALS_RESTARTS = 64
PRODUCT_TOL = 1e-9


# -- product and Bell detection ----------------------------------------------

def is_fully_product(s: sv.PureState, tol: float = PRODUCT_TOL) -> bool:
    """True when every single-qubit marginal has purity at least 1 - tol."""
    return all(
        sv.purity(sv.reduced_density(s, [q])) >= 1 - tol for q in range(s.n)
    )


def is_bell_pair(s: sv.PureState, tol: float = PRODUCT_TOL) -> bool:
    """Maximal two-qubit entanglement: both marginal entropies near one.

    Marginal spectra are invariant under local unitaries, so this accepts
    any state a Bell state can be rotated into one qubit at a time.
    """
    if s.n != 2:
        raise InputError(f"is_bell_pair expects a 2-qubit state, got {s.n} qubits")
    return bell_deviation(s) <= tol


def bell_deviation(s: sv.PureState) -> float:
    """How far a 2-qubit state is from maximal entanglement, in bits."""
    if s.n != 2:
        raise InputError(f"bell_deviation expects a 2-qubit state, got {s.n} qubits")
    return max(
        1 - sv.entropy(sv.reduced_density(s, [0])),
        1 - sv.entropy(sv.reduced_density(s, [1])),
    )


# -- Schmidt-measure bounds ----------------------------------------------------

def max_bipartition_rank(s: sv.PureState, tol: float = sv.RANK_TOL,
                         seed: int = 0) -> tuple[int, list[int]]:
    """Largest Schmidt rank over bipartitions, with the cut attaining it.

    Exhaustive for up to EXHAUSTIVE_CUT_LIMIT qubits.  Above that, checks
    all contiguous cuts plus RANDOM_CUTS seeded random ones; the result is
    then still a valid lower bound on the maximum, just possibly loose.
    """
    n = s.n
    if n < 2:
        return 1, []
    best, best_part = 0, [0]
    if n <= EXHAUSTIVE_CUT_LIMIT:
        parts = sv.proper_bipartitions(n)
    else:
        rng = np.random.default_rng(seed)
        seen = set()
        sampled = []
        for k in range(1, n):
            sampled.append(tuple(range(k)))
        for _ in range(RANDOM_CUTS):
            size = int(rng.integers(1, n))
            part = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
            if part not in seen and len(part) < n:
                seen.add(part)
                sampled.append(part)
        parts = [list(p) for p in sampled]
    for part in parts:
        r = sv.schmidt_rank(s, part, tol)
        if r > best:
            best, best_part = r, list(part)
    return best, best_part


@dataclass
class AlsFit:
    r: int
    residual: float
    status: str                      # FIT | NO_FIT | INCONCLUSIVE
    factors: np.ndarray | None       # best (r, n, 2) factors found; a valid
    iterations: int                  # decomposition only when status is FIT

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "residual": float(self.residual),
            "status": self.status,
            "iterations": self.iterations,
        }


def _als_residual(psi: np.ndarray, factors: np.ndarray) -> float:
    approx = _als_reconstruct(factors)
    return float(np.linalg.norm(psi - approx))


def _als_reconstruct(factors: np.ndarray) -> np.ndarray:
    r, n, _ = factors.shape
    acc = np.ones((r, 1), dtype=complex)
    for q in range(n):
        acc = (acc[:, :, None] * factors[:, q, None, :]).reshape(r, -1)
    return acc.sum(axis=0)


def _khatri_rao_others(factors: np.ndarray, skip: int) -> np.ndarray:
    """Row-wise Kronecker product of all factor columns except ``skip``;
    rows index the r terms."""
    r, n, _ = factors.shape
    acc = np.ones((r, 1), dtype=complex)
    for q in range(n):
        if q == skip:
            continue
        acc = (acc[:, :, None] * factors[:, q, None, :]).reshape(r, -1)
    return acc


def tensor_rank_als(s: sv.PureState, r: int, restarts: int = ALS_RESTARTS,
                    max_iters: int = 1500, tol: float = ALS_FIT_TOL,
                    seed: int = 0, warm: np.ndarray | None = None) -> AlsFit:
    """Fit ``r`` product terms to the state by alternating least squares.

    Each sweep solves, per qubit, the exact least-squares update of that
    qubit's factor block with everything else held fixed, so the residual
    never increases.  A restart stops when the residual improves by less
    than 1e-12 over 50 sweeps.  Statuses: FIT below ``tol``, NO_FIT above
    ALS_NO_FIT_TOL, INCONCLUSIVE in the band between.
    """
    if r < 1:
        raise InputError("term count r must be at least 1")
    n = s.n
    if n > EXHAUSTIVE_CUT_LIMIT:
        raise ResourceLimitError(
            f"ALS is limited to {EXHAUSTIVE_CUT_LIMIT} qubits, state has {n}"
        )
    psi = s.amps / np.linalg.norm(s.amps)
    tensor = psi.reshape((2,) * n)
    rng = np.random.default_rng(seed)
    best_res, best_fac, best_iters = np.inf, None, 0
    starts: list[np.ndarray] = []
    if warm is not None:
        base = np.asarray(warm, dtype=complex)
        if base.shape[0] > r:
            raise InputError("warm start has more terms than r")
        pad = rng.normal(size=(r - base.shape[0], n, 2)) * 1e-3 \
            + 1j * rng.normal(size=(r - base.shape[0], n, 2)) * 1e-3
        starts.append(np.concatenate([base, pad]) if r > base.shape[0] else base.copy())
    while len(starts) < restarts:
        f = rng.normal(size=(r, n, 2)) + 1j * rng.normal(size=(r, n, 2))
        starts.append(f / np.linalg.norm(f, axis=2, keepdims=True))

    for factors in starts:
        history: list[float] = []
        res = _als_residual(psi, factors)
        sweeps = 0
        for sweeps in range(1, max_iters + 1):
            for q in range(n):
                k = _khatri_rao_others(factors, q)       # (r, 2^{n-1})
                unfold = np.moveaxis(tensor, q, 0).reshape(2, -1)
                sol, *_ = np.linalg.lstsq(k.T, unfold.T, rcond=None)
                factors[:, q, :] = sol                   # (r, 2)
            res = _als_residual(psi, factors)
            history.append(res)
            if res < tol * 1e-2:
                break
            if len(history) > 50 and history[-51] - res < 1e-12:
                break
        if res < best_res:
            best_res, best_fac, best_iters = res, factors.copy(), sweeps
        if best_res < tol * 1e-2:
            break

    if best_res < tol:
        status = "FIT"
    elif best_res > ALS_NO_FIT_TOL:
        status = "NO_FIT"
    else:
        status = "INCONCLUSIVE"
    return AlsFit(r, best_res, status, best_fac, best_iters)


@dataclass
class SchmidtBounds:
    lower: float                     # log2(max bipartite rank), exact
    upper: float                     # log2(best known product-term count)
    lower_cut: list[int]
    upper_terms: int
    method: str                      # how the upper bound was obtained
    claimed: float | None = None     # reference value for known families
    als_curve: list[AlsFit] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "lower": float(self.lower),
            "upper": float(self.upper),
            "lower_cut": self.lower_cut,
            "upper_terms": self.upper_terms,
            "method": self.method,
            "claimed": self.claimed,
            "als_curve": [f.to_json() for f in self.als_curve],
        }


def _looks_like_chain(s: sv.PureState, tol: float) -> bool:
    c = s.cluster
    if c is None or c.dim != 1 or c.n != s.n:
        return False
    return sv.fidelity(s, sv.chain_state(s.n)) > 1 - tol


def schmidt_bounds(s: sv.PureState, seed: int = 0, restarts: int = ALS_RESTARTS,
                   tol: float = PRODUCT_TOL) -> SchmidtBounds:
    """Bracket the Schmidt measure (log2 of the minimal product-term count).

    The lower bound is the exact log2 of the maximal bipartite Schmidt
    rank.  The upper bound comes from a decomposition: one term for
    product states, two for GHZ, the halving recursion for chain states,
    and otherwise the smallest term count the ALS fitter certifies.  For
    W states the reference value log2(N) is attached as ``claimed``.
    """
    n = s.n
    rank, cut = max_bipartition_rank(s, seed=seed)
    lower = math.log2(rank) if rank else 0.0

    claimed = None
    if n >= 2 and sv.fidelity(s, sv.w_state(n)) > 1 - tol:
        claimed = math.log2(n)

    if is_fully_product(s, tol):
        return SchmidtBounds(lower, 0.0, cut, 1, "product", claimed)
    if n >= 2 and sv.fidelity(s, sv.ghz_state(n)) > 1 - tol:
        return SchmidtBounds(lower, 1.0, cut, 2, "ghz-two-terms", claimed)
    if _looks_like_chain(s, tol):
        terms = 2 ** (n // 2)
        return SchmidtBounds(lower, float(n // 2), cut, terms, "chain-recursion",
                             claimed)

    curve: list[AlsFit] = []
    warm = None
    r = max(rank, 1)
    upper_terms = 2 ** (n - 1)
    upper = float(n - 1)
    method = "als-cap"
    while r <= 2 ** (n - 1):
        fit = tensor_rank_als(s, r, restarts=restarts, seed=seed, warm=warm)
        curve.append(fit)
        if fit.status == "FIT":
            upper_terms, upper, method = r, math.log2(r), "als"
            break
        warm = fit.factors
        r += 1
    return SchmidtBounds(lower, upper, cut, upper_terms, method, claimed, curve)


def als_curve(s: sv.PureState, r_max: int, restarts: int = ALS_RESTARTS,
              seed: int = 0) -> list[AlsFit]:
    """Residual-vs-r curve with warm starts, so it is non-increasing."""
    out: list[AlsFit] = []
    warm = None
    for r in range(1, r_max + 1):
        fit = tensor_rank_als(s, r, restarts=restarts, seed=seed, warm=warm)
        out.append(fit)
        if fit.factors is not None:
            warm = fit.factors
    return out


# -- persistency ---------------------------------------------------------------

@dataclass
class PersistencyCertificate:
    lower: int
    upper: int
    exact: bool
    strategy: list[dict]
    branches: int

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "exact": self.exact,
            "strategy": self.strategy,
            "branches": self.branches,
        }


def _as_specs(strategy) -> list[sv.MeasurementSpec]:
    if isinstance(strategy, pr.ProtocolScript):
        strategy = strategy.steps
    specs = []
    for item in strategy:
        if isinstance(item, sv.MeasurementSpec):
            specs.append(item)
        elif isinstance(item, pr.ProtocolStep):
            specs.append(sv.MeasurementSpec(item.site, item.basis))
        else:
            site, basis = item
            specs.append(sv.MeasurementSpec(site, basis))
    return specs


def persistency_certify(s: sv.PureState, strategy,
                        tol: float = PRODUCT_TOL) -> PersistencyCertificate:
    """Certify persistency-of-entanglement bounds from a strategy.

    The upper bound is the strategy length, accepted only when every
    outcome branch of the strategy leaves a fully product state; the
    lower bound is the Schmidt-measure rank bound rounded up.  ``exact``
    marks agreement.  A strategy longer than n-1 is rejected up front
    since measuring all but one qubit always disentangles.
    """
    specs = _as_specs(strategy)
    if not specs:
        raise InputError("strategy holds no measurements")
    if len(specs) > s.n - 1:
        raise InputError(
            f"strategy of {len(specs)} measurements on {s.n} qubits is never "
            "minimal: n - 1 always suffice"
        )
    tree = sv.branch_all(s, specs)
    bad = [leaf for leaf in tree if not is_fully_product(leaf.state, tol)]
    if bad:
        worst = bad[0]
        raise TargetMissError(
            f"strategy does not disentangle: branch "
            f"{''.join(map(str, worst.outcomes))} "
            f"(probability {worst.probability:.4f}) is still entangled "
            f"({len(bad)} of {len(tree.leaves)} branches fail)"
        )
    rank, _ = max_bipartition_rank(s)
    lower = math.ceil(round(math.log2(rank), 9)) if rank > 1 else 0
    upper = len(specs)
    return PersistencyCertificate(
        lower, upper, lower == upper,
        [{"qubit": list(sp.qubit) if isinstance(sp.qubit, tuple) else sp.qubit,
          "basis": sp.basis if isinstance(sp.basis, str) else list(map(float, sp.basis))}
         for sp in specs],
        len(tree.leaves),
    )


def _phase_key(state: sv.PureState) -> bytes:
    amps = state.amps
    idx = int(np.argmax(np.abs(amps)))
    ref = amps[idx]
    fixed = amps * (np.conj(ref) / abs(ref))
    return np.round(fixed, 9).tobytes()


def persistency_search_pauli(s: sv.PureState, k_max: int | None = None,
                             tol: float = PRODUCT_TOL):
    """Shallowest adaptive Pauli strategy that disentangles every branch.

    Minimax over measurement choices: a strategy may pick its next qubit
    and basis per outcome history.  Returns ``{"depth": d, "tree": ...}``
    where each tree node is ``{"qubit": q, "basis": a, "next": {outcome:
    subtree-or-null}}``, or None when no strategy of depth at most
    ``k_max`` exists within the Pauli restriction (arbitrary one-qubit
    bases could still do better).
    """
    n = s.n
    if n > 8:
        raise ResourceLimitError("adaptive persistency search is limited to 8 qubits")
    if k_max is None:
        k_max = n - 1
    if is_fully_product(s, tol):
        return {"depth": 0, "tree": None, "basis_restricted": True}
    memo: dict[tuple[bytes, int], dict | None | bool] = {}

    def attempt(state: sv.PureState, budget: int):
        if is_fully_product(state, tol):
            return {}
        if budget == 0:
            return None
        key = (_phase_key(state), budget)
        if key in memo:
            return memo[key]
        memo[key] = None
        found = None
        for q in range(n):
            if sv.purity(sv.reduced_density(state, [q])) >= 1 - tol:
                continue  # measuring an unentangled qubit is wasted depth
            for axis in ("Z", "X", "Y"):
                node = {"qubit": q, "basis": axis, "next": {}}
                ok = True
                for outcome in (0, 1):
                    try:
                        rec = sv.measure(state, sv.MeasurementSpec(q, axis),
                                         forced=outcome)
                    except InputError:
                        node["next"][outcome] = None
                        continue
                    sub = attempt(rec.state, budget - 1)
                    if sub is None:
                        ok = False
                        break
                    node["next"][outcome] = sub or None
                if ok:
                    found = node
                    break
            if found:
                break
        memo[key] = found
        return found

    for depth in range(1, k_max + 1):
        tree = attempt(s, depth)
        if tree is not None:
            return {"depth": depth, "tree": tree, "basis_restricted": True}
    return None


# -- maximal connectedness -------------------------------------------------------

@dataclass
class PairResult:
    pair: tuple
    protocol: str
    all_branches_bell: bool
    worst_deviation: float
    branches: int

    def to_json(self) -> dict:
        pair = [list(p) if isinstance(p, tuple) else p for p in self.pair]
        return {
            "pair": pair,
            "protocol": self.protocol,
            "all_branches_bell": self.all_branches_bell,
            "worst_deviation": float(self.worst_deviation),
            "branches": self.branches,
        }


@dataclass
class ConnectednessReport:
    connected: bool
    pairs: list[PairResult]
    method: str

    def to_json(self) -> dict:
        return {
            "connected": self.connected,
            "method": self.method,
            "pairs": [p.to_json() for p in self.pairs],
        }


def check_maximal_connectedness(cluster: Cluster | None = None,
                                s: sv.PureState | None = None,
                                backend: str = "auto",
                                tol: float = 1e-10) -> ConnectednessReport:
    """Certify that every qubit pair can be driven into a Bell state.

    With a cluster, runs the Bell-projection protocol on all unordered
    site pairs and demands every branch hit the Bell target.  With a
    plain dense state, searches exhaustively over adaptive Pauli
    strategies per pair instead (enough to reproduce the W-state
    counterexample; a negative verdict is therefore Pauli-restricted).
    """
    if (cluster is None) == (s is None):
        raise InputError("pass exactly one of cluster or state")
    pairs: list[PairResult] = []
    if cluster is not None:
        for a, b in itertools.combinations(cluster.sites, 2):
            res = pr.bell_project_pair(cluster, a, b, backend=backend)
            worst = 0.0
            for br in res.branches:
                if br.fidelity is not None:
                    worst = max(worst, 1 - br.fidelity)
                elif not br.ok:
                    worst = 1.0
            pairs.append(PairResult((a, b), "bell_project_pair",
                                    res.all_ok and worst <= tol, worst,
                                    len(res.branches)))
        method = "bell-projection protocol, all branches"
    else:
        if s.n > 8:
            raise ResourceLimitError("pairwise Pauli search is limited to 8 qubits")
        for a, b in itertools.combinations(range(s.n), 2):
            found, worst, count = _pair_bell_search(s, a, b, tol)
            pairs.append(PairResult((a, b), "adaptive-pauli-search",
                                    found, worst, count))
        method = "exhaustive adaptive Pauli search (basis-restricted)"
    return ConnectednessReport(all(p.all_branches_bell for p in pairs),
                               pairs, method)


def _pair_bell_search(s: sv.PureState, a: int, b: int, tol: float):
    """Exhaustive adaptive search for a strategy whose every branch leaves
    (a, b) maximally entangled.  Returns (found, worst deviation of the
    best strategy, leaf count explored)."""
    n = s.n
    leaves = [0]
    memo: dict[tuple[bytes, frozenset], tuple[bool, float]] = {}

    def attempt(state: sv.PureState, remaining: frozenset) -> tuple[bool, float]:
        if not remaining:
            leaves[0] += 1
            dev = bell_deviation(sv.subsystem_state(state, [a, b]))
            return dev <= tol, dev
        key = (_phase_key(state), remaining)
        if key in memo:
            return memo[key]
        best = (False, np.inf)
        for q in sorted(remaining):
            for axis in ("Z", "X", "Y"):
                ok, worst = True, 0.0
                for outcome in (0, 1):
                    try:
                        rec = sv.measure(state, sv.MeasurementSpec(q, axis),
                                         forced=outcome)
                    except InputError:
                        continue
                    sub_ok, sub_worst = attempt(rec.state, remaining - {q})
                    worst = max(worst, sub_worst)
                    if not sub_ok:
                        ok = False
                        break
                if ok:
                    memo[key] = (True, worst)
                    return True, worst
                best = (False, min(best[1], worst))
        memo[key] = best
        return best

    # the pair subsystem is only defined once every other qubit is measured
    ok, worst = attempt(s, frozenset(q for q in range(n) if q not in (a, b)))
    return ok, float(worst if np.isfinite(worst) else 1.0), leaves[0]
