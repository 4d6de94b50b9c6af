"""Measurement protocols and their branch-by-branch certification.

Every protocol here follows the same shape: build a measurement script,
enumerate (or sample) the outcome branches on the stabilizer backend,
derive the local corrections each branch needs, and verify the corrected
state against the protocol's target.  When the register is small enough
the dense backend re-runs each branch independently as a cross-check.

Branch outcomes are reported in script order, outcome 0 meaning the +1
eigenvalue.  Corrections are single-qubit unitaries keyed by site; a
branch is ``ok`` only when its corrected state hits the target exactly
(up to the requested tolerance).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from . import statevec as sv
from . import stabilizer as st
from .errors import EmptyLatticeError, InputError, ResourceLimitError, TargetMissError
from .lattice import Cluster, Path, Site, find_path

DENSE_LIMIT = 16          # auto backend: cross-check densely up to this size
BRANCH_LIMIT = 4096
FID_TOL = 1e-10

# Corrections for removing the second qubit of a chain with an X measurement,
# applied to the first qubit (solved numerically, then frozen; see tests).
CHAIN_REDUCE_CORRECTIONS = {
    0: (np.eye(2) + 1j * sv.PAULI["Y"]) / np.sqrt(2),
    1: (sv.PAULI["X"] + sv.PAULI["Z"]) / np.sqrt(2),
}


@dataclass(frozen=True)
class ProtocolStep:
    site: object
    basis: object = "Z"

    def to_json(self) -> dict:
        site = list(self.site) if isinstance(self.site, tuple) else self.site
        if isinstance(self.basis, str):
            basis = self.basis
        else:
            arr = np.asarray(self.basis)
            if arr.shape == (2, 2):
                basis = {"pair": [[[float(c.real), float(c.imag)] for c in row] for row in arr.astype(complex)]}
            else:
                basis = [float(c) for c in arr]
        return {"qubit": site, "basis": basis}

    @classmethod
    def from_json(cls, obj: dict) -> "ProtocolStep":
        if "qubit" not in obj:
            raise InputError("protocol step needs a 'qubit' field")
        site = obj["qubit"]
        site = tuple(int(c) for c in site) if isinstance(site, (list, tuple)) else int(site)
        basis = obj.get("basis", "Z")
        if isinstance(basis, dict):
            if "pair" not in basis:
                raise InputError("explicit basis must carry a 'pair' entry")
            pair = np.array([[complex(re, im) for re, im in row] for row in basis["pair"]])
            basis = pair
        elif isinstance(basis, (list, tuple)):
            basis = tuple(float(c) for c in basis)
        return cls(site, basis)


@dataclass(frozen=True)
class ProtocolScript:
    name: str
    steps: tuple[ProtocolStep, ...]

    def __post_init__(self):
        seen = set()
        for s in self.steps:
            if s.site in seen:
                raise InputError(f"script measures qubit {s.site} twice")
            seen.add(s.site)

    def to_json(self) -> dict:
        return {"name": self.name, "steps": [s.to_json() for s in self.steps]}

    @classmethod
    def from_json(cls, obj: dict) -> "ProtocolScript":
        if not isinstance(obj, dict) or "steps" not in obj:
            raise InputError("protocol script needs a 'steps' list")
        steps = tuple(ProtocolStep.from_json(s) for s in obj["steps"])
        return cls(str(obj.get("name", "")), steps)

    @classmethod
    def from_text(cls, text: str) -> "ProtocolScript":
        try:
            return cls.from_json(json.loads(text))
        except json.JSONDecodeError as e:
            raise InputError(f"protocol script is not valid JSON: {e}")


@dataclass
class BranchReport:
    outcomes: tuple[int, ...]
    probability: float
    corrections: list[tuple[object, np.ndarray]]
    ok: bool
    fidelity: float | None = None
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "outcomes": "".join(str(b) for b in self.outcomes),
            "probability": float(self.probability),
            "ok": bool(self.ok),
            "fidelity": None if self.fidelity is None else float(self.fidelity),
            "corrections": [
                {
                    "qubit": list(site) if isinstance(site, tuple) else site,
                    "matrix": [[[float(c.real), float(c.imag)] for c in row] for row in np.asarray(m)],
                }
                for site, m in self.corrections
            ],
            "detail": self.detail,
        }


@dataclass
class ProtocolResult:
    name: str
    target: str
    script: ProtocolScript
    branches: list[BranchReport]
    extras: dict = field(default_factory=dict)

    @property
    def all_ok(self) -> bool:
        return bool(self.branches) and all(b.ok for b in self.branches)

    def failing(self) -> list[BranchReport]:
        return [b for b in self.branches if not b.ok]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "target": self.target,
            "all_ok": self.all_ok,
            "n_branches": len(self.branches),
            "branches": [b.to_json() for b in self.branches],
            "extras": self.extras,
            "script": self.script.to_json(),
        }

    def require_ok(self) -> "ProtocolResult":
        if not self.all_ok:
            bad = self.failing()[:4]
            lines = ", ".join(
                "".join(map(str, b.outcomes)) + (f" (fid {b.fidelity:.6f})" if b.fidelity is not None else "")
                for b in bad
            )
            raise TargetMissError(
                f"{self.name}: {len(self.failing())} of {len(self.branches)} branches "
                f"missed the target ({lines})"
            )
        return self


# -- branch runners ----------------------------------------------------------

def _axis_of(basis) -> str:
    if not (isinstance(basis, str) and basis.upper() in ("X", "Y", "Z")):
        raise InputError("stabilizer branches need X/Y/Z measurement bases")
    return basis.upper()


def enumerate_branches_tableau(tab: st.StabilizerTableau, steps, max_branches: int = BRANCH_LIMIT):
    """All realizable (outcomes, collapsed tableau) pairs of a step list."""
    results: list[tuple[tuple[int, ...], st.StabilizerTableau, float]] = []

    def walk(cur, i, outcomes, prob):
        if len(results) > max_branches:
            raise ResourceLimitError(
                f"branch enumeration exceeded {max_branches} branches"
            )
        if i == len(steps):
            results.append((outcomes, cur, prob))
            return
        site, basis = steps[i].site, _axis_of(steps[i].basis)
        for outcome in (0, 1):
            t = cur.copy()
            try:
                rec = t.measure_site(site, basis, forced=outcome)
            except InputError:
                continue
            walk(t, i + 1, outcomes + (outcome,), prob * rec.probability)
            if rec.deterministic:
                break  # outcome 1 of a deterministic step cannot occur

    walk(tab.copy(), 0, (), 1.0)
    return results


def sample_branches_tableau(tab: st.StabilizerTableau, steps, samples: int, seed: int = 0):
    """Seeded random branches, deduplicated by outcome tuple."""
    seen = {}
    for k in range(samples):
        rng = np.random.default_rng((seed, k))
        t = tab.copy()
        outcomes = []
        prob = 1.0
        for step in steps:
            rec = t.measure_site(step.site, _axis_of(step.basis), rng=rng)
            outcomes.append(rec.outcome)
            prob *= rec.probability
        seen.setdefault(tuple(outcomes), (t, prob))
    return [(o, t, p) for o, (t, p) in sorted(seen.items())]


def run_dense_forced(state: sv.PureState, steps, outcomes) -> tuple[sv.PureState, float]:
    prob = 1.0
    for step, out in zip(steps, outcomes):
        r = sv.measure(state, sv.MeasurementSpec(step.site, step.basis), forced=int(out))
        state, prob = r.state, prob * r.probability
    return state, prob


def _cliff_corrections(keep_sites, cliffs) -> list[tuple[object, np.ndarray]]:
    out = []
    for j, site in enumerate(keep_sites):
        c = cliffs[j]
        if c.pre_x == (1, 0, 0) and c.pre_z == (0, 1, 0):
            continue
        out.append((site, c.matrix()))
    return out


def _dense_check(cluster, steps, outcomes, corrections, keep_sites, target: sv.PureState):
    psi = sv.cluster_state(cluster)
    psi, _ = run_dense_forced(psi, steps, outcomes)
    psi = sv.apply_local_many(psi, corrections)
    sub = sv.subsystem_state(psi, keep_sites)
    return sv.fidelity(sub, target)


# -- protocols ---------------------------------------------------------------

def _resolve_backend(backend: str, n: int) -> bool:
    """Whether to run the dense cross-check."""
    if backend == "auto":
        return n <= DENSE_LIMIT
    if backend == "dense":
        if n > sv.DEFAULT_MAX_QUBITS:
            raise ResourceLimitError(f"dense backend limited to {sv.DEFAULT_MAX_QUBITS} qubits")
        return True
    if backend == "tableau":
        return False
    raise InputError(f"unknown backend {backend!r} (use dense, tableau, or auto)")


def bell_project_pair(cluster: Cluster, a, b, backend: str = "auto",
                      max_branches: int = BRANCH_LIMIT) -> ProtocolResult:
    """Project two sites into a Bell pair: measure Z off a connecting path
    and X on the path's interior.  Certifies every branch."""
    a = cluster.sites[int(a)] if isinstance(a, (int, np.integer)) else tuple(int(c) for c in a)
    b = cluster.sites[int(b)] if isinstance(b, (int, np.integer)) else tuple(int(c) for c in b)
    if a == b:
        raise InputError("bell projection needs two distinct sites")
    path = find_path(cluster, a, b)
    if not path.is_induced(cluster):
        raise InputError(f"no induced path between {a} and {b}")
    inner = path.sites[1:-1]
    off = [s for s in cluster.sites if s not in path.sites]
    steps = tuple(
        [ProtocolStep(s, "Z") for s in off] + [ProtocolStep(s, "X") for s in inner]
    )
    script = ProtocolScript("bell_project_pair", steps)
    dense = _resolve_backend(backend, cluster.n)
    tab0 = st.cluster_tableau(cluster)
    target = sv.ghz_state(2)
    branches = []
    for outcomes, tab, prob in enumerate_branches_tableau(tab0, steps, max_branches):
        detail: dict = {}
        try:
            sub = tab.restrict([a, b])
            cliffs = st.local_clifford_to_ghz(sub)
        except InputError:
            cliffs = None
        ok = cliffs is not None
        corrections = _cliff_corrections([a, b], cliffs) if cliffs else []
        fid = None
        if ok and dense:
            fid = _dense_check(cluster, steps, outcomes, corrections, [a, b], target)
            psi, _ = run_dense_forced(sv.cluster_state(cluster), steps, outcomes)
            detail["marginal_entropy"] = round(sv.entropy(sv.reduced_density(psi, [a])), 12)
            detail["pair_purity"] = round(sv.purity(sv.reduced_density(psi, [a, b])), 12)
            ok = fid > 1 - FID_TOL
        branches.append(BranchReport(outcomes, prob, corrections, ok, fid, detail))
    return ProtocolResult(
        "bell_project_pair", f"bell pair on {a} and {b}", script, branches,
        extras={
            "path": [list(s) for s in path.sites],
            "outer_z_count": len(off),
            "inner_x_count": len(inner),
        },
    )


def carve_path(cluster: Cluster, path, backend: str = "auto",
               max_branches: int = BRANCH_LIMIT) -> ProtocolResult:
    """Reduce the cluster to a chain along ``path`` by measuring Z on every
    off-path site.  Corrections are a Pauli layer on the path qubits."""
    if not isinstance(path, Path):
        path = Path(tuple(tuple(s) for s in path))
    path.validate_in(cluster)
    if len(path) < 1:
        raise InputError("path must hold at least one site")
    if not path.is_induced(cluster):
        raise InputError(
            "path is not induced in the cluster (a chord would survive carving)"
        )
    off = [s for s in cluster.sites if s not in path.sites]
    path_set = set(path.sites)
    surrounding = [s for s in off if any(nb in path_set for nb in cluster.neighbors(s))]
    beyond = [s for s in off if s not in set(surrounding)]
    steps = tuple(ProtocolStep(s, "Z") for s in off)
    script = ProtocolScript("carve_path", steps)
    k = len(path)
    dense = _resolve_backend(backend, cluster.n)
    tab0 = st.cluster_tableau(cluster)
    target_tab = st.cluster_tableau(Cluster.chain(k))
    target_dense = sv.chain_state(k) if dense else None
    branches = []
    for outcomes, tab, prob in enumerate_branches_tableau(tab0, steps, max_branches):
        try:
            sub = tab.restrict(list(path.sites))
        except InputError:
            branches.append(BranchReport(outcomes, prob, [], False))
            continue
        pauli = st.pauli_correction(sub, target_tab)
        ok = pauli is not None
        corrections: list[tuple[object, np.ndarray]] = []
        if pauli is not None:
            for j in pauli.support():
                xb, zb = pauli.get(j)
                m = st._dense_single((xb, zb, xb & zb))
                corrections.append((path.sites[j], m))
        fid = None
        if ok and dense:
            fid = _dense_check(cluster, steps, outcomes, corrections, list(path.sites), target_dense)
            ok = fid > 1 - FID_TOL
        branches.append(BranchReport(outcomes, prob, corrections, ok, fid))
    return ProtocolResult(
        "carve_path", f"chain of {k} along {[list(s) for s in path.sites]}",
        script, branches,
        extras={
            "surrounding_z_count": len(surrounding),
            # off-path sites beyond the immediate surroundings are measured
            # too, so the residual register is exactly the path
            "beyond_surrounding": [list(s) for s in beyond],
        },
    )


def reduce_chain(chain, times: int = 1, backend: str = "auto",
                 tol: float = 1e-9) -> ProtocolResult:
    """Shorten a chain by ``times`` sites, one X measurement each.

    Each round measures X on the current second site and corrects the
    first with a fixed outcome-keyed unitary, leaving the chain state of
    the remaining sites.  Accepts a length, a 1D cluster, or a dense
    state (verified against the chain state of its size).  Corrections
    act on a site no round measures, so they commute past later rounds
    and are applied as one ordered list per branch.
    """
    if isinstance(chain, sv.PureState):
        n = chain.n
        cluster = chain.cluster if chain.cluster is not None else Cluster.chain(n)
        if cluster.dim != 1:
            raise InputError("reduce_chain expects a 1D chain")
        if sv.fidelity(chain, sv.chain_state(n)) < 1 - tol:
            raise InputError("input state is not the chain state of its size")
    else:
        cluster = Cluster.chain(chain) if isinstance(chain, int) else chain
        if cluster.dim != 1:
            raise InputError("reduce_chain expects a 1D chain")
        n = cluster.n
    if not 1 <= times <= n - 2:
        raise InputError(f"times must lie in 1..{n - 2} for a chain of {n}")
    first = cluster.sites[0]
    measured = list(cluster.sites[1:times + 1])
    keep = [first] + list(cluster.sites[times + 1:])
    steps = tuple(ProtocolStep(s, "X") for s in measured)
    script = ProtocolScript("reduce_chain", steps)
    dense = _resolve_backend(backend, n)
    tab0 = st.cluster_tableau(cluster)
    target_tab = st.cluster_tableau(Cluster.chain(n - times))
    target_dense = sv.chain_state(n - times) if dense else None
    branches = []
    for outcomes, tab, prob in enumerate_branches_tableau(tab0, steps):
        corrections = [(first, CHAIN_REDUCE_CORRECTIONS[o]) for o in outcomes]
        for _, u in corrections:
            tab.apply_single_clifford(first, st.single_clifford_from_matrix(u))
        sub = tab.restrict(keep)
        ok = sub.same_state(target_tab)
        fid = None
        if ok and dense:
            fid = _dense_check(cluster, steps, outcomes, corrections, keep, target_dense)
            ok = fid > 1 - FID_TOL
        composed = np.eye(2)
        for _, u in corrections:
            composed = u @ composed
        branches.append(BranchReport(
            outcomes, prob, corrections, ok, fid,
            detail={"composed_first_qubit_correction":
                    [[[round(float(c.real), 12), round(float(c.imag), 12)] for c in row]
                     for row in composed]},
        ))
    return ProtocolResult(
        "reduce_chain", f"chain of {n - times}", script, branches,
        extras={"kept": [list(s) for s in keep]},
    )


def checkerboard_sites(cluster: Cluster) -> list[Site]:
    """The smaller coordinate-parity class (ties pick odd parity)."""
    by_color: dict[int, list[Site]] = {0: [], 1: []}
    for s in cluster.sites:
        by_color[sum(s) % 2].append(s)
    if len(by_color[1]) <= len(by_color[0]):
        return by_color[1]
    return by_color[0]


def disentangle_even(cluster: Cluster) -> ProtocolScript:
    """Z-measurement script on the minority checkerboard class.

    On a chain these are the even-numbered qubits (counting from one),
    so the script holds exactly floor(N/2) measurements.  Feeding it to
    the persistency certifier checks that every branch comes out fully
    product, which upper-bounds the number of local measurements needed
    to erase all entanglement.
    """
    sites = checkerboard_sites(cluster)
    if not sites:
        raise InputError("cluster has no sites to measure")
    return ProtocolScript("disentangle_even", tuple(ProtocolStep(s, "Z") for s in sites))


def even_sublattice(cluster: Cluster) -> list[Site]:
    return [s for s in cluster.sites if all(c % 2 == 0 for c in s)]


def _ghz_steps(cluster: Cluster, keep) -> tuple[ProtocolStep, ...]:
    keep_set = set(keep)
    steps = []
    for s in cluster.sites:
        if s in keep_set:
            continue
        axis = "X" if sum(c % 2 for c in s) == 1 else "Z"
        steps.append(ProtocolStep(s, axis))
    return tuple(steps)


def extract_ghz_block(cluster: Cluster, keep=None, backend: str = "auto",
                      mode: str = "auto", samples: int = 64, seed: int = 0,
                      max_branches: int = BRANCH_LIMIT) -> ProtocolResult:
    """Distill a GHZ state onto the even sublattice of a block.

    Measures X on the connecting lines (sites with exactly one odd
    coordinate) and Z everywhere else; each branch is certified by finding
    local Cliffords onto the plus-sign GHZ form.  ``mode`` picks between full
    branch enumeration and seeded sampling (``"auto"`` enumerates when the
    branch count stays within ``max_branches``).
    """
    keep = even_sublattice(cluster) if keep is None else [tuple(s) for s in keep]
    if not keep:
        raise EmptyLatticeError("no kept sites: the even sublattice is empty")
    for s in keep:
        cluster.index(s)
        if any(c % 2 for c in s):
            raise InputError(f"kept site {s} is not on the even grid")
    k = len(keep)
    steps = _ghz_steps(cluster, keep)
    script = ProtocolScript("extract_ghz_block", steps)
    dense = _resolve_backend(backend, cluster.n)
    tab0 = st.cluster_tableau(cluster)
    if mode == "auto":
        mode = "enumerate" if 2 ** len(steps) <= max_branches else "sample"
    if mode == "enumerate":
        branch_iter = enumerate_branches_tableau(tab0, steps, max_branches)
    elif mode == "sample":
        branch_iter = sample_branches_tableau(tab0, steps, samples, seed)
    else:
        raise InputError(f"unknown mode {mode!r}")
    target = sv.ghz_state(k) if dense else None
    branches = []
    for outcomes, tab, prob in branch_iter:
        try:
            sub = tab.restrict(keep)
            cliffs = st.local_clifford_to_ghz(sub)
        except InputError:
            cliffs = None
        ok = cliffs is not None
        corrections = _cliff_corrections(keep, cliffs) if cliffs else []
        fid = None
        if ok and dense:
            fid = _dense_check(cluster, steps, outcomes, corrections, keep, target)
            ok = fid > 1 - FID_TOL
        branches.append(BranchReport(outcomes, prob, corrections, ok, fid))
    return ProtocolResult(
        "extract_ghz_block", f"ghz({k}) on the even sublattice", script, branches,
        extras={"keep": [list(s) for s in keep], "mode": mode},
    )


def _search_ghz_with_aux(cluster: Cluster, keep, max_axes_sites: int = 8):
    """Find an aux site and measurement axes so that keep + aux carries a
    GHZ(k+1) on every branch.  Exhaustive over non-kept sites and axis
    patterns; intended for small blocks."""
    keep_set = set(keep)
    candidates = [s for s in cluster.sites if s not in keep_set]
    tab0 = st.cluster_tableau(cluster)
    for aux in candidates:
        measured = [s for s in candidates if s != aux]
        if len(measured) > max_axes_sites:
            raise ResourceLimitError(
                f"aux search over {len(measured)} measured sites is too large; "
                "pass aux and axes explicitly"
            )
        for axes in itertools.product("XYZ", repeat=len(measured)):
            steps = tuple(ProtocolStep(s, ax) for s, ax in zip(measured, axes))
            good = True
            found = []
            for outcomes, tab, prob in enumerate_branches_tableau(tab0, steps):
                try:
                    sub = tab.restrict(list(keep) + [aux])
                    cliffs = st.local_clifford_to_ghz(sub)
                except InputError:
                    cliffs = None
                if cliffs is None:
                    good = False
                    break
                found.append((outcomes, prob, cliffs))
            if good and found:
                return aux, steps, found
    raise TargetMissError("no aux site and axis pattern reaches a GHZ on every branch")


def prepare_alpha_beta(cluster: Cluster, alpha: complex, beta: complex,
                       keep=None, aux=None, axes=None, tol: float = 1e-9) -> ProtocolResult:
    """Prepare ``alpha |0..0> + beta |1..1>`` on the even sublattice.

    Builds a GHZ on the kept sites plus one auxiliary site, then measures
    the auxiliary qubit in the basis ``{conj(alpha)|0> + conj(beta)|1>,
    beta|0> - alpha|1>}``.  Outcome 0 leaves the target directly; outcome 1
    is fixed by X on every kept site and a diagonal phase on the first.
    Dense backend only.
    """
    if cluster.n > sv.DEFAULT_MAX_QUBITS:
        raise ResourceLimitError("prepare_alpha_beta runs on the dense backend only")
    alpha, beta = complex(alpha), complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-9:
        raise InputError(
            f"coefficients must satisfy |alpha|^2 + |beta|^2 = 1, "
            f"got {abs(alpha) ** 2 + abs(beta) ** 2:.6f}"
        )
    keep = even_sublattice(cluster) if keep is None else [tuple(s) for s in keep]
    if not keep:
        raise EmptyLatticeError("no kept sites: the even sublattice is empty")
    k = len(keep)
    if len(keep) >= cluster.n:
        raise InputError("no auxiliary site available: every site is kept")

    if aux is not None and axes is not None:
        aux = tuple(aux)
        measured = [s for s in cluster.sites if s not in set(keep) and s != aux]
        if len(axes) != len(measured):
            raise InputError(f"need {len(measured)} axes, got {len(axes)}")
        steps = tuple(ProtocolStep(s, ax) for s, ax in zip(measured, axes))
        tab0 = st.cluster_tableau(cluster)
        found = []
        for outcomes, tab, prob in enumerate_branches_tableau(tab0, steps):
            sub = tab.restrict(list(keep) + [aux])
            cliffs = st.local_clifford_to_ghz(sub)
            if cliffs is None:
                raise TargetMissError(
                    f"branch {outcomes} of the given aux/axes misses the GHZ target"
                )
            found.append((outcomes, prob, cliffs))
    else:
        aux, steps, found = _search_ghz_with_aux(cluster, keep)

    pair = np.array([
        [np.conj(alpha), np.conj(beta)],
        [beta, -alpha],
    ])
    aux_step = ProtocolStep(aux, pair)
    script = ProtocolScript("prepare_alpha_beta", steps + (aux_step,))
    target = sv.ghz_state(k, coeffs=(alpha, beta))
    d0 = -alpha / np.conj(alpha) if abs(alpha) > tol else 1.0
    d1 = beta / np.conj(beta) if abs(beta) > tol else 1.0
    phase_fix = np.diag([d0, d1])
    branches = []
    for outcomes, prob, cliffs in found:
        ghz_corr = _cliff_corrections(list(keep) + [aux], cliffs)
        psi, _ = run_dense_forced(sv.cluster_state(cluster), steps, outcomes)
        psi = sv.apply_local_many(psi, ghz_corr)
        for aux_out in (0, 1):
            r = sv.measure(psi, sv.MeasurementSpec(aux, pair), forced=aux_out)
            corrections = list(ghz_corr)
            final = r.state
            if aux_out == 1:
                fixes = [(s, sv.PAULI["X"]) for s in keep]
                fixes.append((keep[0], phase_fix))
                final = sv.apply_local_many(final, fixes)
                corrections += fixes
            sub = sv.subsystem_state(final, keep)
            fid = sv.fidelity(sub, target)
            expect = np.sort([abs(alpha), abs(beta)])[::-1]
            worst = 0.0
            measured = np.array([1.0])
            if k >= 2:
                measured = np.sort(sv.schmidt_coefficients(sub, [0]))[::-1]
                for part in sv.proper_bipartitions(k):
                    c = np.sort(sv.schmidt_coefficients(sub, part))[::-1]
                    padded = np.zeros(len(c))
                    padded[:2] = expect[: len(c)]
                    worst = max(worst, float(np.abs(c - padded).max()))
            ok = fid > 1 - tol
            branches.append(BranchReport(
                outcomes + (aux_out,), prob * r.probability, corrections, ok, fid,
                detail={
                    "schmidt_coefficients": [round(float(x), 12) for x in measured],
                    "worst_cut_deviation": round(worst, 12),
                },
            ))
    return ProtocolResult(
        "prepare_alpha_beta",
        f"alpha,beta superposition on {k} sites",
        script, branches,
        extras={
            "keep": [list(s) for s in keep],
            "aux": list(aux),
            "alpha": [alpha.real, alpha.imag],
            "beta": [beta.real, beta.imag],
        },
    )


def run_script(cluster: Cluster, script: ProtocolScript, backend: str = "auto",
               seed: int | None = None) -> dict:
    """Execute a script once (seeded) and report outcomes plus a state digest."""
    dense = _resolve_backend(backend, cluster.n)
    rng_t = np.random.default_rng(seed)
    tab = st.cluster_tableau(cluster)
    outcomes = []
    for step in script.steps:
        rec = tab.measure_site(step.site, _axis_of(step.basis), rng=rng_t)
        outcomes.append(rec.outcome)
    out = {"outcomes": "".join(map(str, outcomes)), "backend": "tableau"}
    if dense:
        rng_d = np.random.default_rng(seed)
        psi = sv.cluster_state(cluster)
        douts = []
        for step in script.steps:
            r = sv.measure(psi, sv.MeasurementSpec(step.site, step.basis), rng=rng_d)
            psi = r.state
            douts.append(r.outcome)
        out["dense_outcomes"] = "".join(map(str, douts))
        out["backends_agree"] = douts == outcomes
    return out
