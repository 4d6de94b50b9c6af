"""Entanglement certification: product/Bell predicates, ALS rank fits,
Schmidt-measure bounds, persistency, maximal connectedness.

Numeric targets here (residuals, bound values) were frozen from
independent runs of the fitting code at high restart counts.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as hst

import clusterlab.entanglement as en
import clusterlab.statevec as sv
from clusterlab.errors import InputError, TargetMissError
from clusterlab.lattice import Cluster, l_shape


def product_state(rng, n):
    amps = np.array([1.0 + 0j])
    for _ in range(n):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        amps = np.kron(amps, v / np.linalg.norm(v))
    return sv.PureState(amps)


# ----------------------------------------------------------- predicates


@given(hst.integers(0, 200), hst.integers(2, 5))
def test_product_predicate_invariant_under_local_unitaries(seed, n):
    rng = np.random.default_rng(seed)
    s = product_state(rng, n)
    assert en.is_fully_product(s)
    for q in range(n):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        u, _ = np.linalg.qr(m)
        s = sv.apply_local(s, q, u)
    assert en.is_fully_product(s)


@given(hst.integers(0, 200))
def test_bell_predicate_invariant_under_local_unitaries(seed):
    rng = np.random.default_rng(seed)
    s = sv.ghz_state(2)
    assert en.is_bell_pair(s)
    assert en.bell_deviation(s) < 1e-12
    for q in range(2):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        u, _ = np.linalg.qr(m)
        s = sv.apply_local(s, q, u)
    assert en.is_bell_pair(s)


def test_predicates_reject_entangled_states():
    assert not en.is_fully_product(sv.ghz_state(3))
    # a tilted two-qubit state is entangled but short of a Bell pair
    amps = np.array([0.8, 0, 0, 0.6], dtype=complex)
    assert not en.is_bell_pair(sv.PureState(amps))
    assert en.bell_deviation(sv.PureState(amps)) > 0.05
    # the two-excitation swap state is maximally entangled, hence Bell
    assert en.is_bell_pair(sv.w_state(2))


def test_max_bipartition_rank_values():
    rank, cut = en.max_bipartition_rank(sv.chain_state(6))
    assert rank == 8 and len(cut) == 3
    rank, _ = en.max_bipartition_rank(sv.ghz_state(5))
    assert rank == 2
    rank, _ = en.max_bipartition_rank(product_state(np.random.default_rng(1), 4))
    assert rank == 1


# ----------------------------------------------------------- ALS rank fits


def test_als_product_fits_rank_one():
    s = product_state(np.random.default_rng(7), 4)
    fit = en.tensor_rank_als(s, 1, restarts=4, seed=0)
    assert fit.status == "FIT" and fit.residual < 1e-10


def test_als_ghz3_rejects_rank_one():
    fit = en.tensor_rank_als(sv.ghz_state(3), 1, restarts=8, seed=0)
    assert fit.status == "NO_FIT"
    assert fit.residual > 0.29


def test_als_ghz4_fits_rank_two():
    fit = en.tensor_rank_als(sv.ghz_state(4), 2, restarts=8, seed=0)
    assert fit.status == "FIT" and fit.residual < 1e-6


def test_als_chain4_gap_between_three_and_four_terms():
    s = sv.chain_state(4)
    no = en.tensor_rank_als(s, 3, restarts=16, seed=0)
    assert no.status == "NO_FIT"
    assert no.residual == pytest.approx(0.5, abs=0.02)
    yes = en.tensor_rank_als(s, 4, restarts=16, seed=0)
    assert yes.status == "FIT" and yes.residual < 1e-6


def test_als_full_rank_always_fits():
    s = sv.PureState(sv.cluster_state(l_shape(2, 2)).amps)
    fit = en.tensor_rank_als(s, 2 ** s.n, restarts=2, seed=0)
    assert fit.status == "FIT"


def test_als_curve_residuals_monotone():
    curve = en.als_curve(sv.chain_state(4), r_max=4, restarts=8, seed=0)
    residuals = [f.residual for f in curve]
    assert all(a >= b - 1e-9 for a, b in zip(residuals, residuals[1:]))
    assert curve[-1].status == "FIT"


def test_als_factors_reconstruct_when_fit():
    s = sv.ghz_state(3)
    fit = en.tensor_rank_als(s, 2, restarts=8, seed=1)
    assert fit.status == "FIT"
    total = np.zeros(2 ** 3, dtype=complex)
    for term in fit.factors:
        piece = np.array([1.0 + 0j])
        for q in range(3):
            piece = np.kron(piece, term[q])
        total += piece
    overlap = abs(np.vdot(total, s.amps)) / np.linalg.norm(total)
    assert overlap == pytest.approx(1.0, abs=1e-5)


# ----------------------------------------------------------- Schmidt bounds


def test_schmidt_bounds_product():
    b = en.schmidt_bounds(product_state(np.random.default_rng(3), 3))
    assert (b.lower, b.upper, b.upper_terms, b.method) == (0.0, 0.0, 1, "product")


def test_schmidt_bounds_ghz():
    b = en.schmidt_bounds(sv.ghz_state(6))
    assert (b.lower, b.upper, b.upper_terms) == (1.0, 1.0, 2)
    assert b.method == "ghz-two-terms"


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7, 8])
def test_schmidt_bounds_chain_recursion(n):
    b = en.schmidt_bounds(sv.chain_state(n))
    assert b.lower == float(n // 2)
    assert b.upper == float(n // 2)
    assert b.upper_terms == 2 ** (n // 2)
    assert b.method in ("chain-recursion", "ghz-two-terms")  # chain2 is a Bell pair


def test_schmidt_bounds_chain_induction_step():
    # adding two sites raises the bound by exactly one
    values = {n: en.schmidt_bounds(sv.chain_state(n)).lower for n in range(2, 9)}
    for n in range(2, 7):
        assert values[n + 2] == values[n] + 1


def test_schmidt_bounds_w4():
    b = en.schmidt_bounds(sv.w_state(4), restarts=24)
    assert b.lower == 1.0
    assert b.upper == 2.0 and b.upper_terms == 4 and b.method == "als"
    assert b.claimed == pytest.approx(2.0)
    statuses = [f.status for f in b.als_curve]
    # r=3 may land INCONCLUSIVE: the W state is a border-rank case, so the
    # residual can drift below the hard NO_FIT threshold without converging
    assert statuses[0] == "NO_FIT"
    assert "FIT" not in statuses[:-1] and statuses[-1] == "FIT"


def test_schmidt_bounds_json_shape():
    d = en.schmidt_bounds(sv.ghz_state(3)).to_json()
    assert set(d) == {"lower", "upper", "lower_cut", "upper_terms",
                      "method", "claimed", "als_curve"}


# ----------------------------------------------------------- persistency


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_persistency_chain_even_strategy_is_exact(n):
    s = sv.chain_state(n)
    strategy = [sv.MeasurementSpec((i,), "Z") for i in range(1, n, 2)]
    cert = en.persistency_certify(s, strategy)
    assert cert.exact and cert.lower == cert.upper == n // 2
    assert cert.branches == 2 ** (n // 2)


def test_persistency_accepts_protocol_script():
    import clusterlab.protocols as pr
    cluster = Cluster.chain(6)
    cert = en.persistency_certify(sv.cluster_state(cluster),
                                  pr.disentangle_even(cluster))
    assert cert.exact and cert.upper == 3


def test_persistency_ghz_single_z():
    cert = en.persistency_certify(sv.ghz_state(5), [sv.MeasurementSpec(0, "Z")])
    assert cert.exact and cert.upper == 1 and cert.branches == 2


def test_persistency_weak_strategy_rejected():
    with pytest.raises(TargetMissError, match="still entangled"):
        en.persistency_certify(sv.chain_state(6), [sv.MeasurementSpec(1, "Z")])


def test_persistency_input_validation():
    with pytest.raises(InputError, match="no measurements"):
        en.persistency_certify(sv.chain_state(4), [])
    too_long = [sv.MeasurementSpec(i, "Z") for i in range(4)]
    with pytest.raises(InputError, match="n - 1"):
        en.persistency_certify(sv.chain_state(4), too_long)


def test_persistency_search_depths():
    rng = np.random.default_rng(11)
    assert en.persistency_search_pauli(product_state(rng, 3))["depth"] == 0
    assert en.persistency_search_pauli(sv.ghz_state(2))["depth"] == 1
    assert en.persistency_search_pauli(sv.ghz_state(4))["depth"] == 1
    assert en.persistency_search_pauli(sv.chain_state(4))["depth"] == 2
    assert en.persistency_search_pauli(sv.w_state(3))["depth"] == 2


def test_persistency_search_respects_budget():
    assert en.persistency_search_pauli(sv.chain_state(4), k_max=1) is None


def test_persistency_search_tree_is_adaptive():
    out = en.persistency_search_pauli(sv.w_state(4))
    assert out["depth"] == 3
    tree = out["tree"]
    assert set(tree) == {"qubit", "basis", "next"}
    # the |1> branch of the first Z ends immediately, the |0> branch goes on
    assert tree["basis"] == "Z"
    assert tree["next"][1] is None and tree["next"][0] is not None


# ----------------------------------------------------------- connectedness


def test_connectedness_chain5_all_pairs():
    rep = en.check_maximal_connectedness(cluster=Cluster.chain(5))
    assert rep.connected and len(rep.pairs) == 10
    assert max(p.worst_deviation for p in rep.pairs) < 1e-10


def test_connectedness_ghz4_state_positive():
    rep = en.check_maximal_connectedness(s=sv.ghz_state(4))
    assert rep.connected and len(rep.pairs) == 6


def test_connectedness_w4_state_negative():
    rep = en.check_maximal_connectedness(s=sv.w_state(4))
    assert not rep.connected
    assert all(not p.all_branches_bell for p in rep.pairs)
    assert min(p.worst_deviation for p in rep.pairs) > 1e-3


def test_connectedness_requires_exactly_one_input():
    with pytest.raises(InputError):
        en.check_maximal_connectedness()
    with pytest.raises(InputError):
        en.check_maximal_connectedness(cluster=Cluster.chain(3),
                                       s=sv.chain_state(3))


def test_connectedness_report_json():
    rep = en.check_maximal_connectedness(cluster=Cluster.chain(3))
    d = rep.to_json()
    assert d["connected"] is True and len(d["pairs"]) == 3
