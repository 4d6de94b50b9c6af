"""HTTP surface: envelopes, meta hashing, CSV rendering, error mapping."""

import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from clusterlab.service import create_app


@pytest.fixture(scope="module")
def client():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return TestClient(create_app(), raise_server_exceptions=False)


def test_health_and_version(client):
    assert client.get("/health").json()["status"] == "ok"
    assert "version" in client.get("/version").json()


def test_build_envelope_and_stable_hash(client):
    body = {"lattice": {"block": [7, 7]}}
    r1 = client.post("/build", json=body)
    assert r1.status_code == 200
    j = r1.json()
    assert set(j) == {"meta", "result"}
    assert set(j["meta"]) == {"version", "seed", "config_sha256"}
    assert j["result"]["n_sites"] == 49 and j["result"]["n_clusters"] == 1
    r2 = client.post("/build", json=body)
    assert r2.json()["meta"]["config_sha256"] == j["meta"]["config_sha256"]


def test_build_hash_varies_with_config(client):
    h1 = client.post("/build", json={"lattice": {"chain": 4}}).json()
    h2 = client.post("/build", json={"lattice": {"chain": 5}}).json()
    assert h1["meta"]["config_sha256"] != h2["meta"]["config_sha256"]


def test_sweep_json_rows(client):
    r = client.post("/sweep-phi", json={"lattice": {"chain": 6}, "steps": 16})
    rows = r.json()["result"]["rows"]
    assert len(rows) == 17
    assert [k for k, row in enumerate(rows) if row["is_product"]] == [0, 16]


def test_sweep_csv_format(client):
    r = client.post("/sweep-phi",
                    json={"lattice": {"chain": 6}, "steps": 8, "format": "csv"})
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("text/csv")
    lines = r.text.splitlines()
    assert lines[0].startswith("# version=")
    assert lines[1].startswith("# seed=")
    assert lines[2].startswith("# config_sha256=")
    assert lines[3].startswith("phi,mean_marginal_entropy")
    assert len(lines) == 4 + 9


def test_run_script_endpoint(client):
    script = {"name": "probe", "steps": [{"qubit": [1], "basis": "X"},
                                         {"qubit": [3], "basis": "Z"}]}
    r = client.post("/run", json={"lattice": {"chain": 5}, "script": script,
                                  "backend": "both", "seed": 3})
    j = r.json()["result"]
    assert j["backends_agree"] and len(j["outcomes"]) == 2


def test_protocol_bell_site_pair_and_index_pair(client):
    r = client.post("/protocol/bell",
                    json={"lattice": {"chain": 5}, "pair": [[0], [4]],
                          "backend": "both"})
    j = r.json()["result"]
    assert j["all_ok"] and len(j["branches"]) == 8
    r = client.post("/protocol/bell", json={"lattice": {"chain": 4},
                                            "pair": [0, 3]})
    assert r.json()["result"]["all_ok"]


def test_protocol_carve(client):
    r = client.post("/protocol/carve", json={
        "lattice": {"block": [3, 3]},
        "path": [[0, 0], [0, 1], [0, 2], [1, 2], [2, 2]],
        "backend": "dense"})
    assert r.status_code == 200 and r.json()["result"]["all_ok"]


def test_protocol_reduce_chain(client):
    r = client.post("/protocol/reduce-chain",
                    json={"lattice": {"chain": 6}, "times": 2,
                          "backend": "both"})
    j = r.json()["result"]
    assert j["all_ok"] and len(j["extras"]["kept"]) == 4


def test_protocol_disentangle_even(client):
    r = client.post("/protocol/disentangle-even", json={"lattice": {"chain": 7}})
    j = r.json()["result"]
    assert j["measurements"] == 3 and j["branches"] == 8 and j["all_product"]


def test_protocol_ghz_block_and_explicit_keep(client):
    r = client.post("/protocol/ghz", json={"lattice": {"block": [3, 3]},
                                           "backend": "both",
                                           "mode": "enumerate"})
    j = r.json()["result"]
    assert j["all_ok"] and len(j["branches"]) == 16
    r = client.post("/protocol/ghz", json={"lattice": {"chain": 7},
                                           "sublattice": [[0], [2], [4], [6]],
                                           "backend": "both",
                                           "mode": "enumerate"})
    assert r.json()["result"]["all_ok"]


def test_protocol_alpha_beta_complex_beta(client):
    r = client.post("/protocol/alpha-beta", json={
        "lattice": {"block": [3, 3]}, "alpha": 0.3,
        "beta": [0.0, 0.9539392014169456]})
    assert r.status_code == 200 and r.json()["result"]["all_ok"]


def test_analyze_persistency_families(client):
    j = client.post("/analyze/persistency",
                    json={"lattice": {"chain": 6}}).json()["result"]
    assert (j["lower"], j["upper"], j["exact"]) == (3, 3, True)
    j = client.post("/analyze/persistency",
                    json={"lattice": {"ghz": 5}}).json()["result"]
    assert j["exact"] and j["upper"] == 1
    j = client.post("/analyze/persistency",
                    json={"lattice": {"w": 4}, "search": True}).json()["result"]
    assert j["upper"] == 3 and j["search"]["depth"] == 3


def test_analyze_persistency_explicit_strategy(client):
    r = client.post("/analyze/persistency", json={
        "lattice": {"chain": 4},
        "strategy": [{"qubit": [1], "basis": "Z"},
                     {"qubit": [3], "basis": "Z"}]})
    assert r.json()["result"]["exact"]


def test_analyze_schmidt(client):
    j = client.post("/analyze/schmidt",
                    json={"lattice": {"chain": 4},
                          "restarts": 16}).json()["result"]
    assert j["lower"] == 2 and j["upper"] == 2
    j = client.post("/analyze/schmidt",
                    json={"lattice": {"ghz": 6}}).json()["result"]
    assert j["upper_terms"] == 2


def test_analyze_schmidt_csv(client):
    r = client.post("/analyze/schmidt", json={"lattice": {"w": 4},
                                              "restarts": 8, "format": "csv"})
    assert r.text.splitlines()[3] == "r,residual,status,iterations"


def test_analyze_connectedness(client):
    j = client.post("/analyze/connectedness",
                    json={"lattice": {"chain": 5}}).json()["result"]
    assert j["connected"] and len(j["pairs"]) == 10
    j = client.post("/analyze/connectedness",
                    json={"lattice": {"w": 4}}).json()["result"]
    assert not j["connected"]


def test_bench_and_crosscheck(client):
    j = client.post("/bench", json={"chain_sizes": [500], "block_sides": [10],
                                    "measurements": 50}).json()["result"]
    assert len(j["rows"]) == 2
    r = client.post("/bench", json={"chain_sizes": [200], "block_sides": [],
                                    "measurements": 0, "format": "csv"})
    assert "kind,n,construct_seconds" in r.text
    j = client.post("/crosscheck", json={"trials": 40, "max_qubits": 6,
                                         "seed": 1}).json()["result"]
    assert j["agree"] and j["trials"] == 40


# ----------------------------------------------------------- error mapping


def test_empty_lattice_maps_to_400_exit_3(client):
    r = client.post("/build", json={"lattice": {"spec": {"sites": []}}})
    assert r.status_code == 400
    err = r.json()["error"]
    assert err["exit_code"] == 3 and err["type"] == "EmptyLatticeError"


def test_two_selectors_rejected_by_validation(client):
    r = client.post("/build", json={"lattice": {"chain": 4, "ghz": 3}})
    assert r.status_code == 422


def test_bad_pair_maps_to_400_exit_2(client):
    r = client.post("/protocol/bell", json={"lattice": {"chain": 4},
                                            "pair": [[0]]})
    assert r.status_code == 400 and r.json()["error"]["exit_code"] == 2


def test_unknown_protocol_rejected(client):
    r = client.post("/protocol/nope", json={"lattice": {"chain": 4}})
    assert r.status_code == 400


def test_non_induced_path_rejected(client):
    r = client.post("/protocol/carve", json={
        "lattice": {"block": [3, 3]},
        "path": [[0, 0], [0, 1], [1, 1], [1, 0]]})
    assert r.status_code == 400 and "induced" in r.json()["error"]["message"]


def test_weak_strategy_maps_to_409_exit_4(client):
    r = client.post("/analyze/persistency", json={
        "lattice": {"chain": 4},
        "strategy": [{"qubit": [1], "basis": "X"}]})
    assert r.status_code == 409 and r.json()["error"]["exit_code"] == 4


def test_dense_resource_limit_maps_to_413_exit_5(client):
    r = client.post("/protocol/ghz", json={"lattice": {"block": [31, 31]},
                                           "backend": "dense"})
    assert r.status_code == 413 and r.json()["error"]["exit_code"] == 5


def test_sweep_requires_chain(client):
    r = client.post("/sweep-phi", json={"lattice": {"block": [2, 2]}})
    assert r.status_code == 400
