"""HTTP service exposing the toolkit.

Every successful response is ``{"meta": ..., "result": ...}`` where meta
echoes the tool version, the request seed, and a sha256 of the canonical
request body, so any output can be traced back to its exact invocation.
CSV-format responses carry the same three values as ``#`` comment lines
before the header row.

Domain errors map onto an error envelope carrying the CLI exit code:
input problems 400/exit 2, empty lattices 400/exit 3, protocol target
misses 409/exit 4, resource limits 413/exit 5.
"""

from __future__ import annotations

import hashlib
import io
import json

from fastapi import FastAPI
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .. import __version__
from .. import analysis as an
from .. import entanglement as en
from .. import protocols as pr
from .. import stabilizer as st
from .. import statevec as sv
from ..errors import (
    ClusterLabError,
    EmptyLatticeError,
    InputError,
    ResourceLimitError,
    TargetMissError,
)
from .models import (
    AnalyzeRequest,
    BenchRequest,
    BuildRequest,
    CrosscheckRequest,
    ProtocolRequest,
    RunRequest,
    SweepRequest,
)

_STATUS = {
    InputError: 400,
    EmptyLatticeError: 400,
    TargetMissError: 409,
    ResourceLimitError: 413,
}

PROTOCOL_NAMES = ("bell", "carve", "reduce-chain", "disentangle-even",
                  "ghz", "alpha-beta")
ANALYSES = ("persistency", "schmidt", "connectedness")


def _meta(req: BaseModel) -> dict:
    body = json.dumps(req.model_dump(mode="json"), sort_keys=True,
                      separators=(",", ":"))
    return {
        "version": __version__,
        "seed": getattr(req, "seed", None),
        "config_sha256": hashlib.sha256(body.encode()).hexdigest(),
    }


def _envelope(req: BaseModel, result) -> dict:
    return {"meta": _meta(req), "result": result}


def _csv_response(req: BaseModel, columns, rows) -> PlainTextResponse:
    meta = _meta(req)
    buf = io.StringIO()
    for key in ("version", "seed", "config_sha256"):
        value = "" if meta[key] is None else meta[key]
        buf.write(f"# {key}={value}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join("" if row.get(c) is None else str(row.get(c))
                           for c in columns) + "\n")
    return PlainTextResponse(buf.getvalue(), media_type="text/csv")


def _as_complex(value, name: str) -> complex:
    if value is None:
        raise InputError(f"{name} is required")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise InputError(f"{name} must be a number or an [re, im] pair")


def _site_or_index(x):
    return tuple(int(c) for c in x) if isinstance(x, (list, tuple)) else int(x)


def _map_backend(backend: str) -> str:
    if backend == "both":
        return "dense"   # tableau always runs; both forces the dense diff
    return backend


def create_app() -> FastAPI:
    app = FastAPI(title="clusterlab service", version=__version__)

    @app.exception_handler(ClusterLabError)
    async def _domain_error(request, exc: ClusterLabError):
        status = 400
        for cls, code in _STATUS.items():
            if isinstance(exc, cls):
                status = code
        return JSONResponse(
            status_code=status,
            content={"error": {
                "type": type(exc).__name__,
                "message": str(exc),
                "exit_code": exc.exit_code,
            }},
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/version")
    def version():
        return {"version": __version__}

    @app.post("/build")
    def build(req: BuildRequest):
        return _envelope(req, an.build_summary(req.lattice.occupation()))

    @app.post("/sweep-phi")
    def sweep_phi(req: SweepRequest):
        cluster = req.lattice.cluster()
        if cluster.dim != 1:
            raise InputError("the phi sweep runs on chain clusters")
        out = an.sweep_phi(cluster.n, req.steps)
        if req.format == "csv":
            return _csv_response(req, out["columns"], out["rows"])
        return _envelope(req, out)

    @app.post("/run")
    def run(req: RunRequest):
        cluster = req.lattice.cluster()
        script = pr.ProtocolScript.from_json(req.script)
        out = pr.run_script(cluster, script,
                            backend=_map_backend(req.backend), seed=req.seed)
        return _envelope(req, out)

    @app.post("/protocol/{name}")
    def protocol(name: str, req: ProtocolRequest):
        if name not in PROTOCOL_NAMES:
            raise InputError(
                f"unknown protocol {name!r}; expected one of {', '.join(PROTOCOL_NAMES)}"
            )
        cluster = req.lattice.cluster()
        backend = _map_backend(req.backend)
        kwargs = {}
        if req.max_branches is not None:
            kwargs["max_branches"] = req.max_branches

        if name == "bell":
            if not req.pair or len(req.pair) != 2:
                raise InputError("bell needs pair = [qubit, qubit]")
            a, b = (_site_or_index(x) for x in req.pair)
            result = pr.bell_project_pair(cluster, a, b, backend=backend, **kwargs)
        elif name == "carve":
            if not req.path:
                raise InputError("carve needs path = [[coords], ...]")
            result = pr.carve_path(cluster, [tuple(int(c) for c in s) for s in req.path],
                                   backend=backend, **kwargs)
        elif name == "reduce-chain":
            tkw = {} if req.tol is None else {"tol": req.tol}
            result = pr.reduce_chain(cluster, times=req.times, backend=backend,
                                     **tkw)
        elif name == "disentangle-even":
            script = pr.disentangle_even(cluster)
            branches = pr.enumerate_branches_tableau(
                st.cluster_tableau(cluster), script.steps,
                req.max_branches or pr.BRANCH_LIMIT)
            return _envelope(req, {
                "script": script.to_json(),
                "measurements": len(script.steps),
                "branches": len(branches),
                "all_product": all(tab.is_product() for _, tab, _ in branches),
            })
        elif name == "ghz":
            keep = None if req.sublattice in (None, "even") else [
                tuple(int(c) for c in s) for s in req.sublattice
            ]
            result = pr.extract_ghz_block(cluster, keep=keep, backend=backend,
                                          mode=req.mode, samples=req.samples,
                                          seed=req.seed, **kwargs)
        else:  # alpha-beta
            keep = None if req.sublattice in (None, "even") else [
                tuple(int(c) for c in s) for s in req.sublattice
            ]
            tkw = {} if req.tol is None else {"tol": req.tol}
            result = pr.prepare_alpha_beta(
                cluster,
                _as_complex(req.alpha, "alpha"),
                _as_complex(req.beta, "beta"),
                keep=keep,
                aux=tuple(req.aux) if req.aux else None,
                axes=req.axes,
                **tkw,
            )
        return _envelope(req, result.to_json())

    @app.post("/analyze/{which}")
    def analyze(which: str, req: AnalyzeRequest):
        if which not in ANALYSES:
            raise InputError(
                f"unknown analysis {which!r}; expected one of {', '.join(ANALYSES)}"
            )
        tkw = {} if req.tol is None else {"tol": req.tol}
        if which == "connectedness":
            if req.lattice.is_reference:
                report = en.check_maximal_connectedness(s=req.lattice.state(),
                                                        **tkw)
            else:
                report = en.check_maximal_connectedness(
                    cluster=req.lattice.cluster(),
                    backend=_map_backend(req.backend), **tkw)
            return _envelope(req, report.to_json())

        state = req.lattice.state()
        if which == "schmidt":
            bounds = en.schmidt_bounds(state, seed=req.seed,
                                       restarts=req.restarts, **tkw)
            if req.format == "csv":
                rows = [f.to_json() for f in bounds.als_curve]
                return _csv_response(req, ("r", "residual", "status", "iterations"),
                                     rows)
            return _envelope(req, bounds.to_json())

        # persistency
        strategy = _persistency_strategy(req, state)
        cert = en.persistency_certify(state, strategy, **tkw)
        result = cert.to_json()
        if req.search:
            found = en.persistency_search_pauli(state, k_max=req.k_max)
            result["search"] = found if found is None else {
                "depth": found["depth"],
                "basis_restricted": found["basis_restricted"],
                "tree": found["tree"],
            }
        return _envelope(req, result)

    @app.post("/bench")
    def bench(req: BenchRequest):
        out = an.bench(tuple(req.chain_sizes), tuple(req.block_sides),
                       req.measurements, req.seed)
        if req.format == "csv":
            cols = ("kind", "n", "construct_seconds", "measurements",
                    "measure_seconds", "measurements_per_second")
            return _csv_response(req, cols, out["rows"])
        return _envelope(req, out)

    @app.post("/crosscheck")
    def crosscheck(req: CrosscheckRequest):
        return _envelope(req, an.crosscheck_random(req.trials, req.max_qubits,
                                                   req.seed))

    return app


def _persistency_strategy(req: AnalyzeRequest, state: sv.PureState):
    if req.strategy is not None:
        steps = [pr.ProtocolStep.from_json(s) for s in req.strategy]
        return [sv.MeasurementSpec(s.site, s.basis) for s in steps]
    if req.lattice.ghz is not None:
        return [sv.MeasurementSpec(0, "Z")]
    if req.lattice.w is not None:
        return [sv.MeasurementSpec(q, "Z") for q in range(1, state.n)]
    return pr.disentangle_even(req.lattice.cluster())
