"""Command-line client for the HTTP service.

Every command builds a request, sends it to the service, and prints the
response.  By default an in-process application instance handles the
request, so no server needs to be running; ``--server URL`` points the
same commands at a remote instance, and ``serve`` starts one.

Exit codes: 0 success, 2 malformed input, 3 empty lattice, 4 a protocol
branch missed its target, 5 resource limit.  Chain positions given to
``--pair`` are 1-based (site coordinates, written as ``r,c`` tuples, stay
0-based as everywhere else in the toolkit).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        # the vendored starlette test client warns about its httpx pin
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _load_json_arg(source: str, what: str):
    text = sys.stdin.read() if source == "-" else Path(source).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        click.echo(f"{what} is not valid JSON: line {e.lineno} column {e.colno}: {e.msg}",
                   err=True)
        raise SystemExit(2)


def lattice_options(f):
    f = click.option("--w", "w_", type=int, help="reference W state on N qubits")(f)
    f = click.option("--ghz", type=int, help="reference GHZ state on N qubits")(f)
    f = click.option("--origin", nargs=2, type=int, default=None,
                     help="block offset (row col)")(f)
    f = click.option("--block", nargs=2, type=int, default=None,
                     help="2D block (rows cols)")(f)
    f = click.option("--chain", type=int, help="1D chain of N sites")(f)
    f = click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False),
                     help="JSON lattice spec file")(f)
    return f


def _selector(spec_path, chain, block, origin, ghz, w_) -> dict:
    sel = {}
    if spec_path:
        sel["spec"] = _load_json_arg(spec_path, f"spec file {spec_path}")
    if chain:
        sel["chain"] = chain
    if block:
        sel["block"] = list(block)
    if origin:
        sel["origin"] = list(origin)
    if ghz:
        sel["ghz"] = ghz
    if w_:
        sel["w"] = w_
    if not sel:
        click.echo("pick a lattice: --spec PATH, --chain N, --block R C, --ghz N or --w N",
                   err=True)
        raise SystemExit(2)
    return sel


def _emit(resp, out: str | None, protocol_check: bool = False):
    """Print or save the response, then exit with the mapped code."""
    if resp.status_code == 422:
        click.echo("invalid request: " + json.dumps(resp.json().get("detail")),
                   err=True)
        raise SystemExit(2)
    if resp.status_code >= 400:
        try:
            err = resp.json()["error"]
        except (ValueError, KeyError):
            click.echo(resp.text, err=True)
            raise SystemExit(1)
        click.echo(f"error ({err['type']}): {err['message']}", err=True)
        raise SystemExit(int(err.get("exit_code", 1)))

    is_csv = resp.headers.get("content-type", "").startswith("text/csv")
    text = resp.text if is_csv else json.dumps(resp.json(), indent=2)
    if not text.endswith("\n"):
        text += "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)

    if protocol_check and not is_csv:
        result = resp.json().get("result", {})
        ok = result.get("all_ok", result.get("all_product", True))
        if not ok:
            branches = result.get("branches")
            failing = [b for b in branches
                       if not b.get("ok", True)] if isinstance(branches, list) else []
            click.echo(f"target missed on {len(failing) or 'some'} branch(es)",
                       err=True)
            for b in failing[:8]:
                click.echo(f"  outcomes={b['outcomes']} p={b['probability']:.6g}"
                           f" fidelity={b.get('fidelity')}", err=True)
            raise SystemExit(4)


def _coords_or_index(token: str):
    """'3' -> qubit index (1-based position), '0,2' -> site coordinates."""
    if "," in token:
        return [int(c) for c in token.split(",")]
    return int(token) - 1


def _site_list(text: str) -> list[list[int]]:
    tokens = text.replace(";", " ").split()
    return [[int(c) for c in t.split(",")] for t in tokens]


def _complex_pair(text: str):
    parts = text.split(",")
    if len(parts) == 1:
        return float(parts[0])
    if len(parts) == 2:
        return [float(parts[0]), float(parts[1])]
    raise click.BadParameter("expected RE or RE,IM")


@click.group(help="Cluster-state toolkit: lattices, measurement protocols, "
                  "entanglement certificates.")
@click.option("--server", default=None, envvar="CLUSTERLAB_SERVER",
              help="service URL; default runs the service in-process")
@click.pass_context
def main(ctx, server):
    ctx.obj = server


@main.command()
@click.pass_obj
def version(server):
    """Print the tool version."""
    resp = _client(server).get("/version")
    if resp.status_code != 200:
        click.echo(resp.text, err=True)
        raise SystemExit(1)
    click.echo(resp.json()["version"])


@main.command()
@lattice_options
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def build(server, spec_path, chain, block, origin, ghz, w_, out):
    """Summarize the occupation pattern: clusters, sizes, site roles."""
    body = {"lattice": _selector(spec_path, chain, block, origin, ghz, w_)}
    _emit(_client(server).post("/build", json=body), out)


@main.command("sweep-phi")
@lattice_options
@click.option("--steps", type=int, default=16, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def sweep_phi(server, spec_path, chain, block, origin, ghz, w_, steps, fmt, out):
    """Entanglement of the evolved chain at phi = 2 pi k / steps."""
    body = {"lattice": _selector(spec_path, chain, block, origin, ghz, w_),
            "steps": steps, "format": fmt}
    _emit(_client(server).post("/sweep-phi", json=body), out)


@main.command()
@click.argument("script", type=str)
@lattice_options
@click.option("--backend", type=click.Choice(["dense", "tableau", "both", "auto"]),
              default="auto", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def run(server, script, spec_path, chain, block, origin, ghz, w_, backend, seed, out):
    """Execute a measurement script (JSON file, or '-' for stdin) once."""
    body = {"lattice": _selector(spec_path, chain, block, origin, ghz, w_),
            "script": _load_json_arg(script, "script"),
            "backend": backend, "seed": seed}
    _emit(_client(server).post("/run", json=body), out)


@main.command()
@click.argument("name", type=click.Choice(["bell", "carve", "reduce-chain",
                                           "disentangle-even", "ghz", "alpha-beta"]))
@lattice_options
@click.option("--pair", nargs=2, type=str, default=None,
              help="bell: two 1-based chain positions, or r,c site tuples")
@click.option("--path", "path_", type=str, default=None,
              help="carve: sites like '0,0 0,1 0,2'")
@click.option("--times", type=int, default=1, show_default=True,
              help="reduce-chain rounds")
@click.option("--sublattice", type=str, default=None,
              help="ghz/alpha-beta kept sites ('even' or explicit list)")
@click.option("--mode", type=click.Choice(["auto", "enumerate", "sample"]),
              default="auto", show_default=True)
@click.option("--samples", type=int, default=64, show_default=True)
@click.option("--max-branches", type=int, default=None)
@click.option("--alpha", type=str, default=None, help="RE or RE,IM")
@click.option("--beta", type=str, default=None, help="RE or RE,IM")
@click.option("--aux", type=str, default=None, help="auxiliary site as r,c")
@click.option("--axes", type=str, default=None)
@click.option("--backend", type=click.Choice(["dense", "tableau", "both", "auto"]),
              default="auto", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tol", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def protocol(server, name, spec_path, chain, block, origin, ghz, w_, pair, path_,
             times, sublattice, mode, samples, max_branches, alpha, beta, aux,
             axes, backend, seed, tol, out):
    """Run a named measurement protocol and certify every branch."""
    body = {"lattice": _selector(spec_path, chain, block, origin, ghz, w_),
            "backend": backend, "seed": seed, "times": times,
            "mode": mode, "samples": samples}
    if pair:
        body["pair"] = [_coords_or_index(t) for t in pair]
    if path_:
        body["path"] = _site_list(path_)
    if sublattice and sublattice != "even":
        body["sublattice"] = _site_list(sublattice)
    if max_branches is not None:
        body["max_branches"] = max_branches
    if alpha is not None:
        body["alpha"] = _complex_pair(alpha)
    if beta is not None:
        body["beta"] = _complex_pair(beta)
    if aux:
        body["aux"] = [int(c) for c in aux.split(",")]
    if axes:
        body["axes"] = axes
    if tol is not None:
        body["tol"] = tol
    _emit(_client(server).post(f"/protocol/{name}", json=body), out,
          protocol_check=True)


@main.command()
@click.argument("which", type=click.Choice(["persistency", "schmidt", "connectedness"]))
@lattice_options
@click.option("--strategy", type=str, default=None,
              help="persistency: JSON file with measurement steps ('-' = stdin)")
@click.option("--search", is_flag=True, default=False,
              help="persistency: also search for a minimal adaptive strategy")
@click.option("--k-max", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=64, show_default=True)
@click.option("--backend", type=click.Choice(["dense", "tableau", "both", "auto"]),
              default="auto", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--tol", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def analyze(server, which, spec_path, chain, block, origin, ghz, w_, strategy,
            search, k_max, seed, restarts, backend, fmt, tol, out):
    """Entanglement reports: persistency, Schmidt-measure bounds, connectedness."""
    body = {"lattice": _selector(spec_path, chain, block, origin, ghz, w_),
            "search": search, "seed": seed, "restarts": restarts,
            "backend": backend, "format": fmt}
    if strategy:
        body["strategy"] = _load_json_arg(strategy, "strategy")
    if k_max is not None:
        body["k_max"] = k_max
    if tol is not None:
        body["tol"] = tol
    _emit(_client(server).post(f"/analyze/{which}", json=body), out)


@main.command()
@click.option("--chain-sizes", type=str, default="1000,10000,100000",
              show_default=True)
@click.option("--block-sides", type=str, default="50,100,300", show_default=True)
@click.option("--measurements", type=int, default=2000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def bench(server, chain_sizes, block_sides, measurements, seed, fmt, out):
    """Tableau construction and measurement-throughput timings."""
    body = {"chain_sizes": [int(x) for x in chain_sizes.split(",") if x],
            "block_sides": [int(x) for x in block_sides.split(",") if x],
            "measurements": measurements, "seed": seed, "format": fmt}
    _emit(_client(server).post("/bench", json=body), out)


@main.command()
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--max-qubits", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def crosscheck(server, trials, max_qubits, seed, out):
    """Drive both backends through seeded random measurement sequences."""
    body = {"trials": trials, "max_qubits": max_qubits, "seed": seed}
    resp = _client(server).post("/crosscheck", json=body)
    _emit(resp, out)
    if not resp.json()["result"]["agree"]:
        click.echo("backends disagree; see mismatches above", err=True)
        raise SystemExit(1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
