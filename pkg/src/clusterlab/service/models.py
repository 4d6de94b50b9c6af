"""Request models for the HTTP service.

A LatticeSelector names the object a request acts on: an inline occupation
spec, a chain or block shorthand, or one of the reference states (GHZ, W)
the analyses accept for comparison.
"""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator

from .. import statevec as sv
from ..errors import InputError
from ..lattice import Cluster, OccupationSet, decompose, parse_spec


class LatticeSelector(BaseModel):
    spec: dict | None = None
    chain: int | None = Field(default=None, ge=1)
    block: list[int] | None = None
    origin: list[int] | None = None
    ghz: int | None = Field(default=None, ge=1)
    w: int | None = Field(default=None, ge=2)

    @model_validator(mode="after")
    def _one_selector(self):
        given = [
            name for name in ("spec", "chain", "block", "ghz", "w")
            if getattr(self, name) is not None
        ]
        if len(given) != 1:
            raise ValueError(
                f"give exactly one of spec/chain/block/ghz/w, got {given or 'none'}"
            )
        if self.origin is not None and self.block is None:
            raise ValueError("origin only applies to block")
        return self

    @property
    def is_reference(self) -> bool:
        return self.ghz is not None or self.w is not None

    def occupation(self) -> OccupationSet:
        if self.is_reference:
            raise InputError("this endpoint needs a lattice, not a reference state")
        if self.spec is not None:
            return parse_spec(self.spec)
        if self.chain is not None:
            return OccupationSet.from_sites(1, [(i,) for i in range(self.chain)])
        shape = [int(x) for x in self.block]
        spec = {"block": shape}
        if self.origin is not None:
            spec["origin"] = self.origin
        return parse_spec(spec)

    def cluster(self) -> Cluster:
        parts = decompose(self.occupation())
        if len(parts) != 1:
            raise InputError(
                f"expected one connected cluster, the pattern has {len(parts)}"
            )
        return parts[0]

    def state(self) -> sv.PureState:
        """Dense state: the cluster state, or the named reference state."""
        if self.ghz is not None:
            return sv.ghz_state(self.ghz)
        if self.w is not None:
            return sv.w_state(self.w)
        return sv.cluster_state(self.cluster())


class BuildRequest(BaseModel):
    lattice: LatticeSelector


class SweepRequest(BaseModel):
    lattice: LatticeSelector
    steps: int = Field(default=16, ge=1)
    format: str = "json"


class RunRequest(BaseModel):
    lattice: LatticeSelector
    script: dict
    seed: int = 0
    backend: str = "auto"


class ProtocolRequest(BaseModel):
    lattice: LatticeSelector
    backend: str = "auto"
    seed: int = 0
    pair: list | None = None                 # bell: two sites or indices
    path: list | None = None                 # carve: ordered sites
    times: int = Field(default=1, ge=1)      # reduce-chain rounds
    sublattice: str | list | None = None     # ghz / alpha-beta kept sites
    mode: str = "auto"                       # ghz branch handling
    samples: int = Field(default=64, ge=1)
    max_branches: int | None = None
    alpha: float | list[float] | None = None
    beta: float | list[float] | None = None
    aux: list[int] | None = None
    axes: str | None = None
    tol: float | None = Field(default=None, gt=0)


class AnalyzeRequest(BaseModel):
    lattice: LatticeSelector
    strategy: list[dict] | None = None       # persistency: explicit steps
    search: bool = False                     # persistency: adaptive search too
    k_max: int | None = None
    seed: int = 0
    restarts: int = Field(default=64, ge=1)
    backend: str = "auto"
    format: str = "json"
    tol: float | None = Field(default=None, gt=0)


class BenchRequest(BaseModel):
    chain_sizes: list[int] = [1000, 10000, 100000]
    block_sides: list[int] = [50, 100, 300]
    measurements: int = Field(default=2000, ge=0)
    seed: int = 0
    format: str = "json"


class CrosscheckRequest(BaseModel):
    trials: int = Field(default=1000, ge=1)
    max_qubits: int = Field(default=10, ge=2, le=12)
    seed: int = 0
