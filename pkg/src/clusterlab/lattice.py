"""Sites, occupation patterns, and connected clusters on d-dimensional lattices.

A site is a tuple of integer coordinates.  An :class:`OccupationSet` is an
arbitrary set of occupied sites; a :class:`Cluster` is a connected one and is
the object every simulation and protocol routine works with.  Qubits of a
cluster are indexed by the lexicographic order of their site coordinates
(row-major for rectangular blocks), and that index order is the qubit order
of both state backends.

Neighborhood convention: two sites are neighbors when they differ by one
unit step along one axis.  Directed structure (which site of a pair acts as
the control of the entangling phase) always uses the positive unit vectors
``gamma = (e_1, ..., e_d)``, i.e. the edge set is ``(a, a + e_k)`` for every
occupied pair.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import EmptyLatticeError, InputError

Site = tuple[int, ...]

MAX_DIM = 3


def _as_site(obj, dim: int | None = None) -> Site:
    try:
        site = tuple(int(c) for c in obj)
    except TypeError:
        raise InputError(f"site must be a coordinate sequence, got {obj!r}")
    if dim is not None and len(site) != dim:
        raise InputError(f"site {site} has {len(site)} coordinates, expected {dim}")
    return site


def unit_vectors(dim: int) -> tuple[Site, ...]:
    """The positive coordinate steps ``e_1 .. e_dim``."""
    return tuple(tuple(int(i == k) for i in range(dim)) for k in range(dim))


def _add(a: Site, b: Site) -> Site:
    return tuple(x + y for x, y in zip(a, b))


def _sub(a: Site, b: Site) -> Site:
    return tuple(x - y for x, y in zip(a, b))


def adjacent(a: Site, b: Site) -> bool:
    """True when the sites differ by one step along exactly one axis."""
    diff = sum(abs(x - y) for x, y in zip(a, b))
    return diff == 1


@dataclass(frozen=True)
class OccupationSet:
    """A set of occupied sites of a ``dim``-dimensional lattice.

    Not necessarily connected; :func:`decompose` splits it into clusters.
    """

    dim: int
    sites: frozenset[Site]

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise InputError(f"lattice dimension must be 1..{MAX_DIM}, got {self.dim}")
        for s in self.sites:
            if len(s) != self.dim:
                raise InputError(f"site {s} does not match dimension {self.dim}")

    @classmethod
    def from_sites(cls, dim: int, sites) -> "OccupationSet":
        return cls(dim, frozenset(_as_site(s, dim) for s in sites))

    def __len__(self) -> int:
        return len(self.sites)


class Cluster:
    """A connected set of occupied sites, with a fixed qubit indexing.

    ``sites`` is sorted lexicographically and qubit ``i`` lives at
    ``sites[i]``.  Construction validates connectedness and rejects the
    empty set.
    """

    def __init__(self, dim: int, sites):
        if not 1 <= dim <= MAX_DIM:
            raise InputError(f"lattice dimension must be 1..{MAX_DIM}, got {dim}")
        normalized = sorted({_as_site(s, dim) for s in sites})
        if not normalized:
            raise EmptyLatticeError("a cluster needs at least one occupied site")
        self.dim = dim
        self.sites: tuple[Site, ...] = tuple(normalized)
        self._index = {s: i for i, s in enumerate(self.sites)}
        if not self._connected():
            raise InputError("cluster sites are not connected")

    def _connected(self) -> bool:
        seen = {self.sites[0]}
        queue = deque([self.sites[0]])
        steps = unit_vectors(self.dim)
        while queue:
            s = queue.popleft()
            for g in steps:
                for nb in (_add(s, g), _sub(s, g)):
                    if nb in self._index and nb not in seen:
                        seen.add(nb)
                        queue.append(nb)
        return len(seen) == len(self.sites)

    # -- basic container behaviour -------------------------------------

    @property
    def n(self) -> int:
        return len(self.sites)

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, site) -> bool:
        return tuple(site) in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Cluster) and self.dim == other.dim and self.sites == other.sites

    def __hash__(self) -> int:
        return hash((self.dim, self.sites))

    def __repr__(self) -> str:
        return f"Cluster(dim={self.dim}, n={self.n})"

    def index(self, site) -> int:
        site = _as_site(site, self.dim)
        try:
            return self._index[site]
        except KeyError:
            raise InputError(f"site {site} is not occupied in this cluster")

    @property
    def gamma(self) -> tuple[Site, ...]:
        return unit_vectors(self.dim)

    # -- neighborhood structure ----------------------------------------

    def neighbors(self, site) -> tuple[Site, ...]:
        """Occupied neighbors of ``site``, in lexicographic order."""
        site = _as_site(site, self.dim)
        out = []
        for g in self.gamma:
            for nb in (_sub(site, g), _add(site, g)):
                if nb in self._index:
                    out.append(nb)
        return tuple(sorted(out))

    def forward_edges(self) -> list[tuple[Site, Site]]:
        """All occupied directed pairs ``(a, a + gamma)``, ordered by source site."""
        edges = []
        for a in self.sites:
            for g in self.gamma:
                b = _add(a, g)
                if b in self._index:
                    edges.append((a, b))
        return edges

    def edge_index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Qubit-index form of :meth:`forward_edges` as two int arrays."""
        edges = self.forward_edges()
        src = np.fromiter((self._index[a] for a, _ in edges), dtype=np.int64, count=len(edges))
        dst = np.fromiter((self._index[b] for _, b in edges), dtype=np.int64, count=len(edges))
        return src, dst

    def in_degree(self, site) -> int:
        """Number of occupied predecessors ``site - gamma``."""
        site = _as_site(site, self.dim)
        return sum(_sub(site, g) in self._index for g in self.gamma)

    def is_interior(self, site) -> bool:
        """True when all ``2 * dim`` lattice neighbors are occupied."""
        site = _as_site(site, self.dim)
        return all(
            _add(site, g) in self._index and _sub(site, g) in self._index for g in self.gamma
        )

    def interior_sites(self) -> tuple[Site, ...]:
        return tuple(s for s in self.sites if self.is_interior(s))

    # -- constructors ----------------------------------------------------

    @classmethod
    def chain(cls, n: int) -> "Cluster":
        """A 1D chain of ``n`` sites at coordinates ``(0,) .. (n-1,)``."""
        if n < 1:
            raise EmptyLatticeError("chain length must be positive")
        return cls(1, [(i,) for i in range(n)])

    @classmethod
    def block(cls, shape, origin=None) -> "Cluster":
        """A filled rectangular block with the given side lengths."""
        shape = tuple(int(x) for x in shape)
        dim = len(shape)
        if not 1 <= dim <= MAX_DIM:
            raise InputError(f"block shape must have 1..{MAX_DIM} sides, got {shape}")
        if any(x < 1 for x in shape):
            raise EmptyLatticeError(f"block sides must be positive, got {shape}")
        origin = (0,) * dim if origin is None else _as_site(origin, dim)
        sites = [_add(origin, s) for s in itertools.product(*(range(x) for x in shape))]
        return cls(dim, sites)


def l_shape(rows: int, cols: int) -> Cluster:
    """An L-shaped 2D cluster: the first column of length ``rows`` plus the
    bottom row of length ``cols``, sharing the corner at the origin."""
    if rows < 1 or cols < 1:
        raise EmptyLatticeError("l_shape arms must be positive")
    sites = {(r, 0) for r in range(rows)} | {(0, c) for c in range(cols)}
    return Cluster(2, sites)


def decompose(occ: OccupationSet) -> list[Cluster]:
    """Split an occupation pattern into its connected clusters.

    Clusters come back sorted by their smallest site, so the result is
    deterministic for a given pattern.
    """
    remaining = set(occ.sites)
    steps = unit_vectors(occ.dim)
    parts = []
    while remaining:
        seed = min(remaining)
        comp = {seed}
        queue = deque([seed])
        while queue:
            s = queue.popleft()
            for g in steps:
                for nb in (_add(s, g), _sub(s, g)):
                    if nb in remaining and nb not in comp:
                        comp.add(nb)
                        queue.append(nb)
        remaining -= comp
        parts.append(Cluster(occ.dim, comp))
    parts.sort(key=lambda c: c.sites[0])
    return parts


@dataclass(frozen=True)
class Path:
    """An ordered, self-avoiding walk of pairwise-adjacent occupied sites."""

    sites: tuple[Site, ...]

    def __post_init__(self):
        if len(set(self.sites)) != len(self.sites):
            raise InputError("path revisits a site")
        for a, b in zip(self.sites, self.sites[1:]):
            if not adjacent(a, b):
                raise InputError(f"path sites {a} and {b} are not lattice neighbors")

    def __len__(self) -> int:
        return len(self.sites)

    def validate_in(self, cluster: Cluster) -> None:
        for s in self.sites:
            if s not in cluster:
                raise InputError(f"path site {s} is not occupied in the cluster")

    def is_induced(self, cluster: Cluster) -> bool:
        """True when no two non-consecutive path sites are cluster neighbors."""
        pos = {s: i for i, s in enumerate(self.sites)}
        for i, s in enumerate(self.sites):
            for nb in cluster.neighbors(s):
                j = pos.get(nb)
                if j is not None and abs(i - j) != 1:
                    return False
        return True


def find_path(cluster: Cluster, a, b) -> Path:
    """Shortest occupied path from ``a`` to ``b`` (BFS, lexicographic
    tie-break on the predecessor, so the result is deterministic)."""
    a = _as_site(a, cluster.dim)
    b = _as_site(b, cluster.dim)
    cluster.index(a), cluster.index(b)
    parent: dict[Site, Site | None] = {a: None}
    queue = deque([a])
    while queue:
        s = queue.popleft()
        if s == b:
            break
        for nb in cluster.neighbors(s):
            if nb not in parent:
                parent[nb] = s
                queue.append(nb)
    if b not in parent:
        raise InputError(f"no path between {a} and {b}")
    hops = [b]
    while parent[hops[-1]] is not None:
        hops.append(parent[hops[-1]])
    return Path(tuple(reversed(hops)))


def random_connected(dim: int, n: int, rng) -> Cluster:
    """Grow a random connected cluster of ``n`` sites from the origin."""
    rng = np.random.default_rng(rng)
    if n < 1:
        raise EmptyLatticeError("cluster size must be positive")
    steps = unit_vectors(dim)
    sites = {(0,) * dim}
    frontier = [(0,) * dim]
    while len(sites) < n:
        base = frontier[rng.integers(len(frontier))]
        g = steps[rng.integers(dim)]
        nb = _add(base, g) if rng.integers(2) else _sub(base, g)
        if nb not in sites:
            sites.add(nb)
            frontier.append(nb)
    return Cluster(dim, sites)


# -- JSON lattice specs ------------------------------------------------

def parse_spec(spec: dict) -> OccupationSet:
    """Read the JSON occupation-pattern format.

    Two forms are accepted::

        {"dim": 2, "sites": [[0, 0], [0, 1], [5, 5]]}
        {"dim": 2, "block": [7, 7], "origin": [0, 0]}

    ``origin`` defaults to zero.  ``dim`` may be omitted when ``block`` or
    the first site pins it down.
    """
    if not isinstance(spec, dict):
        raise InputError("lattice spec must be a JSON object")
    if "sites" in spec and "block" in spec:
        raise InputError("lattice spec cannot give both 'sites' and 'block'")
    if "block" in spec:
        shape = [int(x) for x in spec["block"]]
        dim = int(spec.get("dim", len(shape)))
        if dim != len(shape):
            raise InputError(f"dim {dim} does not match block shape {shape}")
        origin = spec.get("origin", (0,) * dim)
        block = Cluster.block(shape, origin)
        return OccupationSet(dim, frozenset(block.sites))
    if "sites" in spec:
        raw = list(spec["sites"])
        if not raw:
            raise EmptyLatticeError("lattice spec lists no sites")
        first = _as_site(raw[0])
        dim = int(spec.get("dim", len(first)))
        return OccupationSet.from_sites(dim, raw)
    raise InputError("lattice spec needs either 'sites' or 'block'")


def to_spec(occ: OccupationSet | Cluster) -> dict:
    sites = sorted(occ.sites)
    return {"dim": occ.dim, "sites": [list(s) for s in sites]}
