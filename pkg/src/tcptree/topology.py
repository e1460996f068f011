"""Homogeneous trees with an embedded spine, their oriented variants and
finite truncations.

Sites are addressed relative to a bi-infinite spine (a copy of the integers
running through the root).  A spine site ``j`` has ``b - 1`` off-spine
neighbours; each of those is the root of a ``b``-ary subtree.  An address is
therefore a spine coordinate plus a path of child indices::

    SiteAddress(spine=j, path=(k0, k1, ..., km))

with ``k0 in range(b - 1)`` and ``ki in range(b)`` for ``i >= 1``.  The level
of a site (which ``L_n`` it belongs to) is ``len(path)`` and its distance to
the root is ``abs(spine) + len(path)``.

Four graph variants share this vertex set (or its forward half):

``UNORIENTED``
    the homogeneous tree of degree ``b + 1``.
``ORIENTED``
    influence only flows forward: along the spine ``j -> j + 1`` and away
    from the spine.  Every site has exactly ``b`` influence neighbours.
``FORWARD``
    the sites reachable from the root by forward steps (spine ``j >= 0``),
    with the unoriented neighbourhood restricted to that set.
``ORIENTED_FORWARD``
    the same vertex set with forward-only neighbourhoods.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

DEFAULT_SITE_CAP = 5_000_000


class AddressError(ValueError):
    """A site address that is malformed or not part of the graph."""


class ResourceError(RuntimeError):
    """A finite region would exceed the configured size cap."""


class Variant(enum.Enum):
    UNORIENTED = "unoriented"
    ORIENTED = "oriented"
    FORWARD = "forward"
    ORIENTED_FORWARD = "oriented_forward"

    @property
    def oriented(self) -> bool:
        return self in (Variant.ORIENTED, Variant.ORIENTED_FORWARD)

    @property
    def forward_only(self) -> bool:
        return self in (Variant.FORWARD, Variant.ORIENTED_FORWARD)


@dataclass(frozen=True, order=True)
class SiteAddress:
    spine: int = 0
    path: tuple[int, ...] = ()

    @property
    def level(self) -> int:
        return len(self.path)

    @property
    def depth(self) -> int:
        """Graph distance to the root (spine site 0)."""
        return abs(self.spine) + len(self.path)

    def __repr__(self) -> str:
        if not self.path:
            return f"SiteAddress({self.spine})"
        return f"SiteAddress({self.spine}, {self.path})"


ROOT = SiteAddress(0)


def spine(j: int) -> SiteAddress:
    return SiteAddress(j)


@dataclass(frozen=True)
class Ball:
    """All sites within ``radius`` of the root."""

    radius: int


@dataclass(frozen=True)
class Tube:
    """All sites within ``width`` of the spine segment ``{0, ..., length}``."""

    length: int
    width: int


@dataclass(frozen=True)
class TreeTopology:
    b: int
    variant: Variant = Variant.UNORIENTED
    truncation: Ball | Tube | None = None
    cap: int = field(default=DEFAULT_SITE_CAP, compare=False)

    def __post_init__(self):
        if self.b < 2:
            raise ValueError(f"branching number must be >= 2, got {self.b}")
        if isinstance(self.variant, str):
            object.__setattr__(self, "variant", Variant(self.variant))
        if isinstance(self.truncation, Tube) and self.variant.forward_only:
            raise ValueError("tube truncations are defined on the full tree only")

    @property
    def max_degree(self) -> int:
        return self.b if self.variant.oriented else self.b + 1

    # -- vertex set -------------------------------------------------------

    def _check_address(self, v: SiteAddress) -> None:
        if not isinstance(v, SiteAddress):
            raise AddressError(f"not a site address: {v!r}")
        if self.variant.forward_only and v.spine < 0:
            raise AddressError(f"{v!r} is not in the forward tree")
        for i, k in enumerate(v.path):
            limit = self.b - 1 if i == 0 else self.b
            if not 0 <= k < limit:
                raise AddressError(f"child index {k} out of range in {v!r}")

    def in_graph(self, v: SiteAddress) -> bool:
        try:
            self._check_address(v)
        except AddressError:
            return False
        return True

    def in_region(self, v: SiteAddress) -> bool:
        if not self.in_graph(v):
            return False
        t = self.truncation
        if t is None:
            return True
        if isinstance(t, Ball):
            return v.depth <= t.radius
        return _tube_distance(v, t.length) <= t.width


def _tube_distance(v: SiteAddress, length: int) -> int:
    off = -v.spine if v.spine < 0 else max(0, v.spine - length)
    return off + len(v.path)


def _forward(b: int, v: SiteAddress) -> list[SiteAddress]:
    if not v.path:
        out = [SiteAddress(v.spine + 1)]
        out.extend(SiteAddress(v.spine, (k,)) for k in range(b - 1))
        return out
    return [SiteAddress(v.spine, v.path + (k,)) for k in range(b)]


def _backward(v: SiteAddress) -> SiteAddress:
    if not v.path:
        return SiteAddress(v.spine - 1)
    return SiteAddress(v.spine, v.path[:-1])


def forward_neighbors(topo: TreeTopology, v: SiteAddress) -> list[SiteAddress]:
    topo._check_address(v)
    return _forward(topo.b, v)


def backward_neighbor(topo: TreeTopology, v: SiteAddress) -> SiteAddress | None:
    topo._check_address(v)
    if topo.variant.forward_only and v == ROOT:
        return None
    return _backward(v)


def _influence(topo: TreeTopology, v: SiteAddress) -> list[SiteAddress]:
    nbrs = _forward(topo.b, v)
    if not topo.variant.oriented:
        if not (topo.variant.forward_only and v.spine == 0 and not v.path):
            nbrs.append(_backward(v))
    return nbrs


def structural_neighbors(topo: TreeTopology, v: SiteAddress) -> list[SiteAddress]:
    """Undirected tree neighbours inside the variant's vertex set."""
    nbrs = _forward(topo.b, v)
    if not (topo.variant.forward_only and v.spine == 0 and not v.path):
        nbrs.append(_backward(v))
    return nbrs


def influence_neighborhood(topo: TreeTopology, v: SiteAddress) -> frozenset[SiteAddress]:
    """The influence neighbourhood of ``v`` in the full (untruncated) graph.

    Sites that fall outside the truncation are still returned; use
    :func:`split_neighborhood` to separate them from the interior.
    """
    if not topo.in_region(v):
        raise AddressError(f"{v!r} is not a site of {topo}")
    return frozenset(_influence(topo, v))


def split_neighborhood(topo: TreeTopology, v: SiteAddress):
    """Return ``(inside, boundary)`` parts of the influence neighbourhood."""
    nbrs = influence_neighborhood(topo, v)
    inside = frozenset(u for u in nbrs if topo.in_region(u))
    return inside, nbrs - inside


def distance(topo: TreeTopology, u: SiteAddress, v: SiteAddress) -> int:
    topo._check_address(u)
    topo._check_address(v)
    if u.spine != v.spine:
        return abs(u.spine - v.spine) + len(u.path) + len(v.path)
    common = 0
    for a, c in zip(u.path, v.path):
        if a != c:
            break
        common += 1
    return len(u.path) + len(v.path) - 2 * common


def region_size(topo: TreeTopology) -> int:
    """Closed-form number of sites in the truncation."""
    t = topo.truncation
    b = topo.b
    if t is None:
        raise ValueError("topology has no truncation")
    if isinstance(t, Ball):
        n = t.radius
        if topo.variant.forward_only:
            return (b ** (n + 1) - 1) // (b - 1)
        return 1 + (b + 1) * (b**n - 1) // (b - 1)
    # Tube: spine sites at offset o carry (b-1) subtrees of depth width-o-1.
    total = 0
    for j in range(-t.width, t.length + t.width + 1):
        o = _tube_distance(SiteAddress(j), t.length)
        rem = t.width - o
        total += 1 + (b - 1) * (b**rem - 1) // (b - 1)
    return total


def _enumerate(topo: TreeTopology) -> Iterator[SiteAddress]:
    t = topo.truncation
    b = topo.b
    if isinstance(t, Ball):
        n = t.radius
        lo = 0 if topo.variant.forward_only else -n
        spines = range(lo, n + 1)
        budget = {j: n - abs(j) for j in spines}
    else:
        spines = range(-t.width, t.length + t.width + 1)
        budget = {j: t.width - _tube_distance(SiteAddress(j), t.length) for j in spines}
    for j in spines:
        yield SiteAddress(j)
        frontier = [SiteAddress(j, (k,)) for k in range(b - 1)] if budget[j] >= 1 else []
        level = 1
        while frontier:
            yield from frontier
            if level >= budget[j]:
                break
            frontier = [SiteAddress(j, v.path + (k,)) for v in frontier for k in range(b)]
            level += 1


def _canonical_key(v: SiteAddress):
    return (v.depth, v.spine, v.path)


def enumerate_region(topo: TreeTopology) -> list[SiteAddress]:
    """All sites of the truncation in canonical order.

    The order is by distance to the root, then spine coordinate, then path,
    so the sites of a smaller ball are a prefix of those of a larger one.
    """
    if topo.truncation is None:
        raise ValueError("topology has no truncation")
    size = region_size(topo)
    if size > topo.cap:
        raise ResourceError(f"region has {size} sites, cap is {topo.cap}")
    return sorted(_enumerate(topo), key=_canonical_key)


class Region:
    """A truncation compiled to integer arrays for the simulation kernels.

    Attributes
    ----------
    sites : list of SiteAddress
        canonical order; ``index[site]`` inverts it.
    nbr_ptr, nbr_idx : int64 arrays
        CSR lists of in-region influence neighbours.
    rev_ptr, rev_idx : int64 arrays
        CSR lists of the sites each site influences.
    n_boundary : int32 array
        number of influence neighbours outside the truncation.
    adj_ptr, adj_idx : int64 arrays
        undirected tree adjacency restricted to the region.
    dist : int32 array
        distance to the root.
    """

    def __init__(self, topo: TreeTopology):
        self.topo = topo
        self.sites = enumerate_region(topo)
        self.index = {v: i for i, v in enumerate(self.sites)}
        n = len(self.sites)
        nbr_lists = []
        n_boundary = np.zeros(n, dtype=np.int32)
        adj_lists = []
        boundary = set()
        for i, v in enumerate(self.sites):
            inside = []
            for u in _influence(topo, v):
                j = self.index.get(u)
                if j is None:
                    n_boundary[i] += 1
                    boundary.add(u)
                else:
                    inside.append(j)
            nbr_lists.append(inside)
            adj_lists.append(
                [self.index[u] for u in structural_neighbors(topo, v) if u in self.index]
            )
        self.nbr_ptr, self.nbr_idx = _csr(nbr_lists)
        rev_lists: list[list[int]] = [[] for _ in range(n)]
        for i, lst in enumerate(nbr_lists):
            for j in lst:
                rev_lists[j].append(i)
        self.rev_ptr, self.rev_idx = _csr(rev_lists)
        self.adj_ptr, self.adj_idx = _csr(adj_lists)
        self.n_boundary = n_boundary
        self.boundary = frozenset(boundary)
        self.dist = np.array([v.depth for v in self.sites], dtype=np.int32)

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, v) -> bool:
        return v in self.index

    def indices(self, sites) -> np.ndarray:
        try:
            return np.array([self.index[v] for v in sites], dtype=np.int64)
        except KeyError as exc:
            raise AddressError(f"{exc.args[0]!r} is not in the region") from None

    def neighbors_of(self, i: int) -> np.ndarray:
        return self.nbr_idx[self.nbr_ptr[i] : self.nbr_ptr[i + 1]]


def _csr(lists):
    ptr = np.zeros(len(lists) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(x) for x in lists])
    idx = np.fromiter((j for x in lists for j in x), dtype=np.int64, count=int(ptr[-1]))
    return ptr, idx


@functools.lru_cache(maxsize=32)
def compile_region(topo: TreeTopology) -> Region:
    """Cached :class:`Region` for a truncated topology."""
    return Region(topo)
