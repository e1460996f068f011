"""Bootstrap percolation on trees: closure, recursion, grades and span bounds.

Bootstrap percolation is the threshold process with all 1 -> 0 flips
removed.  Its terminal set does not depend on the rate, so it is computed
here by synchronous rounds: a vacant site joins in round ``n`` once at
least ``theta`` of its influence neighbours were occupied after round
``n - 1``.

For the forward tree the probability that the root is occupied after ``n``
rounds obeys the scalar recursion

    p_n = p + (1 - p) * Bin(b, p_{n-1}, theta),    p_0 = p,

whose least fixed point above ``p`` is the probability that the root is
eventually occupied.  Grading the spine sites by how many of their
off-spine subtrees are internally occupied gives upper bounds on the
probability that an occupied cluster spans a long stretch of the spine,
and hence certificates for exponential decay of cluster radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .graphical import _parallel
from .meanfield import NumericError, binom_pmf, binom_tail
from .topology import Ball, Region, SiteAddress, TreeTopology, Tube, Variant, compile_region


class ArgumentError(ValueError):
    """An argument violating a documented precondition."""


# ---------------------------------------------------------------------------
# closure on a finite region


@dataclass
class BootstrapState:
    """Result of running the rounds to stabilisation (or to a round limit).

    ``join[i]`` is the round in which site ``i`` became occupied (0 for the
    initial set, -1 if never).
    """

    region: Region
    join: np.ndarray
    rounds: int
    stabilized: bool

    @property
    def occupied(self) -> frozenset:
        return frozenset(self.region.sites[i] for i in np.flatnonzero(self.join >= 0))

    def occupied_after(self, n: int) -> frozenset:
        m = (self.join >= 0) & (self.join <= n)
        return frozenset(self.region.sites[i] for i in np.flatnonzero(m))

    def __contains__(self, v: SiteAddress) -> bool:
        return bool(self.join[self.region.index[v]] >= 0)


def _initial_state(region: Region, S0) -> np.ndarray:
    if isinstance(S0, np.ndarray):
        if S0.shape != (len(region),):
            raise ArgumentError("initial state has the wrong length")
        return S0.astype(np.uint8)
    state = np.zeros(len(region), dtype=np.uint8)
    sites = list(S0)
    if sites:
        state[region.indices(sites)] = 1
    return state


def _closure(region: Region, state0, theta, frozen, boundary_spin, max_rounds):
    return _backend.kernels.bootstrap(region.nbr_ptr, region.nbr_idx, region.rev_ptr, region.rev_idx,
                                      region.n_boundary, boundary_spin, theta, frozen, state0,
                                      max_rounds)


def iterate(topo: TreeTopology, S0, theta: int, max_rounds: int | None = None,
            boundary_spin: int = 0) -> BootstrapState:
    """Bootstrap rounds on the truncation of ``topo`` from the initial set ``S0``.

    ``S0`` is an iterable of site addresses or a 0/1 array in region order.
    Sites outside the truncation count as ``boundary_spin``.
    """
    region = compile_region(topo)
    state0 = _initial_state(region, S0)
    limit = len(region) + 1 if max_rounds is None else int(max_rounds)
    frozen = np.full(len(region), -1, dtype=np.int8)
    join = _closure(region, state0, theta, frozen, boundary_spin, limit)
    rounds = int(join.max()) if len(join) else 0
    rounds = max(rounds, 0)
    if max_rounds is None:
        stabilized = True
    else:
        # one more round would add nothing iff the closure with limit + 1 agrees
        nxt = _closure(region, state0, theta, frozen, boundary_spin, limit + 1)
        stabilized = bool(np.array_equal(nxt >= 0, join >= 0))
    return BootstrapState(region, join, rounds, stabilized)


def internally_occupied(topo: TreeTopology, W, S0, w: SiteAddress, theta: int) -> bool:
    """Whether ``w`` is eventually occupied by the rounds restricted to ``W``.

    Sites outside ``W`` are held vacant, so the answer depends only on
    ``S0`` intersected with ``W``.
    """
    region = compile_region(topo)
    W = set(W)
    if w not in W:
        raise ArgumentError(f"{w!r} is not in W")
    state0 = _initial_state(region, S0)
    frozen = np.zeros(len(region), dtype=np.int8)
    frozen[region.indices(W)] = -1
    join = _closure(region, state0, theta, frozen, 0, len(region) + 1)
    return bool(join[region.index[w]] >= 0)


# ---------------------------------------------------------------------------
# forward-tree recursion


def p_plus_n(b: int, theta: int, p: float, n: int) -> list[float]:
    """``[p_0, ..., p_n]`` for the forward-tree recursion."""
    if not 0.0 <= p <= 1.0:
        raise ArgumentError(f"p must lie in [0, 1], got {p}")
    seq = [float(p)]
    x = float(p)
    for _ in range(n):
        x = p + (1.0 - p) * binom_tail(b, x, theta)
        seq.append(x)
    return seq


def p_plus_infty(b: int, theta: int, p: float, tol: float = 1e-14, max_iter: int = 1_000_000) -> float:
    """Least fixed point of ``x = p + (1 - p) Bin(b, x, theta)`` reached from ``x = p``."""
    if not 0.0 <= p <= 1.0:
        raise ArgumentError(f"p must lie in [0, 1], got {p}")
    if p in (0.0, 1.0):
        return float(p)
    x = float(p)
    for _ in range(max_iter):
        nxt = p + (1.0 - p) * binom_tail(b, x, theta)
        if abs(nxt - x) < tol:
            return float(nxt)
        x = nxt
    raise NumericError(f"fixed-point iteration did not converge; last iterate {x!r}")


# ---------------------------------------------------------------------------
# grades and span bounds


@dataclass(frozen=True)
class GradeProbs:
    p_A: float
    p_B: float
    p_C: float
    p_inf: float = float("nan")
    attempts: int = 0
    tail: bool = False

    @property
    def p_F(self) -> float:
        return max(0.0, 1.0 - self.p_A - self.p_B - self.p_C)


def grade_probs(b: int, theta: int, p: float, tail: bool = False, attempts: int | None = None) -> GradeProbs:
    """Probabilities of grades A, B and C for a spine site.

    ``X ~ Binomial(attempts, p_inf)`` counts internally occupied off-spine
    subtrees, with ``attempts = b - 2`` by default.  Grade A: the site is
    initially occupied or ``X >= theta``; B: ``X = theta - 1``; C:
    ``X = theta - 2``.  With ``tail=True`` grades B and C use the tail
    events ``X >= theta - 1`` and ``X >= theta - 2`` instead.
    """
    if b < 3:
        raise ArgumentError("grades need b >= 3")
    m = b - 2 if attempts is None else int(attempts)
    q = p_plus_infty(b, theta, p)
    p_A = p + (1.0 - p) * binom_tail(m, q, theta)
    if tail:
        p_B = (1.0 - p) * binom_tail(m, q, max(theta - 1, 0))
        p_C = (1.0 - p) * binom_tail(m, q, max(theta - 2, 0))
    else:
        p_B = (1.0 - p) * binom_pmf(m, q, theta - 1)
        p_C = (1.0 - p) * binom_pmf(m, q, theta - 2)
    return GradeProbs(float(p_A), float(p_B), float(p_C), q, m, tail)


@dataclass(frozen=True)
class SpanBound:
    """Upper bounds on spanning probabilities and the per-step factor."""

    kind: str
    p0n: float
    rn: float
    base: float
    grades: GradeProbs

    @property
    def geometric(self) -> bool:
        """The bound on P(R_n) decays exponentially in n."""
        return self.base < 1.0


def _rn_lift(b: int, n: int) -> float:
    return (b + 1) * float(b) ** (n - 1)


def span_bound_simple(b: int, theta: int, p: float, n: int, tail: bool = False,
                      grades: GradeProbs | None = None) -> SpanBound:
    """``P(0 <-> n) <= 3^{n+1} max(p_A, p_B)^{n/2}`` and its lift to ``R_n``."""
    if n < 1:
        raise ArgumentError("n must be >= 1")
    g = grades or grade_probs(b, theta, p, tail)
    m = max(g.p_A, g.p_B)
    p0n = 3.0 ** (n + 1) * m ** (n / 2)
    return SpanBound("simple", p0n, _rn_lift(b, n) * p0n, 3.0 * b * math.sqrt(m), g)


def pair_max(g: GradeProbs) -> float:
    return max(g.p_A**2, g.p_B**2, g.p_C * g.p_A)


def span_bound_elaborate(b: int, theta: int, p: float, n: int, tail: bool = False,
                         grades: GradeProbs | None = None) -> SpanBound:
    """``P(0 <-> n) <= 3^{n+1} max(p_A^2, p_B^2, p_C p_A)^{n/2 - 1}`` and its lift."""
    if n < 3:
        raise ArgumentError("the paired bound needs n >= 3")
    g = grades or grade_probs(b, theta, p, tail)
    m = pair_max(g)
    p0n = 3.0 ** (n + 1) * m ** (n / 2 - 1)
    return SpanBound("elaborate", p0n, _rn_lift(b, n) * p0n, 3.0 * b * math.sqrt(m), g)


def bar_gamma(gamma: float, theta: int, tol: float = 1e-15) -> float:
    """Smallest positive root of ``x = gamma + 2 x^theta / theta!``; ``inf`` if none.

    ``f(x) = gamma + 2 x^theta / theta! - x`` is convex with ``f(0) > 0``;
    a root exists iff ``f`` is non-positive at its minimiser, and the
    smallest root is bracketed by ``[0, x_min]``.
    """
    if gamma <= 0:
        raise ArgumentError("gamma must be > 0")
    if theta < 2:
        raise ArgumentError("theta must be >= 2")
    c = 2.0 / math.factorial(theta)
    f = lambda x: gamma + c * x**theta - x  # noqa: E731
    x_min = (math.factorial(theta - 1) / 2.0) ** (1.0 / (theta - 1))
    if f(x_min) > 0:
        return math.inf
    lo, hi = 0.0, x_min
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class CertificateReport:
    """Largest certified density for one bound type and the scaled quantities."""

    b: int
    theta: int
    bound: str
    p: float
    base: float
    certified: bool
    threshold: float
    gamma: float = float("nan")
    gamma_bar: float = float("nan")
    gamma_A: float = float("nan")
    gamma_B: float = float("nan")
    gamma_C: float = float("nan")
    gamma_prime: float = float("nan")
    grid: tuple = field(default=(), repr=False)

    @property
    def verdict(self) -> str:
        return "Certified" if self.certified else "NotCertified"

    @property
    def scaled(self) -> float:
        """``b^{theta/(theta-1)} p``."""
        return self.gamma


def _base(b, theta, p, bound, tail):
    g = grade_probs(b, theta, p, tail)
    m = max(g.p_A, g.p_B) if bound == "simple" else pair_max(g)
    return 3.0 * b * math.sqrt(m), g


def certify_p_exp_lower(b: int, theta: int, bound: str = "elaborate", threshold: float = 1.0,
                        tail: bool = False, p_min: float = 1e-14, grid_points: int = 400,
                        rtol: float = 1e-10) -> CertificateReport:
    """Largest ``p`` whose span-bound base is below ``threshold``.

    A log grid on ``[p_min, 1)`` locates the first uncertified density; the
    boundary between it and the previous grid point is then refined by
    bisection.  A base below 1 makes ``P(R_n)`` decay exponentially, so the
    returned ``p`` is a lower bound on the exponential-decay threshold.
    """
    if b < 3 or theta < 2:
        raise ArgumentError("need b >= 3 and theta >= 2")
    if bound not in ("simple", "elaborate"):
        raise ArgumentError(f"unknown bound {bound!r}")
    grid = np.logspace(math.log10(p_min), math.log10(0.999), grid_points)
    ok = [(_base(b, theta, float(x), bound, tail)[0] < threshold) for x in grid]
    alpha = theta / (theta - 1)
    scale = float(b) ** alpha
    if not ok[0]:
        base, _ = _base(b, theta, float(grid[0]), bound, tail)
        return CertificateReport(b, theta, bound, 0.0, base, False, threshold, grid=tuple(grid))
    first_bad = next((i for i, v in enumerate(ok) if not v), None)
    if first_bad is None:
        lo = float(grid[-1])
    else:
        lo, hi = float(grid[first_bad - 1]), float(grid[first_bad])
        while hi - lo > rtol * lo:
            mid = math.sqrt(lo * hi)
            if _base(b, theta, mid, bound, tail)[0] < threshold:
                lo = mid
            else:
                hi = mid
    base, g = _base(b, theta, lo, bound, tail)
    gamma = lo * scale
    return CertificateReport(
        b, theta, bound, lo, base, True, threshold,
        gamma=gamma,
        gamma_bar=bar_gamma(gamma, theta),
        gamma_A=g.p_A * scale,
        gamma_B=g.p_B * b,
        gamma_C=g.p_C * float(b) ** ((theta - 2) / (theta - 1)),
        gamma_prime=pair_max(g) * b * b,
        grid=tuple(grid),
    )


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass
class SpanEstimate:
    """Monte Carlo spanning frequencies on a finite truncation.

    Both are lower bounds on the infinite-volume probabilities because the
    truncation boundary is held vacant.
    """

    p0n: float
    p0n_se: float
    rn: float
    rn_se: float
    replicas: int
    depth: int
    lower_bound: bool = True


def _se(m: float, r: int) -> float:
    return math.sqrt(max(m * (1.0 - m), 0.0) / r) if r else float("nan")


def _bootstrap_mc(region: Region, theta, p, seed, replicas, max_rounds, obs, root, threads=None,
                  chunk=1024):
    k = _backend.kernels

    def work(r0, n):
        return k.bootstrap_mc(region.nbr_ptr, region.nbr_idx, region.rev_ptr, region.rev_idx,
                              region.n_boundary, 0, theta, float(p), seed, r0, n, max_rounds,
                              obs, root, region.adj_ptr, region.adj_idx, region.dist)

    joins, radius = _parallel(work, 0, replicas, threads, chunk)
    return joins, radius


def mc_span(b: int, theta: int, p: float, n: int, replicas: int, seed: int, depth: int = 3,
            threads: int | None = None) -> SpanEstimate:
    """Estimate ``P(0 <-> n)`` and ``P(R_n)``.

    ``0 <-> n`` (every spine site ``0..n`` eventually occupied) is measured on
    the sites within ``depth`` of the spine segment; ``R_n`` (the root's
    occupied cluster reaches distance ``n``) on the ball of radius
    ``n + depth``.
    """
    tube = compile_region(TreeTopology(b, Variant.UNORIENTED, Tube(n, depth)))
    obs = tube.indices([SiteAddress(j) for j in range(n + 1)])
    joins, _ = _bootstrap_mc(tube, theta, p, seed, replicas, len(tube) + 1, obs, -1, threads)
    span = np.all(joins >= 0, axis=1)
    ball = compile_region(TreeTopology(b, Variant.UNORIENTED, Ball(n + depth)))
    _, radius = _bootstrap_mc(ball, theta, p, seed + 1, replicas, len(ball) + 1,
                              np.zeros(0, dtype=np.int64), 0, threads)
    reach = radius >= n
    m0, m1 = float(span.mean()), float(reach.mean())
    return SpanEstimate(m0, _se(m0, replicas), m1, _se(m1, replicas), replicas, depth)


@dataclass
class RootEstimate:
    mean: float
    se: float
    replicas: int
    exact: float

    @property
    def null_se(self) -> float:
        """Standard error under the hypothesis that the true frequency is ``exact``.

        The plug-in error vanishes when every replica agrees, so the larger of
        the two is used for the z-score.
        """
        q = min(max(self.exact, 0.0), 1.0)
        return max(self.se, math.sqrt(q * (1.0 - q) / self.replicas))

    @property
    def z(self) -> float:
        s = self.null_se
        return (self.mean - self.exact) / s if s > 0 else (0.0 if self.mean == self.exact else math.inf)


def mc_root_occupation(b: int, theta: int, p: float, n: int, replicas: int, seed: int,
                       variant: Variant = Variant.FORWARD, threads: int | None = None) -> RootEstimate:
    """Frequency of ``root in S_n`` on the depth-``n`` forward tree, with the recursion value."""
    region = compile_region(TreeTopology(b, variant, Ball(n)))
    joins, _ = _bootstrap_mc(region, theta, p, seed, replicas, n, np.zeros(1, dtype=np.int64), -1,
                             threads)
    hit = joins[:, 0] >= 0
    m = float(hit.mean())
    return RootEstimate(m, _se(m, replicas), replicas, p_plus_n(b, theta, p, n)[-1])
