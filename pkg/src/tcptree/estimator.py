"""Monte Carlo densities and finite-time dichotomy probes.

Densities are replica averages of a site indicator.  Every estimate is run
twice on the same marks, with the truncation boundary held at 0 and at 1;
by attractivity the infinite-volume value lies between the two means, and
the fraction of replicas on which they disagree is reported.

The probes turn these estimates into evidence labels: a density that falls
below a critical level at some sampled time is evidence of exponential
decay, a density that stays above it is evidence of survival, and anything
in between is inconclusive.  Every comparison carries a margin of three
standard errors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import graphical as gr
from .meanfield import MFParams, fit_decay_rate, lambda_c_mf, oriented_lambda_bound, p_c_mf
from .topology import ROOT, Ball, SiteAddress, TreeTopology, Variant, spine

MARGIN = 3.0


@dataclass
class DensityEstimate:
    """Replica-averaged occupation of one site.

    ``mean``/``se`` come from the boundary-0 run (a lower bound on the
    infinite-volume density); ``upper``/``upper_se`` from the boundary-1 run.
    ``time_average`` is the replica mean of ``(1/t) * integral_0^t`` of the
    indicator (trapezoid rule on the sample grid), with its own standard
    error.
    """

    times: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    upper: np.ndarray
    upper_se: np.ndarray
    disagreement: np.ndarray
    time_average: np.ndarray
    time_average_se: np.ndarray
    replicas: int
    seed: int
    radius: int
    effectively_infinite: bool

    @property
    def lower(self) -> np.ndarray:
        return self.mean


def _se(m: np.ndarray, r: int) -> np.ndarray:
    return np.sqrt(np.clip(m * (1.0 - m), 0.0, None) / max(r, 1))


def _running_average(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Per-replica ``(1/t) int_0^t x`` on the grid; ``x`` is ``(R, S)``."""
    out = np.empty(x.shape, dtype=np.float64)
    if x.shape[1] == 0:
        return out
    out[:, 0] = x[:, 0]
    if x.shape[1] > 1:
        seg = 0.5 * (x[:, 1:] + x[:, :-1]) * np.diff(t)[None, :]
        cum = np.cumsum(seg, axis=1)
        span = t[1:] - t[0]
        with np.errstate(invalid="ignore", divide="ignore"):
            out[:, 1:] = np.where(span > 0, cum / np.where(span > 0, span, 1.0), x[:, 1:])
    return out


def _radius(topo: TreeTopology) -> int:
    tr = topo.truncation
    return tr.radius if isinstance(tr, Ball) else tr.width


def _estimate(spec: gr.ProcessSpec, init_p: float, site: SiteAddress, t_grid, replicas: int, seed: int,
              sandwich: bool = True, threads: int | None = None, lam_max: float | None = None,
              strict: bool = False, keep_states: bool = False):
    t = np.asarray(t_grid, dtype=np.float64)
    region = spec.region
    if site not in region:
        raise gr.AddressError(f"{site!r} is not in the region")
    radius = _radius(spec.topology)
    dist = int(region.dist[region.index[site]])
    need = gr.conservative_radius(spec.lam, float(t[-1]) if len(t) else 0.0, dist)
    ok = radius >= need
    if strict and not ok:
        raise gr.SpecError(f"radius {radius} is below the conservative requirement {need}")
    lo = gr.run_replicas(spec.with_boundary(0), init_p, t, [site], replicas, seed, lam_max=lam_max,
                         threads=threads)
    x = lo.states[:, :, 0].astype(np.float64)
    m = x.mean(axis=0) if replicas else np.zeros(len(t))
    if sandwich:
        hi = gr.run_replicas(spec.with_boundary(1), init_p, t, [site], replicas, seed, lam_max=lam_max,
                             threads=threads)
        y = hi.states[:, :, 0].astype(np.float64)
        u = y.mean(axis=0) if replicas else np.zeros(len(t))
        dis = (x != y).mean(axis=0) if replicas else np.zeros(len(t))
    else:
        y = None
        u, dis = m.copy(), np.full(len(t), np.nan)
    ta = _running_average(x, t)
    ta_m = ta.mean(axis=0) if replicas else np.zeros(len(t))
    ta_se = ta.std(axis=0, ddof=1) / math.sqrt(replicas) if replicas > 1 else np.zeros(len(t))
    est = DensityEstimate(t, m, _se(m, replicas), u, _se(u, replicas), dis, ta_m, ta_se, replicas,
                          seed, radius, ok)
    if keep_states:
        return est, x.astype(np.uint8), (y.astype(np.uint8) if y is not None else None)
    return est


def rho_estimate(topo: TreeTopology, theta: int, lam: float, init_p: float, site: SiteAddress = ROOT,
                 t_grid=(0.0,), replicas: int = 10_000, seed: int = 0, rule: gr.Rule = gr.Rule.THRESHOLD,
                 sandwich: bool = True, strict: bool = False, threads: int | None = None) -> DensityEstimate:
    """Density at ``site`` from the product start of density ``init_p``.

    With ``strict=True`` a truncation smaller than the conservative radius
    rule raises :class:`~tcptree.graphical.SpecError`; otherwise the flag
    ``effectively_infinite`` records whether the rule holds.
    """
    spec = gr.ProcessSpec(rule, topo, lam, theta)
    return _estimate(spec, init_p, site, t_grid, replicas, seed, sandwich, threads, strict=strict)


def sigma_estimate(topo: TreeTopology, theta: int, lam: float, p: float, l: int, t_grid,
                   replicas: int = 10_000, seed: int = 0, sandwich: bool = True,
                   threads: int | None = None) -> DensityEstimate:
    """Density at spine site ``l >= 0`` with spine site -1 frozen occupied."""
    if l < 0:
        raise ValueError("l must be >= 0")
    if topo.variant is not Variant.UNORIENTED:
        raise gr.SpecError("the frozen-neighbour process lives on the unoriented tree")
    spec = gr.ProcessSpec(gr.Rule.THRESHOLD, topo, lam, theta, {spine(-1): 1})
    return _estimate(spec, p, spine(l), t_grid, replicas, seed, sandwich, threads)


def pi_closed_form(p, lam, t):
    """Occupation probability of an isolated site flipping 0->1 at rate ``lam`` and 1->0 at rate 1."""
    q = lam / (1.0 + lam)
    return q + (np.asarray(p, dtype=float) - q) * np.exp(-(1.0 + lam) * np.asarray(t, dtype=float))


def forward_drift_slack(sigma_l: DensityEstimate, sigma_next: DensityEstimate, lam: float, b: int,
                        k: float = 5.0) -> np.ndarray:
    """Slack in the integrated forward-neighbour bound, per grid interval.

    Returns ``int(-s_l + lam b s_{l+1}) + k * err - (s_l(t+dt) - s_l(t))``
    over each interval, with the integral by the trapezoid rule and
    ``err`` the propagated standard error.  Nonnegative entries are
    consistent with the bound.
    """
    t = sigma_l.times
    dt = np.diff(t)
    s, s1 = sigma_l.mean, sigma_next.mean
    e, e1 = sigma_l.se, sigma_next.se
    integrand = -s + lam * b * s1
    integral = 0.5 * (integrand[1:] + integrand[:-1]) * dt
    inc = np.diff(s)
    err = np.sqrt(e[1:] ** 2 + e[:-1] ** 2
                  + (0.5 * dt) ** 2 * (e[1:] ** 2 + e[:-1] ** 2)
                  + (0.5 * dt * lam * b) ** 2 * (e1[1:] ** 2 + e1[:-1] ** 2))
    return integral + k * err - inc


# ---------------------------------------------------------------------------
# probes


class Regime(enum.Enum):
    SURVIVAL = "SurvivalEvidence"
    DECAY = "DecayEvidence"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class DichotomyVerdict:
    regime: Regime
    condition: str
    t_trigger: float = float("nan")
    threshold: float = float("nan")
    rate: float = float("nan")
    rate_se: float = float("nan")
    prefactor: float = float("nan")
    margin_se: float = float("nan")
    estimate: DensityEstimate | None = field(default=None, repr=False)


def _trend(times, values, ses):
    """Least-squares slope of ``values`` over the last half-window and its SE."""
    t = np.asarray(times)
    m = t >= t[0] + 0.5 * (t[-1] - t[0])
    tt, yy = t[m], np.asarray(values)[m]
    if len(tt) < 2:
        return 0.0, 0.0
    w = tt - tt.mean()
    denom = float((w * w).sum())
    slope = float((w * yy).sum() / denom)
    se = float(math.sqrt(float((w * w * np.asarray(ses)[m] ** 2).sum())) / denom)
    return slope, se


def _decay_fit(est: DensityEstimate):
    rate, pref, se = fit_decay_rate(est.times, est.upper)
    return rate, se, pref


def oriented_verdict(est: DensityEstimate, pc: float) -> DichotomyVerdict:
    """Apply the oriented-tree decision rule to an estimate and a critical level."""
    # without a mean-field root every positive level is eventually crossed;
    # use the largest one
    level = 1.0 if math.isinf(pc) else pc
    hi = est.upper + MARGIN * est.upper_se
    for i, t in enumerate(est.times):
        if hi[i] < level:
            rate, se, pref = _decay_fit(est)
            return DichotomyVerdict(Regime.DECAY, "upper+3SE<p_c_mf", float(t), pc, rate, se, pref,
                                    float(est.upper_se[i]), est)
    lo = est.mean - MARGIN * est.se
    if not math.isinf(pc) and np.all(lo >= pc):
        slope, sse = _trend(est.times, est.mean, est.se)
        if slope + MARGIN * sse >= 0:
            return DichotomyVerdict(Regime.SURVIVAL, "lower-3SE>=p_c_mf;trend>=0", float("nan"), pc,
                                    estimate=est, margin_se=float(est.se.max()))
    return DichotomyVerdict(Regime.INCONCLUSIVE, "none", threshold=pc, estimate=est)


def default_oriented_depth(b: int, max_sites: int = 4096) -> int:
    d = 0
    while (b ** (d + 2) - 1) // (b - 1) <= max_sites:
        d += 1
    return d


def dichotomy_probe_oriented(b: int, theta: int, lam: float, p: float, t_max: float,
                             replicas: int = 10_000, seed: int = 0, depth: int | None = None,
                             n_times: int = 13, threads: int | None = None) -> DichotomyVerdict:
    """Finite-time test on the oriented tree against ``p_c_mf(b, theta, lam)``.

    The root's forward cone is the forward tree, so the oriented forward
    tree truncated at ``depth`` is simulated with both boundary spins.
    """
    if depth is None:
        depth = default_oriented_depth(b)
    topo = TreeTopology(b, Variant.ORIENTED_FORWARD, Ball(depth))
    pc = p_c_mf(MFParams(b, theta, lam)) if lam > 0 else math.inf
    t = np.linspace(0.0, t_max, n_times)
    spec = gr.ProcessSpec(gr.Rule.THRESHOLD, topo, lam, theta)
    est = _estimate(spec, p, ROOT, t, replicas, seed, True, threads)
    return oriented_verdict(est, pc)


DEFAULT_DELTA_STAR = 0.5
DEFAULT_DELTA = 0.5
DEFAULT_T_STAR = 2.0


def dichotomy_probe_unoriented(b: int, theta: int, lam: float, p: float, t_max: float,
                               replicas: int = 10_000, seed: int = 0,
                               delta_star: float = DEFAULT_DELTA_STAR, t_star: float = DEFAULT_T_STAR,
                               delta: float = DEFAULT_DELTA, radius: int = 3, n_times: int = 21,
                               threads: int | None = None) -> DichotomyVerdict:
    """Finite-time test on the unoriented tree.

    Decay evidence: the frozen-neighbour density at the root (upper run)
    plus 3 SE drops below ``delta_star / b`` at a sampled ``t >= t_star``.
    Survival evidence: the running time average of the root density (lower
    run) minus 3 SE stays at or above ``delta / b`` over the final half
    window.  The thresholds are configuration values, not derived constants.
    """
    topo = TreeTopology(b, Variant.UNORIENTED, Ball(radius))
    t = np.linspace(0.0, t_max, n_times)
    sig = sigma_estimate(topo, theta, lam, p, 0, t, replicas, seed, True, threads)
    level = delta_star / b
    hi = sig.upper + MARGIN * sig.upper_se
    for i, ti in enumerate(t):
        if ti >= t_star and hi[i] < level:
            rate, se, pref = fit_decay_rate(t, sig.upper)
            return DichotomyVerdict(Regime.DECAY, "sigma+3SE<delta*/b", float(ti), level, rate, se, pref,
                                    float(sig.upper_se[i]), sig)
    rho = rho_estimate(topo, theta, lam, p, ROOT, t, replicas, seed + 1, threads=threads)
    floor = delta / b
    m = t >= t[0] + 0.5 * (t[-1] - t[0])
    lo = rho.time_average - MARGIN * rho.time_average_se
    if np.all(lo[m] >= floor):
        return DichotomyVerdict(Regime.SURVIVAL, "time-average-3SE>=delta/b", float("nan"), floor,
                                margin_se=float(rho.time_average_se[m].max()), estimate=rho)
    return DichotomyVerdict(Regime.INCONCLUSIVE, "none", threshold=level, estimate=sig)


# ---------------------------------------------------------------------------
# phase sweep


@dataclass
class SweepPoint:
    lam: float
    p: float
    verdict: DichotomyVerdict
    pc_harris: float
    pc_thm1: float
    flagged_harris: bool
    flagged_thm1: bool
    flagged_thm1_decay: bool = False


@dataclass
class PhaseSweep:
    b: int
    theta: int
    lambda_grid: np.ndarray
    p_grid: np.ndarray
    points: list
    completed: np.ndarray
    inversions: list
    coupling_violations: int
    lambda_c_mf: float
    replicas: int
    seed: int
    depth: int
    t_max: float

    @property
    def complete(self) -> bool:
        return bool(self.completed.all())

    def table(self) -> np.ndarray:
        out = np.empty(self.completed.shape, dtype=object)
        for pt in self.points:
            i = int(np.searchsorted(self.lambda_grid, pt.lam))
            j = int(np.searchsorted(self.p_grid, pt.p))
            out[i, j] = pt.verdict.regime
        return out

    @property
    def flagged_harris(self) -> int:
        return sum(pt.flagged_harris for pt in self.points)

    @property
    def flagged_thm1(self) -> int:
        return sum(pt.flagged_thm1 for pt in self.points)

    @property
    def flagged_thm1_decay(self) -> int:
        return sum(pt.flagged_thm1_decay for pt in self.points)


def phase_sweep(b: int, theta: int, lambda_grid, p_grid, replicas: int = 10_000, seed: int = 0,
                t_max: float = 2.0, depth: int | None = None, budget: int | None = None,
                n_times: int = 9, threads: int | None = None) -> PhaseSweep:
    """Oriented-tree verdicts on a ``(lam, p)`` grid with monotone coupling.

    All grid points share the seed: initial configurations are nested in
    ``p`` and U marks are thinned from the largest rate, so the estimates
    are pathwise monotone in both coordinates.  The sweep audits that
    coupling exactly and checks that no survival verdict sits below-left of
    a decay verdict.  Each point also carries two mean-field overlays: the
    necessary survival level ``p_c_mf(b, theta, lam)`` and the sufficient
    level ``p_c_mf(b, theta, lam/(lam+1))``.  A survival point more than
    3 SE below the first is flagged.  For the second, a survival point is
    flagged when ``lam/(lam+1) < lambda_c_mf`` and ``p`` is more than 3 SE
    below that level; the count is reported alongside.  Since the second
    level bounds the critical density from above, a decay point with
    ``lam/(lam+1) > lambda_c_mf`` and ``p`` more than 3 SE above it is
    flagged separately (``flagged_thm1_decay``).
    """
    lg = np.sort(np.asarray(lambda_grid, dtype=float))
    pg = np.sort(np.asarray(p_grid, dtype=float))
    if depth is None:
        depth = default_oriented_depth(b)
    topo = TreeTopology(b, Variant.ORIENTED_FORWARD, Ball(depth))
    t = np.linspace(0.0, t_max, n_times)
    lam_max = float(lg.max()) if len(lg) else 0.0
    completed = np.zeros((len(lg), len(pg)), dtype=bool)
    cost = 2 * replicas
    used = 0
    points = []
    states = {}
    lcm = lambda_c_mf(b, theta)
    for i, lam in enumerate(lg):
        pc_h = p_c_mf(MFParams(b, theta, lam)) if lam > 0 else math.inf
        q = lam / (lam + 1.0)
        pc_1 = p_c_mf(MFParams(b, theta, q)) if lam > 0 else math.inf
        for j, p in enumerate(pg):
            if budget is not None and used + cost > budget:
                continue
            spec = gr.ProcessSpec(gr.Rule.THRESHOLD, topo, float(lam), theta)
            est, xs, ys = _estimate(spec, float(p), ROOT, t, replicas, seed, True, threads,
                                    lam_max=lam_max, keep_states=True)
            used += cost
            states[(i, j)] = (xs, ys)
            v = oriented_verdict(est, pc_h)
            surv = v.regime is Regime.SURVIVAL
            se = float(est.se.max())
            fh = surv and (math.isinf(pc_h) or p + MARGIN * se < pc_h)
            f1 = surv and q < lcm and (math.isinf(pc_1) or p + MARGIN * se < pc_1)
            lam_ok = lam > oriented_lambda_bound(b, theta)
            fd = (v.regime is Regime.DECAY and lam_ok and q > lcm and p - MARGIN * se > pc_1)
            points.append(SweepPoint(float(lam), float(p), v, pc_h, pc_1, fh, f1, fd))
            completed[i, j] = True
    # exact coupling audit: each run dominates its left and lower neighbours pathwise
    violations = 0
    for (i, j), (x, y) in states.items():
        for (di, dj) in ((1, 0), (0, 1)):
            nb = states.get((i + di, j + dj))
            if nb is not None:
                violations += int(np.count_nonzero(x > nb[0])) + int(np.count_nonzero(y > nb[1]))
    inversions = []
    reg = {(i, j): None for i in range(len(lg)) for j in range(len(pg))}
    for pt in points:
        reg[(int(np.searchsorted(lg, pt.lam)), int(np.searchsorted(pg, pt.p)))] = pt.verdict.regime
    for (i, j), r in reg.items():
        if r is not Regime.SURVIVAL:
            continue
        for (k, l), s in reg.items():
            if k >= i and l >= j and s is Regime.DECAY:
                inversions.append(((lg[i], pg[j]), (lg[k], pg[l])))
    return PhaseSweep(b, theta, lg, pg, points, completed, inversions, violations, lcm, replicas, seed,
                      depth, t_max)
