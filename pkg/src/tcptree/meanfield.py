"""Mean-field model of the threshold contact process.

A site with ``kappa`` neighbours, each occupied independently with the
current density ``x``, becomes occupied at rate ``lam`` when at least
``theta`` of them are occupied and empties at rate 1.  The density then obeys

    d rho / dt = -rho + lam * (1 - rho) * Bin(kappa, rho, theta)

and its long-time behaviour is governed by the sign of

    H(kappa, theta, lam; x) = -1 + lam * (1 - x) / x * Bin(kappa, x, theta).

This module evaluates the tail functions, integrates the ODE, locates the
critical rate and density, computes the large-degree constant ``Phi_theta``
and evaluates the survival certificate for the oriented tree.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, special

GRID_POINTS = 10_000
ROOT_TOL = 1e-10
LAMBDA_RTOL = 1e-9
PHI_RTOL = 1e-10
ODE_TOL = 1e-8


class DomainError(ValueError):
    """An argument outside the domain of a mean-field function."""


class NumericError(RuntimeError):
    """An iterative method failed to reach its tolerance."""


# ---------------------------------------------------------------------------
# tail functions


def binom_tail(kappa: int, x, theta: int):
    """P(Binomial(kappa, x) >= theta), extended by 1 for x > 1.

    Uses the regularized incomplete beta function
    ``I_x(theta, kappa - theta + 1)``, which is accurate for large ``kappa``.
    Accepts scalar or array ``x``.
    """
    if kappa < 0 or theta < 0:
        raise DomainError(f"kappa and theta must be >= 0 (got {kappa}, {theta})")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(np.isnan(xa)):
        raise DomainError("binom_tail needs x >= 0")
    if theta == 0:
        out = np.ones_like(xa)
    elif theta > kappa:
        out = np.where(xa > 1.0, 1.0, 0.0)
    else:
        out = special.betainc(theta, kappa - theta + 1, np.minimum(xa, 1.0))
        out = np.where(xa > 1.0, 1.0, out)
    return float(out) if np.ndim(out) == 0 else out


def binom_pmf(kappa: int, x: float, k: int) -> float:
    """P(Binomial(kappa, x) = k); zero outside ``0..kappa``."""
    if k < 0 or k > kappa:
        return 0.0
    return float(special.binom(kappa, k) * x**k * (1.0 - x) ** (kappa - k))


def poisson_tail(gamma, theta: int):
    """P(Poisson(gamma) >= theta) for gamma > 0."""
    ga = np.asarray(gamma, dtype=float)
    if np.any(ga <= 0):
        raise DomainError("poisson_tail needs gamma > 0")
    if theta <= 0:
        out = np.ones_like(ga)
    else:
        # regularized lower incomplete gamma P(theta, gamma)
        out = special.gammainc(theta, ga)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# H and the ODE


@dataclass(frozen=True)
class MFParams:
    kappa: int
    theta: int
    lam: float

    def __post_init__(self):
        if self.kappa < 1 or self.theta < 1:
            raise DomainError(f"need kappa >= 1 and theta >= 1, got {self.kappa}, {self.theta}")
        if not self.lam >= 0:
            raise DomainError(f"need lambda >= 0, got {self.lam}")

    @property
    def degenerate(self) -> bool:
        """No site can ever gain ``theta`` occupied neighbours."""
        return self.kappa < self.theta


def growth_factor(kappa: int, theta: int, x):
    """``g(x) = (1 - x) / x * Bin(kappa, x, theta)``, so ``H = -1 + lam * g``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("x must be > 0")
    out = (1.0 - xa) / xa * binom_tail(kappa, xa, theta)
    return float(out) if np.ndim(out) == 0 else out


def H(params: MFParams, x):
    """Per-capita growth rate of the mean-field density at density ``x``."""
    return -1.0 + params.lam * growth_factor(params.kappa, params.theta, x)


def mf_rhs(params: MFParams, rho):
    return -rho + params.lam * (1.0 - rho) * binom_tail(params.kappa, np.clip(rho, 0.0, None), params.theta)


@dataclass
class MFTrajectory:
    times: np.ndarray
    densities: np.ndarray
    p: float
    step: float = float("nan")
    refinements: int = 0


def _rk4(params, p, t_max, h, n_steps):
    y = float(p)
    out = np.empty(n_steps + 1)
    out[0] = y
    for i in range(n_steps):
        k1 = mf_rhs(params, y)
        k2 = mf_rhs(params, y + 0.5 * h * k1)
        k3 = mf_rhs(params, y + 0.5 * h * k2)
        k4 = mf_rhs(params, y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y = min(max(y, 0.0), 1.0)
        out[i + 1] = y
    return out


def mf_integrate(params: MFParams, p: float, t_max: float, dt_out: float = 0.1,
                 tol: float = ODE_TOL, max_halvings: int = 14) -> MFTrajectory:
    """Integrate the mean-field ODE from ``rho_0 = p`` on ``[0, t_max]``.

    Classical RK4 with a fixed step, halved until two successive refinements
    agree to ``tol`` in sup-norm on the output grid (spacing ``dt_out``).
    The comparison is relative for densities below 1, so exponentially small
    tails are resolved as well as the bulk.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if not t_max > 0:
        raise DomainError(f"t_max must be > 0, got {t_max}")
    n_out = max(1, int(math.ceil(t_max / dt_out - 1e-12)))
    times = np.linspace(0.0, t_max, n_out + 1)
    if p == 0.0:
        return MFTrajectory(times, np.zeros_like(times), 0.0, 0.0, 0)
    sub = 1
    prev = _rk4(params, p, t_max, t_max / n_out, n_out)
    for k in range(1, max_halvings + 1):
        sub *= 2
        fine = _rk4(params, p, t_max, t_max / (n_out * sub), n_out * sub)[::sub]
        scale = np.maximum(np.abs(fine), 1e-300)
        err = np.max(np.minimum(np.abs(fine - prev), np.abs(fine - prev) / scale))
        if err < tol:
            return MFTrajectory(times, fine, float(p), t_max / (n_out * sub), k)
        prev = fine
    raise NumericError(f"RK4 did not converge after {max_halvings} halvings (last sup error {err:.3e})")


def fit_decay_rate(times, values, window: tuple[float, float] | None = None):
    """Least-squares fit ``values ~ C exp(-rate t)``.

    By default the last half of the time range is used, which excludes the
    transient.  Returns ``(rate, prefactor, rate_stderr)``; non-positive
    values are dropped before taking logs.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is None:
        lo = t[0] + 0.5 * (t[-1] - t[0])
        window = (lo, t[-1])
    m = (t >= window[0]) & (t <= window[1]) & (v > 0)
    if m.sum() < 3:
        return float("nan"), float("nan"), float("nan")
    tt, yy = t[m], np.log(v[m])
    A = np.vstack([tt, np.ones_like(tt)]).T
    coef, res, *_ = np.linalg.lstsq(A, yy, rcond=None)
    slope, icpt = coef
    dof = len(tt) - 2
    if dof > 0:
        resid = yy - A @ coef
        s2 = float(resid @ resid) / dof
        se = math.sqrt(s2 / float(((tt - tt.mean()) ** 2).sum()))
    else:
        se = float("nan")
    return float(-slope), float(math.exp(icpt)), se


# ---------------------------------------------------------------------------
# critical points


def _x_grid(n: int = GRID_POINTS) -> np.ndarray:
    """Linear grid on (0, 1] merged with a log grid near 0.

    The log part resolves critical densities of order ``1/kappa**2`` that a
    uniform grid of ``n`` points would miss at large ``kappa``.
    """
    lin = np.linspace(0.0, 1.0, n + 1)[1:]
    log = np.logspace(-14, math.log10(lin[0]), 400, endpoint=False)
    return np.concatenate([log, lin])


def p_c_mf(params: MFParams, n_grid: int = GRID_POINTS, tol: float = ROOT_TOL) -> float:
    """Smallest ``x`` in (0, 1] with ``H(x) >= 0``.

    Returns 1.0 when ``kappa < theta`` and ``math.inf`` when ``H < 0`` on all
    of (0, 1] (that is, below the critical rate).  For ``theta = 1`` the
    infimum is 0 as soon as ``lam * kappa > 1``.
    """
    k, th, lam = params.kappa, params.theta, params.lam
    if params.degenerate:
        return 1.0
    if lam == 0:
        return math.inf
    if th == 1:
        # g decreases from kappa at 0+, so H >= 0 near 0 iff lam * kappa > 1
        if lam * k > 1.0:
            return 0.0
        return math.inf
    xs = _x_grid(n_grid)
    h = H(params, xs)
    idx = np.flatnonzero(h >= 0)
    if len(idx) == 0:
        # the grid can miss a tangency; check the refined maximum
        xm, gm = _argmax_growth(k, th, xs)
        if lam * gm < 1.0:
            return math.inf
        idx = np.array([np.searchsorted(xs, xm)])
        xs = np.insert(xs, idx[0], xm)
    i = int(idx[0])
    if i == 0:
        lo, hi = 0.0, xs[0]
    else:
        lo, hi = xs[i - 1], xs[i]
    while hi - lo > tol * max(hi, 1e-300) and hi - lo > 1e-300:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if H(params, mid) >= 0:
            hi = mid
        else:
            lo = mid
    return float(hi)


def _argmax_growth(kappa: int, theta: int, xs=None):
    """Maximiser and maximum of ``g`` on (0, 1): grid scan plus bounded Brent."""
    if xs is None:
        xs = _x_grid()
    g = growth_factor(kappa, theta, xs)
    i = int(np.argmax(g))
    lo = xs[i - 1] if i > 0 else xs[0] * 0.5
    hi = xs[i + 1] if i + 1 < len(xs) else 1.0
    res = optimize.minimize_scalar(lambda x: -growth_factor(kappa, theta, x), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-15 + 1e-12 * lo})
    if -res.fun >= g[i]:
        return float(res.x), float(-res.fun)
    return float(xs[i]), float(g[i])


def lambda_c_mf(kappa: int, theta: int) -> float:
    """Critical mean-field rate ``sup{lam : max_x H < 0}``.

    Since ``H = -1 + lam * g`` with ``g`` independent of ``lam``, the
    predicate holds exactly for ``lam < 1 / max g``.  Returns ``1/kappa`` for
    ``theta = 1`` and ``math.inf`` when ``kappa < theta``.
    """
    if kappa < theta:
        return math.inf
    if theta == 1:
        return 1.0 / kappa
    _, gmax = _argmax_growth(kappa, theta)
    return 1.0 / gmax


def phi_theta(theta: int, rtol: float = PHI_RTOL) -> float:
    """``inf_{gamma > 0} gamma / P(Poisson(gamma) >= theta)``.

    Coarse scan over (0, 10 theta] to bracket the minimum, then golden
    section.  For ``theta = 1`` the infimum is the limit 1 at 0+.
    """
    if theta < 1:
        raise DomainError("theta must be >= 1")
    if theta == 1:
        return 1.0
    f = lambda g: g / poisson_tail(g, theta)  # noqa: E731
    gs = np.linspace(10.0 * theta / 2000, 10.0 * theta, 2000)
    vals = gs / poisson_tail(gs, theta)
    i = int(np.argmin(vals))
    if i == 0 or i == len(gs) - 1:
        raise NumericError("minimum of gamma / Poisson tail not bracketed")
    res = optimize.minimize_scalar(f, bracket=(gs[i - 1], gs[i], gs[i + 1]), method="golden",
                                   tol=rtol)
    return float(res.fun)


class MFRegime(enum.Enum):
    SURVIVES_ABOVE_THRESHOLD = "SurvivesAboveThreshold"
    DECAYS_EXPONENTIALLY = "DecaysExponentially"


def mf_classify(params: MFParams, p: float) -> MFRegime:
    """Which side of the mean-field dichotomy ``(lam, p)`` lies on.

    The closed side ``p = p_c`` counts as surviving.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    pc = p_c_mf(params)
    if params.lam > 0 and pc <= 1.0 and p >= pc and p > 0:
        return MFRegime.SURVIVES_ABOVE_THRESHOLD
    return MFRegime.DECAYS_EXPONENTIALLY


@dataclass
class MFCriticalData:
    kappa: int
    theta: int
    lambda_c_mf: float
    phi_theta: float
    p_c_mf: Callable[[float], float] = field(repr=False)
    tolerances: dict = field(default_factory=dict)

    def below_threshold(self, lam: float, p: float) -> bool:
        """Membership in the mean-field decay region."""
        return mf_classify(MFParams(self.kappa, self.theta, lam), p) is MFRegime.DECAYS_EXPONENTIALLY


def mf_critical_data(kappa: int, theta: int) -> MFCriticalData:
    return MFCriticalData(
        kappa=kappa,
        theta=theta,
        lambda_c_mf=lambda_c_mf(kappa, theta),
        phi_theta=phi_theta(theta),
        p_c_mf=lambda lam: p_c_mf(MFParams(kappa, theta, lam)),
        tolerances={"grid_points": GRID_POINTS, "root": ROOT_TOL, "lambda_rel": LAMBDA_RTOL,
                    "phi_rel": PHI_RTOL, "ode": ODE_TOL},
    )


# ---------------------------------------------------------------------------
# oriented tree


class Verdict(enum.Enum):
    CERTIFIED = "Certified"
    NOT_CERTIFIED = "NotCertified"


def survival_lower_drift(b: int, theta: int, lam: float, p: float, x: float) -> float:
    """Lower bound on the density drift of the oriented process at density ``x``.

    ``x * H(b, theta, lam/(lam+1); x) + lam/(lam+1) * Bin(b, x, theta) * (x - p)``.
    """
    q = lam / (lam + 1.0)
    return x * H(MFParams(b, theta, q), x) + q * binom_tail(b, x, theta) * (x - p)


def oriented_lambda_bound(b: int, theta: int) -> float:
    """``lc / (1 - lc)`` with ``lc = lambda_c_mf(b, theta)``; ``inf`` if ``lc >= 1``."""
    lc = lambda_c_mf(b, theta)
    if lc >= 1.0:
        return math.inf
    return lc / (1.0 - lc)


@dataclass
class OrientedCertificate:
    verdict: Verdict
    drift: float
    lambda_bound: float

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.CERTIFIED


def oriented_survival_certificate(b: int, theta: int, lam: float, p: float) -> OrientedCertificate:
    """Certify that the oriented-tree density started from ``p`` never drops below ``p``.

    Certified iff the drift lower bound at ``x = p`` is strictly positive,
    which bounds the oriented critical density by ``p``.
    """
    if b < 2 or theta < 2:
        raise DomainError("need b >= 2 and theta >= 2")
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    drift = survival_lower_drift(b, theta, lam, p, p)
    verdict = Verdict.CERTIFIED if drift > 0 else Verdict.NOT_CERTIFIED
    return OrientedCertificate(verdict, float(drift), oriented_lambda_bound(b, theta))
