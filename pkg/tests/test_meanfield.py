import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    binom_tail_exact,
    binom_tail_mp,
    lambda_c_oracle,
    pc_oracle,
    phi_oracle,
    poisson_tail_mp,
)
from tcptree import meanfield as mf
from tcptree.meanfield import H, MFParams


# ---------------------------------------------------------------- tails

def test_binom_tail_examples():
    assert mf.binom_tail(4, 0.5, 2) == pytest.approx(float(binom_tail_exact(4, "1/2", 2)), abs=1e-15)
    assert float(binom_tail_exact(4, "1/2", 2)) == 0.6875
    assert mf.binom_tail(5, 0.0, 2) == 0.0
    assert mf.binom_tail(5, 1.0, 2) == 1.0
    assert mf.binom_tail(5, 1.3, 3) == 1.0
    assert mf.binom_tail(5, 0.3, 0) == 1.0


def test_binom_tail_negative_x():
    with pytest.raises(mf.DomainError):
        mf.binom_tail(4, -0.1, 2)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 60), st.floats(0.0, 1.0), st.integers(0, 8))
def test_binom_tail_matches_exact(kappa, x, theta):
    ref = float(binom_tail_mp(kappa, x, theta)) if theta <= kappa else 0.0
    assert mf.binom_tail(kappa, x, theta) == pytest.approx(ref, rel=1e-10, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(1, 5), st.floats(0.01, 0.98), st.floats(0.0, 0.01))
def test_binom_tail_monotone_in_x(kappa, theta, x, dx):
    assert mf.binom_tail(kappa, x, theta) <= mf.binom_tail(kappa, x + dx, theta) + 1e-15


def test_large_kappa_stable():
    v = mf.binom_tail(10_000, 3e-4, 2)
    assert v == pytest.approx(float(binom_tail_mp(10_000, 3e-4, 2)), rel=1e-10)


def test_poisson_tail():
    assert mf.poisson_tail(1.0, 0) == 1.0
    assert mf.poisson_tail(1.0, 2) == pytest.approx(1 - 2 / math.e, rel=1e-14)
    for g, th in [(0.01, 2), (3.0, 5), (25.0, 3)]:
        assert mf.poisson_tail(g, th) == pytest.approx(float(poisson_tail_mp(g, th)), rel=1e-12)
    with pytest.raises(mf.DomainError):
        mf.poisson_tail(0.0, 2)


@pytest.mark.parametrize("theta", [1, 2, 3, 5])
def test_binomial_to_poisson(theta):
    k = 10_000
    err = max(abs(mf.binom_tail(k, g / k, theta) - mf.poisson_tail(g, theta)) for g in np.linspace(0.1, 10, 40))
    assert err <= 1e-3


# ---------------------------------------------------------------- H and ODE

def test_H_examples():
    assert H(MFParams(4, 2, 0.0), 0.3) == -1.0
    assert H(MFParams(7, 3, 2.5), 1.0) == -1.0
    assert H(MFParams(4, 2, 1.0), 0.5) == pytest.approx(-0.3125, abs=1e-15)
    assert H(MFParams(6, 2, 5.0), 1e-9) == pytest.approx(-1.0, abs=1e-6)
    with pytest.raises(mf.DomainError):
        H(MFParams(4, 2, 1.0), 0.0)


def test_integrate_zero_start():
    tr = mf.mf_integrate(MFParams(6, 2, 3.0), 0.0, 5.0)
    assert np.all(tr.densities == 0)


def test_integrate_pure_death():
    tr = mf.mf_integrate(MFParams(6, 2, 0.0), 0.7, 5.0)
    assert np.allclose(tr.densities, 0.7 * np.exp(-tr.times), rtol=1e-7, atol=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(1, 4), st.floats(0.0, 20.0), st.floats(0.0, 1.0))
def test_trajectory_bounds(kappa, theta, lam, p):
    tr = mf.mf_integrate(MFParams(kappa, theta, lam), p, 4.0, dt_out=0.25)
    d = tr.densities
    assert d[0] == p
    assert np.all((d >= 0) & (d <= 1))
    assert np.all(d >= p * np.exp(-tr.times) * (1 - 1e-8))


def test_integrate_rejects_bad_input():
    with pytest.raises(mf.DomainError):
        mf.mf_integrate(MFParams(3, 2, 1.0), 1.5, 1.0)
    with pytest.raises(mf.DomainError):
        mf.mf_integrate(MFParams(3, 2, 1.0), 0.5, 0.0)


def test_nonconvergent_step_control():
    with pytest.raises(mf.NumericError):
        mf.mf_integrate(MFParams(6, 2, 50.0), 0.3, 10.0, tol=1e-30, max_halvings=2)


def test_fit_decay_rate_exact_exponential():
    t = np.linspace(0, 10, 101)
    rate, pref, se = mf.fit_decay_rate(t, 3.0 * np.exp(-1.7 * t))
    assert rate == pytest.approx(1.7, rel=1e-12)
    assert pref == pytest.approx(3.0, rel=1e-10)


# ---------------------------------------------------------------- critical values

@pytest.mark.parametrize("kappa", [1, 2, 5, 40])
def test_lambda_c_theta_one(kappa):
    assert mf.lambda_c_mf(kappa, 1) == 1.0 / kappa


@pytest.mark.parametrize("kappa,theta", [(2, 2), (3, 2), (6, 2), (6, 3), (20, 4)])
def test_lambda_c_against_oracle(kappa, theta):
    lc = mf.lambda_c_mf(kappa, theta)
    assert 0 < lc < math.inf
    assert lc == pytest.approx(lambda_c_oracle(kappa, theta), rel=1e-9)


def test_lambda_c_known_values():
    # g(x) = (1-x)^2 x for kappa=2, theta=2 peaks at x=1/3 with value 4/27 ... times kappa choose
    assert mf.lambda_c_mf(2, 2) == pytest.approx(4.0, rel=1e-10)


def test_degenerate_params():
    assert mf.lambda_c_mf(2, 3) == math.inf
    assert mf.p_c_mf(MFParams(2, 3, 10.0)) == 1.0


@pytest.mark.parametrize("kappa,theta,factor", [(6, 2, 1.2), (6, 2, 3.0), (10, 3, 1.5), (100, 2, 2.0)])
def test_p_c_against_oracle(kappa, theta, factor):
    lam = factor * mf.lambda_c_mf(kappa, theta)
    pc = mf.p_c_mf(MFParams(kappa, theta, lam))
    assert pc == pytest.approx(pc_oracle(kappa, theta, lam), rel=1e-8)
    assert H(MFParams(kappa, theta, lam), pc) >= 0
    assert H(MFParams(kappa, theta, lam), pc * (1 - 1e-7)) < 0


def test_p_c_below_lambda_c_is_inf():
    lc = mf.lambda_c_mf(6, 2)
    assert mf.p_c_mf(MFParams(6, 2, 0.99 * lc)) == math.inf
    assert mf.p_c_mf(MFParams(6, 2, 0.0)) == math.inf


def test_p_c_theta_one():
    assert mf.p_c_mf(MFParams(5, 1, 0.3)) == 0.0
    assert mf.p_c_mf(MFParams(5, 1, 0.1)) == math.inf


def test_p_c_strictly_decreasing_and_vanishing():
    lc = mf.lambda_c_mf(6, 2)
    lams = lc * np.array([1.01, 1.2, 2, 5, 20, 100, 1e4])
    pcs = [mf.p_c_mf(MFParams(6, 2, lam)) for lam in lams]
    assert all(a > b for a, b in zip(pcs, pcs[1:]))
    assert pcs[-1] < 1e-3


def test_p_c_large_b_scaling():
    b, lam = 2000, 1.0
    v = b**2 * mf.p_c_mf(MFParams(b, 2, lam)) / 2.0
    assert abs(v - 1) <= 0.02


# ---------------------------------------------------------------- Phi

def test_phi_values():
    assert mf.phi_theta(1) == 1.0
    p2, p3 = mf.phi_theta(2), mf.phi_theta(3)
    assert 1 < p2 < p3
    assert p2 == pytest.approx(phi_oracle(2), rel=1e-9)
    assert p3 == pytest.approx(phi_oracle(3), rel=1e-9)
    assert p2 == pytest.approx(3.3509188715, rel=1e-9)


def test_phi_monotone_table():
    vals = [mf.phi_theta(t) for t in range(1, 9)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_kappa_lambda_converges_to_phi():
    errs = [abs(k * mf.lambda_c_mf(k, 2) / mf.phi_theta(2) - 1) for k in (30, 300, 2000)]
    assert errs[0] > errs[1] > errs[2]


# ---------------------------------------------------------------- classification

def test_classify():
    S, D = mf.MFRegime.SURVIVES_ABOVE_THRESHOLD, mf.MFRegime.DECAYS_EXPONENTIALLY
    assert all(mf.mf_classify(MFParams(6, 2, 0.0), p) is D for p in (0.0, 0.5, 1.0))
    assert mf.mf_classify(MFParams(6, 2, 100.0), 1.0) is S
    params = MFParams(6, 2, 2.0)
    pc = mf.p_c_mf(params)
    assert mf.mf_classify(params, pc) is S
    assert mf.mf_classify(params, pc * 0.999) is D


def test_critical_data_predicate():
    d = mf.mf_critical_data(6, 2)
    assert d.lambda_c_mf == mf.lambda_c_mf(6, 2)
    assert d.below_threshold(0.5, 1.0)
    assert not d.below_threshold(3.0, 0.9)
    assert d.tolerances["root"] <= 1e-9


def test_dichotomy_trajectories():
    lc = mf.lambda_c_mf(6, 2)
    params = MFParams(6, 2, 1.2 * lc)
    pc = mf.p_c_mf(params)
    up = mf.mf_integrate(params, 1.01 * pc, 50.0)
    assert up.densities.min() >= pc - 1e-6
    down = mf.mf_integrate(params, 0.99 * pc, 50.0)
    rate, _, _ = mf.fit_decay_rate(down.times, down.densities, (25.0, 50.0))
    assert abs(rate - 1) <= 0.05


# ---------------------------------------------------------------- oriented certificate

def test_certificate_zero_lambda():
    assert not mf.oriented_survival_certificate(5, 2, 0.0, 0.5).certified


def test_certificate_large_b():
    b, th = 100, 2
    lc = mf.lambda_c_mf(b, th)
    lam = 3.0 * lc / (1 - lc)
    q = lam / (lam + 1)
    assert q > lc
    p = mf.p_c_mf(MFParams(b, th, q)) * 1.05
    cert = mf.oriented_survival_certificate(b, th, lam, p)
    assert cert.certified and cert.drift > 0
    assert cert.lambda_bound == pytest.approx(lc / (1 - lc))


def test_certificate_equivalent_to_H_sign():
    b, th, lam = 8, 2, 4.0
    q = lam / (lam + 1)
    for p in np.linspace(0.01, 0.99, 50):
        assert mf.oriented_survival_certificate(b, th, lam, p).certified == (H(MFParams(b, th, q), p) > 0)


def test_oriented_lambda_bound():
    assert mf.oriented_lambda_bound(2, 2) == math.inf
    lc = mf.lambda_c_mf(6, 2)
    assert mf.oriented_lambda_bound(6, 2) == pytest.approx(lc / (1 - lc))
