import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pi_oracle
from tcptree import estimator as est
from tcptree import graphical as gr
from tcptree import meanfield as mf
from tcptree.topology import ROOT, Ball, TreeTopology, Variant


def _synthetic(mean, upper, se=0.001, times=None):
    mean = np.asarray(mean, float)
    times = np.linspace(0, 1, len(mean)) if times is None else times
    s = np.full(len(mean), se)
    return est.DensityEstimate(times, mean, s, np.asarray(upper, float), s, np.zeros(len(mean)),
                               mean, s, 1000, 0, 5, True)


def test_pi_closed_form():
    assert est.pi_closed_form(0.3, 2.0, 0.0) == pytest.approx(0.3)
    assert est.pi_closed_form(0.3, 2.0, 50.0) == pytest.approx(2 / 3, abs=1e-15)
    assert est.pi_closed_form(0.0, 1.0, 0.5) == pytest.approx(0.5 * (1 - math.exp(-1)), rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0, 20), st.floats(0, 10))
def test_pi_matches_oracle(p, lam, t):
    assert est.pi_closed_form(p, lam, t) == pytest.approx(pi_oracle(p, lam, t), rel=1e-12, abs=1e-15)


def test_zero_rate_gives_exponential():
    t = np.array([0.0, 0.5, 1.0, 2.0])
    d = est.rho_estimate(TreeTopology(2, truncation=Ball(3)), 2, 0.0, 1.0, ROOT, t, 20_000, 4)
    ref = np.exp(-t)
    se = np.sqrt(ref * (1 - ref) / 20_000)
    assert np.all(np.abs(d.mean - ref) <= 3.5 * se + 1e-12)
    assert np.array_equal(d.mean, d.upper)


def test_exponential_floor_small():
    t = np.array([0.5, 1.0, 2.0])
    d = est.rho_estimate(TreeTopology(2, truncation=Ball(5)), 2, 0.5, 1.0, ROOT, t, 5000, 6)
    assert np.all(d.mean >= np.exp(-t) - 3 * d.se)


def test_sandwich_bracket_and_flag():
    topo = TreeTopology(2, truncation=Ball(4))
    d = est.rho_estimate(topo, 2, 1.0, 0.6, ROOT, [0.0, 1.0, 3.0], 3000, 8)
    assert np.all(d.mean <= d.upper)
    assert d.disagreement[0] == 0
    assert not d.effectively_infinite
    with pytest.raises(gr.SpecError):
        est.rho_estimate(topo, 2, 1.0, 0.6, ROOT, [0.0, 3.0], 10, 8, strict=True)
    d = est.rho_estimate(TreeTopology(2, truncation=Ball(6)), 2, 0.5, 0.6, ROOT, [0.0, 1.0], 10, 8, strict=True)
    assert d.effectively_infinite


def test_product_start_close_to_full_start():
    topo = TreeTopology(3, truncation=Ball(4))
    lam = 4.0
    p = lam / (1 + lam) + 0.05
    t = [0.0, 2.0, 3.0]
    a = est.rho_estimate(topo, 2, lam, p, ROOT, t, 20_000, 10)
    b = est.rho_estimate(topo, 2, lam, 1.0, ROOT, t, 20_000, 11)
    se = math.hypot(a.se[-1], b.se[-1])
    assert abs(a.mean[-1] - b.mean[-1]) <= 3 * se


def test_sigma_properties():
    topo = TreeTopology(2, truncation=Ball(4))
    t = np.array([0.0, 0.5, 1.0, 2.0])
    lam, p = 1.5, 0.7
    s0 = est.sigma_estimate(topo, 2, lam, p, 0, t, 10_000, 12)
    s1 = est.sigma_estimate(topo, 2, lam, p, 1, t, 10_000, 12)
    rho = est.rho_estimate(topo, 2, lam, p, ROOT, t, 10_000, 12)
    pi = est.pi_closed_form(p, lam, t)
    for s in (s0, s1):
        assert np.all(s.mean <= pi + 3 * s.se + 1e-12)
        assert np.all(rho.mean <= s.upper + 3 * s.upper_se)
    # shared seed: the frozen neighbour dominates pathwise
    assert np.all(rho.mean <= s0.mean)
    one = est.sigma_estimate(topo, 2, lam, 1.0, 0, [0.0, 0.5], 100, 1)
    assert one.mean[0] == 1.0
    with pytest.raises(gr.SpecError):
        est.sigma_estimate(TreeTopology(2, Variant.ORIENTED, Ball(3)), 2, lam, p, 0, t, 10, 0)


def test_forward_drift_slack_nonnegative():
    topo = TreeTopology(2, truncation=Ball(5))
    t = np.linspace(0, 2, 9)
    s0 = est.sigma_estimate(topo, 2, 1.0, 0.8, 0, t, 10_000, 14)
    s1 = est.sigma_estimate(topo, 2, 1.0, 0.8, 1, t, 10_000, 14)
    assert np.all(est.forward_drift_slack(s0, s1, 1.0, 2) >= 0)


def test_time_average_of_constant():
    x = np.ones((3, 5))
    t = np.linspace(0, 2, 5)
    assert np.allclose(est._running_average(x, t), 1.0)
    x = np.tile(t, (2, 1))
    assert np.allclose(est._running_average(x, t)[:, -1], 1.0)


# ---------------------------------------------------------------- decision rules

def test_oriented_verdict_rules():
    v = est.oriented_verdict(_synthetic([0.3, 0.2, 0.1], [0.3, 0.2, 0.1]), 0.25)
    assert v.regime is est.Regime.DECAY and v.t_trigger == 0.5
    v = est.oriented_verdict(_synthetic([0.9, 0.85, 0.85], [0.95, 0.9, 0.9]), 0.5)
    assert v.regime is est.Regime.SURVIVAL
    v = est.oriented_verdict(_synthetic([0.9, 0.7, 0.5], [0.95, 0.9, 0.9]), 0.5)
    assert v.regime is est.Regime.INCONCLUSIVE
    v = est.oriented_verdict(_synthetic([0.9, 0.9, 0.9], [1.0, 1.0, 1.0]), math.inf)
    assert v.regime is est.Regime.INCONCLUSIVE


@pytest.mark.parametrize("lam,p", [(3.0, 0.0), (0.0, 0.8)])
def test_oriented_probe_trivial_decay(lam, p):
    v = est.dichotomy_probe_oriented(2, 2, lam, p, 1.0, 500, 1, depth=5, n_times=5)
    assert v.regime is est.Regime.DECAY


@pytest.mark.parametrize("lam,p", [(0.3, 0.0), (0.0, 1.0)])
def test_unoriented_probe_trivial_decay(lam, p):
    v = est.dichotomy_probe_unoriented(3, 2, lam, p, 3.0, 500, 1, radius=3, n_times=7)
    assert v.regime is est.Regime.DECAY


@pytest.mark.slow
def test_unoriented_probe_large_and_small_A():
    b = 10
    phi = mf.phi_theta(2)
    hi = est.dichotomy_probe_unoriented(b, 2, 20.0 / b, 1.0, 4.0, 2000, 3, radius=3)
    lo = est.dichotomy_probe_unoriented(b, 2, 0.5 / b, 1.0, 6.0, 2000, 3, radius=3)
    assert 20 > phi > 0.5
    assert hi.regime is est.Regime.SURVIVAL
    assert lo.regime is est.Regime.DECAY
    assert 0 < lo.rate < 2


def test_certified_point_cross_check():
    b, th, lam = 6, 2, 10.0
    p = 1.2 * mf.p_c_mf(mf.MFParams(b, th, lam / (lam + 1)))
    cert = mf.oriented_survival_certificate(b, th, lam, p)
    assert cert.certified
    v = est.dichotomy_probe_oriented(b, th, lam, p, 1.0, 2000, 2, depth=4, n_times=5)
    if v.regime is not est.Regime.SURVIVAL:
        warnings.warn(f"certified point ({lam}, {p}) gave {v.regime.value}")
    assert v.regime is not est.Regime.DECAY


def test_default_depth():
    d = est.default_oriented_depth(2)
    assert 2 ** (d + 1) - 1 <= 4096 < 2 ** (d + 2) - 1


def test_phase_sweep_small():
    s = est.phase_sweep(2, 2, [0.0, 2.0, 16.0], [0.0, 0.5, 1.0], replicas=400, seed=3, t_max=1.0,
                        depth=5, n_times=5)
    assert s.complete
    assert s.coupling_violations == 0
    assert s.inversions == []
    tab = s.table()
    assert all(tab[i, 0] is est.Regime.DECAY for i in range(3))
    assert all(tab[0, j] is est.Regime.DECAY for j in range(3))
    assert s.flagged_harris == 0


def test_phase_sweep_budget_partial():
    s = est.phase_sweep(2, 2, [1.0, 2.0], [0.2, 0.8], replicas=100, seed=1, t_max=0.5, depth=4,
                        budget=500, n_times=3)
    assert not s.complete
    assert s.completed.sum() == 2
    assert len(s.points) == 2
