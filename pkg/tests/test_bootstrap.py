import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import p_plus_oracle
from tcptree import bootstrap as bp
from tcptree.topology import (
    ROOT,
    Ball,
    SiteAddress,
    TreeTopology,
    Variant,
    compile_region,
    enumerate_region,
    split_neighborhood,
    spine,
)


def naive_closure(topo, S0, theta, W=None):
    """Synchronous rounds on address sets; sites outside ``W`` stay vacant."""
    sites = enumerate_region(topo)
    W = set(sites) if W is None else set(W)
    occ = set(S0) & W
    nb = {v: split_neighborhood(topo, v)[0] for v in W}
    join = {v: 0 for v in occ}
    r = 0
    while True:
        new = {v for v in W - occ if len(nb[v] & occ) >= theta}
        if not new:
            return join
        r += 1
        for v in new:
            join[v] = r
        occ |= new


def test_empty_and_full():
    topo = TreeTopology(3, truncation=Ball(3))
    assert bp.iterate(topo, [], 2).occupied == frozenset()
    full = enumerate_region(topo)
    assert bp.iterate(topo, full, 2).occupied == frozenset(full)


def test_hand_instance_forward_tree():
    topo = TreeTopology(2, Variant.ORIENTED_FORWARD, Ball(2))
    assert len(enumerate_region(topo)) == 7
    s = bp.iterate(topo, [spine(1), SiteAddress(0, (0,))], 2)
    assert ROOT in s and s.occupied_after(1) == s.occupied
    assert s.join[compile_region(topo).index[ROOT]] == 1
    s = bp.iterate(topo, [spine(1)], 2)
    assert ROOT not in s


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 3), st.integers(1, 3), st.sampled_from(list(Variant)), st.data())
def test_iterate_matches_naive(b, theta, variant, data):
    topo = TreeTopology(b, variant, Ball(3))
    sites = enumerate_region(topo)
    mask = data.draw(st.lists(st.booleans(), min_size=len(sites), max_size=len(sites)))
    S0 = [v for v, m in zip(sites, mask) if m]
    got = bp.iterate(topo, S0, theta)
    ref = naive_closure(topo, S0, theta)
    assert got.occupied == frozenset(ref)
    reg = compile_region(topo)
    assert all(got.join[reg.index[v]] == r for v, r in ref.items())
    for n in range(3):
        lim = bp.iterate(topo, S0, theta, max_rounds=n)
        assert lim.occupied == frozenset(v for v, r in ref.items() if r <= n)


def test_internally_occupied_trivial_cases():
    topo = TreeTopology(2, truncation=Ball(3))
    sites = enumerate_region(topo)
    S0 = sites[1:5]
    st_ = bp.iterate(topo, S0, 2)
    for w in sites:
        assert bp.internally_occupied(topo, sites, S0, w, 2) == (w in st_)
    w = sites[-1]
    assert not bp.internally_occupied(topo, [w], S0, w, 1) or w in S0
    with pytest.raises(bp.ArgumentError):
        bp.internally_occupied(topo, [ROOT], S0, spine(1), 2)


def _forward_image(b, rest):
    """Map a path below an off-spine root to the forward-tree address."""
    s, path, on_spine = 0, (), True
    for c in rest:
        if on_spine and c == b - 1:
            s += 1
        elif on_spine:
            path, on_spine = (c,), False
        else:
            path = path + (c,)
    return SiteAddress(s, path)


@pytest.mark.parametrize("b,theta", [(2, 2), (3, 2), (3, 3)])
def test_spine_complement_matches_detached_copies(b, theta):
    R = 4
    topo = TreeTopology(b, truncation=Ball(R))
    sites = enumerate_region(topo)
    W = [v for v in sites if v.path]
    rng = np.random.default_rng(5)
    for _ in range(10):
        S0 = [v for v in sites if rng.random() < 0.45]
        inside = {v for v in W if bp.internally_occupied(topo, W, S0, v, theta)}
        for j in range(-R + 1, R):
            d = R - abs(j) - 1
            ftopo = TreeTopology(b, Variant.FORWARD, Ball(d))
            for k in range(b - 1):
                copy = [v for v in W if v.spine == j and v.path[0] == k]
                img = {v: _forward_image(b, v.path[1:]) for v in copy}
                fS0 = [img[v] for v in copy if v in S0]
                fs = bp.iterate(ftopo, fS0, theta)
                for v in copy:
                    assert (v in inside) == (img[v] in fs)


# ---------------------------------------------------------------- recursion

def test_p_plus_examples():
    assert bp.p_plus_n(2, 2, 0.5, 0) == [0.5]
    assert bp.p_plus_n(2, 2, 0.5, 1)[1] == 0.625
    exact = p_plus_oracle(3, 2, Fraction(3, 10), 8)
    got = bp.p_plus_n(3, 2, 0.3, 8)
    assert all(abs(g - float(e)) < 1e-14 for g, e in zip(got, exact))


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 8), st.integers(1, 4), st.floats(0.0, 1.0))
def test_p_plus_nondecreasing(b, theta, p):
    seq = bp.p_plus_n(b, theta, p, 12)
    assert all(x <= y + 1e-15 for x, y in zip(seq, seq[1:]))
    assert all(0 <= x <= 1 for x in seq)


def test_p_plus_infty():
    assert bp.p_plus_infty(3, 2, 0.0) == 0.0
    assert bp.p_plus_infty(3, 2, 1.0) == 1.0
    assert bp.p_plus_infty(2, 2, 0.1) == pytest.approx(0.1 / 0.9, rel=1e-12)
    vals = [bp.p_plus_infty(3, 2, p) for p in (0.1, 0.01, 0.001, 1e-5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 2e-5


def test_p_plus_infty_nonconvergence():
    with pytest.raises(bp.NumericError, match="last iterate"):
        bp.p_plus_infty(3, 2, 0.2, max_iter=2)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(2, 3), st.floats(1e-4, 0.3))
def test_p_plus_infty_is_fixed_point(b, theta, p):
    q = bp.p_plus_infty(b, theta, p)
    from tcptree.meanfield import binom_tail
    assert q == pytest.approx(p + (1 - p) * binom_tail(b, q, theta), abs=1e-12)
    assert q >= bp.p_plus_n(b, theta, p, 30)[-1] - 1e-12


# ---------------------------------------------------------------- grades

def test_grades_endpoints():
    g = bp.grade_probs(5, 3, 0.0)
    assert (g.p_A, g.p_B, g.p_C) == (0.0, 0.0, 0.0)
    # theta = 2: grade C is "no occupied subtree", certain when p = 0
    g = bp.grade_probs(4, 2, 0.0)
    assert (g.p_A, g.p_B, g.p_C) == (0.0, 0.0, 1.0)
    g = bp.grade_probs(4, 2, 1.0)
    assert g.p_A == 1.0 and g.p_B == 0.0 and g.p_C == 0.0
    with pytest.raises(bp.ArgumentError):
        bp.grade_probs(2, 2, 0.1)


def test_grades_against_oracle():
    b, th, p = 4, 2, 0.1
    q = mpmath.mpf(bp.p_plus_infty(b, th, p))
    m = b - 2
    pmf = lambda k: mpmath.binomial(m, k) * q**k * (1 - q) ** (m - k)  # noqa: E731
    g = bp.grade_probs(b, th, p)
    assert g.p_A == pytest.approx(float(p + (1 - p) * mpmath.fsum(pmf(k) for k in range(th, m + 1))), rel=1e-12)
    assert g.p_B == pytest.approx(float((1 - p) * pmf(th - 1)), rel=1e-12)
    assert g.p_C == pytest.approx(float((1 - p) * pmf(th - 2)), rel=1e-12)
    t = bp.grade_probs(b, th, p, tail=True)
    assert t.p_B >= g.p_B and t.p_C >= g.p_C
    lo = bp.grade_probs(b, th, 0.02)
    g3 = bp.grade_probs(b, th, 0.02, attempts=b - 1)
    assert lo.attempts == 2 and g3.attempts == 3 and g3.p_A > lo.p_A


# ---------------------------------------------------------------- span bounds

def test_span_bounds_zero_density():
    assert bp.span_bound_simple(3, 2, 0.0, 5).p0n == 0.0
    assert bp.span_bound_elaborate(3, 2, 0.0, 5).p0n == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 30), st.integers(2, 3), st.floats(1e-6, 0.2))
def test_simple_verdict_criterion(b, theta, p):
    s = bp.span_bound_simple(b, theta, p, 4)
    g = s.grades
    assert s.geometric == (max(g.p_A, g.p_B) < 1 / (3 * b) ** 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 30), st.integers(2, 3), st.floats(1e-6, 0.2))
def test_elaborate_verdict_criterion(b, theta, p):
    s = bp.span_bound_elaborate(b, theta, p, 4)
    g = s.grades
    assert s.geometric == (9 * b * b * max(g.p_A**2, g.p_B**2, g.p_C * g.p_A) < 1)


def test_rn_lift():
    s = bp.span_bound_simple(3, 2, 0.01, 4)
    assert s.rn == pytest.approx(4 * 27 * s.p0n)


def test_elaborate_needs_n_three():
    with pytest.raises(bp.ArgumentError):
        bp.span_bound_elaborate(3, 2, 0.01, 2)


def test_bounds_dominate_mc_b4_theta3():
    for n in (3, 4, 5, 6):
        est = bp.mc_span(4, 3, 0.02, n, 2000, 17)
        for bound in (bp.span_bound_simple(4, 3, 0.02, n), bp.span_bound_elaborate(4, 3, 0.02, n)):
            assert bound.p0n >= est.p0n - 3 * est.p0n_se
            assert bound.rn >= est.rn - 3 * est.rn_se


# ---------------------------------------------------------------- bar gamma and certificate

@pytest.mark.parametrize("gamma", [1e-6, 0.01, 0.1, 0.2, 0.24])
def test_bar_gamma_theta_two(gamma):
    assert bp.bar_gamma(gamma, 2) == pytest.approx((1 - math.sqrt(1 - 4 * gamma)) / 2, rel=1e-12)


def test_bar_gamma_limits():
    assert bp.bar_gamma(1e-9, 3) / 1e-9 == pytest.approx(1.0, rel=1e-6)
    assert bp.bar_gamma(1.0, 2) == math.inf
    x = bp.bar_gamma(0.3, 3)
    assert x == pytest.approx(0.3 + 2 * x**3 / 6, rel=1e-12)


@pytest.mark.parametrize("b", [3, 4, 5, 6])
def test_certificate_theta_two(b):
    r = bp.certify_p_exp_lower(b, 2)
    assert r.certified and r.p > 0 and r.verdict == "Certified"
    assert r.base < 1
    assert bp._base(b, 2, r.p * (1 + 1e-6), "elaborate", False)[0] >= 1 or r.p >= 0.998


def test_certificate_monotone_in_threshold():
    ps = [bp.certify_p_exp_lower(4, 2, threshold=t).p for t in (1.0, 0.5, 0.1, 0.01)]
    assert all(a >= b for a, b in zip(ps, ps[1:]))


def test_certificate_not_certified():
    r = bp.certify_p_exp_lower(4, 2, threshold=1e-12, p_min=1e-3)
    assert not r.certified and r.p == 0.0 and r.verdict == "NotCertified"


# ---------------------------------------------------------------- Monte Carlo

def test_mc_span_extremes():
    assert bp.mc_span(3, 2, 1.0, 3, 50, 1).p0n == 1.0
    e = bp.mc_span(3, 2, 0.0, 3, 50, 1)
    assert e.p0n == 0.0 and e.rn == 0.0


@pytest.mark.parametrize("b,theta,p,n", [(2, 2, 0.3, 4), (3, 2, 0.1, 5), (4, 3, 0.4, 3)])
def test_root_occupation_matches_recursion(b, theta, p, n):
    r = bp.mc_root_occupation(b, theta, p, n, 20_000, 31)
    assert abs(r.z) <= 3.5


def test_root_occupation_oriented_forward_agrees():
    for b in (2, 3):
        for n in range(1, 5):
            a = bp.mc_root_occupation(b, 2, 0.35, n, 3000, 8)
            c = bp.mc_root_occupation(b, 2, 0.35, n, 3000, 8, variant=Variant.ORIENTED_FORWARD)
            assert a.mean == c.mean


def test_null_se_when_degenerate():
    r = bp.RootEstimate(1.0, 0.0, 100_000, 1 - 1e-11)
    assert r.null_se > 0 and abs(r.z) < 1
    assert bp.RootEstimate(1.0, 0.0, 10, 1.0).z == 0.0
