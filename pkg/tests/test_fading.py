import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from relay_rates import fading as f
from relay_rates.errors import DegenerateChannelError, DomainError
from relay_rates.frontier import containment_gap, frontier_distance, strict_gap

from channels import quad_sum, random_fading_channel as random_channel

# mpmath quadrature at 40 digits
SINGLE_1 = 0.8603473822708860
SINGLE_01 = 2.906514808414805
SUM_1_2 = 1.199407760825865
GAMMA2_1 = 1.0 / math.log(2.0)

# Found by random search: the optimal variance lies below the compression threshold.
VIOLATING = {"d12": 2.986, "d1r": 0.5395, "d2r": 1.8046, "alpha": 3.731, "P": 10.0,
             "moments": {"h12": 1.599, "h21": 1.370, "h1r": 1.783, "h2r": 0.2907, "hr1": 0.8511, "hr2": 1.949}}


def symmetric(d=0.5, power=10.0):
    return f.FadingTwrcChannel(1.0, d, d, 2.0, power)


def fig5_origin():
    return f.FadingTwrcChannel(1.0, 0.5, 0.5, 2.0, 10.0)


def test_single_values():
    assert f.ergodic_log_single(1.0) == pytest.approx(SINGLE_1, abs=1e-12)
    assert f.ergodic_log_single(0.1) == pytest.approx(SINGLE_01, abs=1e-8)
    assert f.ergodic_log_single(1e8) < 1e-7
    assert f.ergodic_log_single(math.inf) == 0.0


def test_single_against_quadrature():
    for lam in np.geomspace(1e-3, 1e3, 13):
        ref = quad(lambda x: math.log2(1 + x) * lam * math.exp(-lam * x), 0, math.inf, limit=500)[0]
        assert f.ergodic_log_single(lam) == pytest.approx(ref, abs=1e-8)


def test_single_against_monte_carlo():
    rng = np.random.default_rng(7)
    x = np.log2(1 + rng.exponential(1.0, 10_000_000))
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - f.ergodic_log_single(1.0)) < 3 * se


@pytest.mark.parametrize("lam", [0.0, -1.0, float("nan")])
def test_single_domain(lam):
    with pytest.raises(DomainError):
        f.ergodic_log_single(lam)


def test_scaled_exp1_switch_is_continuous():
    lo, hi = f.scaled_exp1(np.nextafter(50.0, 0.0)), f.scaled_exp1(50.0)
    assert hi == pytest.approx(lo, rel=1e-13)


def test_sum_values():
    assert f.ergodic_log_sum(1.0, 2.0) == pytest.approx(SUM_1_2, abs=1e-12)
    assert f.ergodic_log_sum(2.0, 1.0) == pytest.approx(SUM_1_2, abs=1e-12)
    assert f.ergodic_log_sum(1.0, 1.0) == pytest.approx(GAMMA2_1, abs=1e-12)
    assert f.ergodic_log_sum(f.ExpRatePair(1.0, 2.0)) == pytest.approx(SUM_1_2, abs=1e-12)
    assert f.ergodic_log_sum(1e9, 1e9) < 1e-8


def test_sum_with_dead_link_is_single():
    assert f.ergodic_log_sum(math.inf, 0.7) == pytest.approx(f.ergodic_log_single(0.7), abs=1e-15)
    assert f.ergodic_log_sum(math.inf, math.inf) == 0.0


def test_sum_continuity_across_branch_switch():
    for lam in (1e-3, 0.1, 1.0, 30.0, 500.0):
        a = f.ergodic_log_sum(lam, lam)
        b = f.ergodic_log_sum(lam, lam + 1e-9)
        inside = f.ergodic_log_sum(lam, lam * (1 + 0.999 * f.EQUAL_RATE_RTOL))
        outside = f.ergodic_log_sum(lam, lam * (1 + 1.001 * f.EQUAL_RATE_RTOL))
        assert abs(a - b) <= 1e-6
        assert abs(inside - outside) <= 1e-8


def test_sum_against_quadrature_grid():
    lams = np.geomspace(1e-3, 1e3, 10)
    for a in lams:
        for b in lams:
            assert f.ergodic_log_sum(a, b) == pytest.approx(quad_sum(a, b), abs=1e-8)


def test_sum_vectorized():
    a, b = np.array([0.5, 1.0, 3.0]), np.array([2.0, 1.0, math.inf])
    out = f.ergodic_log_sum(a, b)
    assert out == pytest.approx([f.ergodic_log_sum(x, y) for x, y in zip(a, b)], abs=0)


def test_pair_rejects_non_positive():
    with pytest.raises(DomainError):
        f.ExpRatePair(0.0, 1.0)
    with pytest.raises(DomainError):
        f.ergodic_log_sum(1.0, -2.0)


def test_rate_tuple_unit_channel_monte_carlo():
    ch = f.FadingTwrcChannel(1.0, 1.0, 1.0, 2.0, 1.0)
    est = f.monte_carlo_rates(ch, 1.0, np.random.default_rng(1))
    closed = f.fading_rate_tuple(ch, 1.0).to_dict()
    for k, (mean, se) in est.items():
        assert abs(closed[k] - mean) <= 3 * se, k


def test_vanishing_power():
    t = f.fading_rate_tuple(f.FadingTwrcChannel(1.0, 1.0, 1.0, 2.0, 1e-12), 1.0)
    assert max(t.rbar11, t.rbar21, t.f1, t.f2, t.d1) < 1e-10


def test_rate_tuple_domain():
    with pytest.raises(DomainError):
        f.fading_rate_tuple(symmetric(), 0.0)


def test_intersection_identity():
    ch = random_channel(np.random.default_rng(4))
    th = f.fading_thresholds(ch)
    t1, t2 = f.fading_rate_tuple(ch, th.e1bar), f.fading_rate_tuple(ch, th.e2bar)
    assert t1.rbar11 == pytest.approx(t1.rbar12, abs=1e-8)
    assert t2.rbar21 == pytest.approx(t2.rbar22, abs=1e-8)


def test_thresholds_symmetric():
    th = f.fading_thresholds(symmetric(0.7))
    assert th.c1bar == pytest.approx(th.c2bar, rel=1e-12)
    assert th.e1bar == pytest.approx(th.e2bar, abs=1e-8)


def _first_crossing(diff, lo=1e-3, hi=1e3, ratio=1e-4):
    grid = np.exp(np.arange(math.log(lo), math.log(hi), ratio))
    vals = diff(grid)
    i = int(np.argmax(np.sign(vals[:-1]) != np.sign(vals[1:])))
    return grid[i], grid[i + 1]


def test_thresholds_match_dense_scan():
    ch = fig5_origin()
    th = f.fading_thresholds(ch)
    lo, hi = _first_crossing(lambda s: np.asarray(f.fading_rate_tuple(ch, s).rbar11)
                             - np.asarray(f.fading_rate_tuple(ch, s).rbar12))
    assert lo <= th.e1bar <= hi
    # compression threshold: where rbar12 climbs past f1 (rbar12 - f1 = log2 of (1 + 1/c) / (1 + 1/s))
    t = f.fading_rate_tuple(ch, 1.0)
    lo, hi = _first_crossing(lambda s: t.d1 - np.log2(1 + 1 / s) - (t.d1 - t.f1))
    assert lo <= th.c1bar <= hi


def test_compression_below_intersection_on_random_channels():
    rng = np.random.default_rng(13)
    for _ in range(100):
        th = f.fading_thresholds(random_channel(rng))
        assert th.c1bar <= th.e1bar and th.c2bar <= th.e2bar
        assert th.z1bar <= th.e1bar


def test_stationary_point_is_a_root():
    ch = fig5_origin()
    s = f.sigma_g_bar(ch)
    h = 1e-3 * s
    total = lambda x: f.fading_rate_tuple(ch, x).rbar12 + f.fading_rate_tuple(ch, x).rbar21
    slope = (total(s + h) - total(s - h)) / (2 * h)
    scale = (total(2 * s) - total(s / 2)) / s
    assert abs(slope) < 1e-5 * max(1.0, abs(scale))


def test_weak_relay_uplink_has_no_stationary_point():
    ch = f.FadingTwrcChannel(1.0, 1.0, 1.0, 2.0, 1.0, {"hr2": 0.5})
    assert f.sigma_g_bar(ch) == math.inf
    th = f.fading_thresholds(ch)
    assert th.z1bar <= th.e2bar <= th.e1bar
    assert f.fading_optimal_sigma_nnc(ch)[0] == th.e1bar
    total = lambda x: f.fading_rate_tuple(ch, x).rbar12 + f.fading_rate_tuple(ch, x).rbar21
    grid = np.geomspace(0.1, 1e4, 50)
    assert np.all(np.diff([total(x) for x in grid]) > 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3), st.floats(1.001, 100.0))
def test_monotonicity_in_sigma(seed, s, factor):
    ch = random_channel(np.random.default_rng(seed))
    lo, hi = f.fading_rate_tuple(ch, s), f.fading_rate_tuple(ch, s * factor)
    assert lo.rbar11 >= hi.rbar11 - 1e-15 and lo.rbar21 >= hi.rbar21 - 1e-15
    assert lo.rbar12 <= hi.rbar12 and lo.rbar22 <= hi.rbar22


def test_symmetric_frontier_is_mirror_image():
    fr = f.fading_region(symmetric(0.7), "nnc")
    pts = np.array(fr.points)
    np.testing.assert_allclose(np.sort(pts[:, 0]), np.sort(pts[:, 1]), atol=1e-8)


def test_fig5_origin_containment():
    ch = fig5_origin()
    nob, nnc = f.fading_region(ch, "cf_nobinning"), f.fading_region(ch, "nnc")
    assert containment_gap(nob, nnc) <= 1e-9
    assert f.fading_check_same_region(ch)
    assert frontier_distance(nob, nnc) <= 1e-6


def test_asymmetric_relay_breaks_region_equality():
    ch = f.FadingTwrcChannel(1.0, 0.1, 0.95, 2.0, 10.0)
    assert not f.fading_check_same_region(ch)
    assert strict_gap(f.fading_region(ch, "cf_nobinning"), f.fading_region(ch, "nnc")) > 1e-6


def test_region_predicate_consistent_with_frontiers():
    rng = np.random.default_rng(17)
    for _ in range(20):
        ch = random_channel(rng)
        nob, nnc = f.fading_region(ch, "cf_nobinning"), f.fading_region(ch, "nnc")
        assert containment_gap(nob, nnc) <= 1e-9
        if f.fading_check_same_region(ch):
            assert frontier_distance(nob, nnc) <= 1e-6
        else:
            assert strict_gap(nob, nnc) > 1e-9


def test_optimum_symmetric_against_oracle():
    ch = symmetric()
    assert f.fading_optimal_sigma_nnc(ch)[1] == pytest.approx(f.fading_sumrate_oracle(ch)[1], abs=1e-6)


def test_optimum_random_against_oracle():
    rng = np.random.default_rng(23)
    for _ in range(200):
        ch = random_channel(rng)
        _, v = f.fading_optimal_sigma_nnc(ch)
        grid = np.geomspace(1e-4, 1e4, 400)
        assert v >= float(np.max(f.fading_sum_rate(ch, grid))) - 1e-6
        assert v == pytest.approx(f.fading_sumrate_oracle(ch, points=1500)[1], abs=1e-6)


def test_optimum_invariant_under_relabelling():
    ch = random_channel(np.random.default_rng(29))
    a, b = f.fading_optimal_sigma_nnc(ch), f.fading_optimal_sigma_nnc(ch.swapped())
    assert a[1] == pytest.approx(b[1], abs=1e-12)


def test_same_sumrate_symmetric():
    ch = symmetric()
    assert f.fading_check_same_sumrate(ch)
    th = f.fading_thresholds(ch)
    constrained = f.fading_sumrate_oracle(ch, max(th.c1bar, th.c2bar))[1]
    assert constrained == pytest.approx(f.fading_sumrate_oracle(ch)[1], abs=1e-6)


def test_same_sumrate_violation():
    ch = f.FadingTwrcChannel.from_dict(VIOLATING)
    assert not f.fading_check_same_sumrate(ch)
    th = f.fading_thresholds(ch)
    constrained = f.fading_sumrate_oracle(ch, max(th.c1bar, th.c2bar))[1]
    assert constrained < f.fading_optimal_sigma_nnc(ch)[1] - 1e-3
    assert f.fading_sumrate_cf_nobinning(ch)[1] == pytest.approx(constrained, abs=1e-6)


@pytest.mark.parametrize("relay", [(0.0, 0.0), (0.3, 0.4), (-1.0, 1.0), (1.2, -0.2)])
def test_same_sumrate_equal_pathloss_geometry(relay):
    u1, u2 = (-0.5, 0.0), (0.5, 0.0)
    ch = f.FadingTwrcChannel(1.0, math.dist(u1, relay), math.dist(u2, relay), 2.0, 10.0)
    assert f.fading_check_same_sumrate(ch)


def test_channel_round_trip_and_validation():
    ch = f.FadingTwrcChannel.from_dict(VIOLATING)
    assert f.FadingTwrcChannel.from_dict(ch.to_dict()) == ch
    with pytest.raises(DomainError):
        f.FadingTwrcChannel(0.0, 1.0, 1.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        f.FadingTwrcChannel(1.0, 1.0, 1.0, 2.0, 1.0, {"h99": 1.0})
    with pytest.raises(DomainError):
        f.FadingTwrcChannel(1.0, 1.0, 1.0, 2.0, 1.0, {"h12": -1.0})


def test_mean_gain_channel_matches_geometry():
    geo = f.FadingTwrcChannel(1.0, 0.5, 0.8, 2.0, 10.0)
    gains = (1.0, 1 / 0.5, 1.0, 1 / 0.8, 1 / 0.5, 1 / 0.8)
    mean = f.FadingTwrcChannel.from_mean_gains(*gains, power=10.0)
    for link in f.LINKS:
        assert mean.rate(link) == pytest.approx(geo.rate(link), rel=1e-14)


def test_dead_relay_downlink_is_degenerate():
    ch = f.FadingTwrcChannel(1.0, 1.0, 1.0, 2.0, 1.0, {"h1r": 0.0})
    with pytest.raises(DegenerateChannelError):
        f.fading_thresholds(ch)


def test_dead_direct_link_is_supported():
    ch = f.FadingTwrcChannel.from_mean_gains(0.0, 1.0, 0.0, 2.0, 1.0, 2.0, power=10.0)
    th = f.fading_thresholds(ch)
    assert math.isfinite(th.e1bar) and math.isfinite(th.nbar)
