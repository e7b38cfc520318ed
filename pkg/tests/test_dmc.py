import itertools
import math

import numpy as np
import pytest

from relay_rates import dmc
from relay_rates.errors import ArgumentError, FactorizationError
from relay_rates.info import ConditionalPmf, JointPmf

TOL = 1e-9


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def brute_cmi(pmf: JointPmf, a, b, c=()):
    """Conditional MI by explicit summation over the joint, no marginal arrays."""
    names = pmf.names
    pos = {n: i for i, n in enumerate(names)}
    marg = {}
    for idx in itertools.product(*(range(s) for _, s in pmf.axes)):
        p = pmf.probs[idx]
        for group in (a + b + c, a + c, b + c, c):
            key = (group, tuple(idx[pos[n]] for n in group))
            marg[key] = marg.get(key, 0.0) + p
    total = 0.0
    for (group, vals), p in marg.items():
        if group != a + b + c or p <= 0:
            continue
        va = dict(zip(group, vals))
        pac = marg[(a + c, tuple(va[n] for n in a + c))]
        pbc = marg[(b + c, tuple(va[n] for n in b + c))]
        pc = marg[(c, tuple(va[n] for n in c))] if c else 1.0
        total += p * math.log2(p * pc / (pac * pbc))
    return total


def bsc(p):
    return np.array([[1 - p, p], [p, 1 - p]])


def uniform(n=2):
    return np.full(n, 1.0 / n)


def constant_compression(xr=2, yr=2, yhat=2, row=(0.3, 0.7)):
    table = np.broadcast_to(np.asarray(row), (xr, yr, yhat)).copy()
    return ConditionalPmf([("xr", xr), ("yr", yr)], [("yhat", yhat)], table)


def copy_compression():
    return ConditionalPmf.deterministic([("xr", 2), ("yr", 2)], [("yhat", 2)], lambda xr, yr: yr)


def oneway_channel(p_direct=0.2, p_relay=0.1, relay_in_y=True):
    """y = (x xor n1, xr) when relay_in_y, else y = x xor n1; yr = x xor n2."""
    ny = 4 if relay_in_y else 2
    table = np.zeros((2, 2, ny, 2))
    for x, xr, n1, n2 in itertools.product(range(2), repeat=4):
        p = bsc(p_direct)[0, n1] * bsc(p_relay)[0, n2]
        y = ((x ^ n1) * 2 + xr) if relay_in_y else (x ^ n1)
        table[x, xr, y, x ^ n2] += p
    return ConditionalPmf([("x", 2), ("xr", 2)], [("y", ny), ("yr", 2)], table)


def random_twoway(n, seed, symmetric=False):
    rng = np.random.default_rng(seed)
    weights = [None, 0.0, 0.05, 0.2, 0.5]
    return [dmc.TwoWayDistribution.random(rng, symmetric=symmetric, compression_weight=weights[i % 5])
            for i in range(n)]


# One-way ----------------------------------------------------------------------

def test_constant_compression_recovers_direct_rate():
    d = dmc.OneWayDistribution.from_components(uniform(), uniform(), oneway_channel(), constant_compression())
    res = dmc.oneway_cf_nobinning(d)
    assert res.feasible
    assert res.r1_bound == pytest.approx(d.mi(("x",), ("y",), ("xr",)), abs=1e-12)
    assert res.r1_bound == pytest.approx(1 - h2(0.2), abs=1e-12)


def test_perfect_relay_link_matches_brute_force():
    d = dmc.OneWayDistribution.from_components(uniform(), uniform(), oneway_channel(), copy_compression())
    pmf = d.pmf
    first = brute_cmi(pmf, ("x", "xr"), ("y",)) - brute_cmi(pmf, ("yhat",), ("yr",), ("x", "xr", "y"))
    second = brute_cmi(pmf, ("x",), ("y", "yhat"), ("xr",))
    res = dmc.oneway_cf_nobinning(d)
    assert res.r1_bound == pytest.approx(min(first, second), abs=1e-12)
    # first term: one bit from the relay symbol plus the direct BSC, minus the compression cost
    assert first == pytest.approx(1 + 1 - h2(0.2) - h2(0.1), abs=1e-12)
    assert res.feasible


def test_both_forms_agree_under_constant_compression():
    d = dmc.OneWayDistribution.from_components(uniform(), uniform(), oneway_channel(), constant_compression())
    res = dmc.oneway_cf_original(d)
    direct = d.mi(("x",), ("y",), ("xr",))
    assert res.active_constraints["two_step_rate"] == pytest.approx(direct, abs=1e-12)
    assert res.active_constraints["three_step_rate"] == pytest.approx(direct, abs=1e-12)


def test_three_step_form_infeasible_without_relay_to_destination_link():
    d = dmc.OneWayDistribution.from_components(
        uniform(), uniform(), oneway_channel(relay_in_y=False), copy_compression())
    assert d.mi(("xr",), ("y",)) == pytest.approx(0.0, abs=1e-15)
    res = dmc.oneway_cf_original(d)
    assert res.active_constraints["three_step_compression_slack"] < 0
    assert res.active_constraints["three_step_rate"] == 0.0
    assert res.active_constraints["two_step_rate"] == pytest.approx(res.r1_bound)


def test_two_step_form_dominates_three_step_when_feasible():
    rng = np.random.default_rng(5)
    for _ in range(100):
        d = dmc.OneWayDistribution.random(rng, compression_weight=rng.uniform())
        c = dmc.oneway_cf_original(d).active_constraints
        if c["three_step_compression_slack"] >= 0:
            assert c["two_step_rate"] >= c["three_step_rate"] - 1e-12


def test_oneway_equivalence_on_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(100):
        d = dmc.OneWayDistribution.random(rng, compression_weight=rng.uniform())
        a = dmc.oneway_rate(d, dmc.oneway_cf_nobinning)
        b = dmc.oneway_rate(d, dmc.oneway_cf_original)
        assert a == pytest.approx(b, abs=1e-10)
        assert dmc.oneway_equivalence_gap(d) >= -1e-10


def test_oneway_factorization_checked():
    probs = np.zeros((2,) * 5)
    probs[0, 0, 0, 0, 0] = probs[1, 1, 1, 1, 1] = 0.5  # x and xr fully correlated
    pmf = JointPmf([(n, 2) for n in dmc.ONEWAY_VARS], probs)
    with pytest.raises(FactorizationError):
        dmc.OneWayDistribution(pmf)


def test_wrong_variables_rejected():
    with pytest.raises(FactorizationError):
        dmc.OneWayDistribution(JointPmf.uniform([("a", 2)]))


# Two-way ----------------------------------------------------------------------

def twoway_channel(p1=0.1, p2=0.1, pr=0.05, relay_visible=True):
    """y1 = (x2 xor n1, xr), y2 = (x1 xor n2, xr), yr = x1 xor x2 xor nr (binary when relay hidden)."""
    ny = 4 if relay_visible else 2
    table = np.zeros((2, 2, 2, ny, ny, 2))
    for x1, x2, xr, n1, n2, nr in itertools.product(range(2), repeat=6):
        p = bsc(p1)[0, n1] * bsc(p2)[0, n2] * bsc(pr)[0, nr]
        y1 = (x2 ^ n1) * (2 if relay_visible else 1) + (xr if relay_visible else 0)
        y2 = (x1 ^ n2) * (2 if relay_visible else 1) + (xr if relay_visible else 0)
        table[x1, x2, xr, y1, y2, x1 ^ x2 ^ nr] += p
    return ConditionalPmf([("x1", 2), ("x2", 2), ("xr", 2)], [("y1", ny), ("y2", ny), ("yr", 2)], table)


def twoway(channel, compression, px1=None, px2=None):
    return dmc.TwoWayDistribution.from_components(
        uniform() if px1 is None else px1, uniform() if px2 is None else px2, uniform(), channel, compression)


@pytest.mark.parametrize("scheme", list(dmc.TWOWAY_SCHEMES))
def test_symmetric_channel_gives_equal_bounds(scheme):
    d = twoway(twoway_channel(), copy_compression())
    res = dmc.TWOWAY_SCHEMES[scheme](d)
    assert res.r1_bound == pytest.approx(res.r2_bound, abs=1e-12)


def test_random_symmetric_instances_have_equal_bounds():
    for d in random_twoway(20, 3, symmetric=True):
        for fn in dmc.TWOWAY_SCHEMES.values():
            res = fn(d)
            assert res.r1_bound == pytest.approx(res.r2_bound, abs=1e-12)


def test_constant_compression_reduces_to_direct_links():
    d = twoway(twoway_channel(0.1, 0.2), constant_compression())
    direct1 = d.mi(("x1",), ("y2",), ("x2", "xr"))
    direct2 = d.mi(("x2",), ("y1",), ("x1", "xr"))
    for name in ("cf_original", "cf_nobinning", "nnc"):
        res = dmc.TWOWAY_SCHEMES[name](d)
        assert res.feasible
        assert res.r1_bound == pytest.approx(direct1, abs=1e-12)
        assert res.r2_bound == pytest.approx(direct2, abs=1e-12)


def test_infeasible_scheme_reports_zero_and_names_constraint():
    d = twoway(twoway_channel(relay_visible=False), copy_compression())
    res = dmc.twrc_cf_nobinning(d)
    assert not res.feasible
    assert (res.r1_bound, res.r2_bound) == (0.0, 0.0)
    assert set(res.violated) == {"compression_at_user1", "compression_at_user2"}
    assert res.active_constraints["compression_at_user1_slack"] < 0


def test_negative_bounds_clamped_but_kept_raw():
    d = twoway(twoway_channel(0.45, 0.45, 0.3, relay_visible=False), copy_compression())
    res = dmc.twrc_nnc(d)
    raw = res.active_constraints["R1:I(X1,Xr;Y2|X2)-I(Yhat;Yr|X1,X2,Xr,Y2)"]
    assert raw < 0
    assert res.r1_bound == 0.0


def _bounds(res):
    return (res.r1_bound, res.r2_bound) if res.feasible else (0.0, 0.0)


def _nested(inner, outer):
    if inner.feasible and not outer.feasible:
        return False
    a, b = _bounds(inner), _bounds(outer)
    return a[0] <= b[0] + TOL and a[1] <= b[1] + TOL


def test_region_nesting_on_random_instances():
    for d in random_twoway(100, 21):
        orig, nob, nnc = dmc.twrc_cf_original(d), dmc.twrc_cf_nobinning(d), dmc.twrc_nnc(d)
        assert _nested(orig, nob)
        assert _nested(nob, nnc)
        r1, r2 = dmc.twrc_relaxed_norepeat(d), dmc.twrc_relaxed_repeat2(d)
        assert _nested(r1, r2)
        assert _nested(r2, nnc)


def test_binning_constraint_stronger_than_nobinning_constraints():
    for d in random_twoway(60, 8):
        binned = dmc.twrc_cf_original(d).active_constraints["binned_compression_slack"]
        nob = dmc.twrc_cf_nobinning(d).active_constraints
        assert binned <= min(nob["compression_at_user1_slack"], nob["compression_at_user2_slack"]) + 1e-12


def test_strong_relay_link_leaves_boundary_term_inactive():
    d = twoway(twoway_channel(0.2, 0.2, 0.3), copy_compression())
    res = dmc.twrc_relaxed_norepeat(d)
    assert res.active_constraints["bracket_user1"] >= 0
    assert res.r1_bound == pytest.approx(dmc.twrc_nnc(d).r1_bound, abs=1e-12)


def test_zero_bracket_makes_repetition_irrelevant():
    d = twoway(twoway_channel(relay_visible=False), constant_compression())
    a, b = dmc.twrc_relaxed_norepeat(d), dmc.twrc_relaxed_repeat2(d)
    assert a.active_constraints["bracket_user1"] == pytest.approx(0.0, abs=1e-15)
    assert (a.r1_bound, a.r2_bound) == pytest.approx((b.r1_bound, b.r2_bound), abs=1e-15)


def test_simultaneous_bounds_constant_compression():
    d = twoway(twoway_channel(), constant_compression())
    first, second = dmc.twrc_simultaneous_bounds(d)
    nnc = dmc.twrc_nnc(d).r2_bound
    assert first == pytest.approx(nnc, abs=1e-12)
    assert second == pytest.approx(nnc, abs=1e-12)


def test_simultaneous_bounds_ordering_on_random_instances():
    for d in random_twoway(100, 31):
        raw_first, raw_second = dmc.twrc_simultaneous_raw(d)
        assert raw_first <= raw_second + 1e-12
        first, second = dmc.twrc_simultaneous_bounds(d)
        assert first <= second + 1e-12
        assert second <= dmc.twrc_nnc(d).r2_bound + 1e-12


def test_simultaneous_bounds_symmetric_value():
    d = twoway(twoway_channel(0.1, 0.1, 0.05), copy_compression())
    pmf = d.pmf
    expected = brute_cmi(pmf, ("x2",), ("y1", "yhat"), ("x1", "xr")) - \
        brute_cmi(pmf, ("yhat",), ("yr",), ("x1", "x2", "xr", "y1"))
    raw_first, _ = dmc.twrc_simultaneous_raw(d)
    assert raw_first == pytest.approx(expected, abs=1e-12)


def test_equality_condition_symmetric_and_asymmetric():
    assert dmc.equal_region_necessary_condition(twoway(twoway_channel(), copy_compression()))
    asym = twoway(twoway_channel(0.1, 0.1), copy_compression(), px1=np.array([0.9, 0.1]))
    assert not dmc.equal_region_necessary_condition(asym)


def test_equality_condition_matches_brute_force():
    for d in random_twoway(10, 41) + random_twoway(5, 42, symmetric=True):
        pmf = d.pmf
        link = abs(brute_cmi(pmf, ("xr",), ("y1",), ("x1",)) - brute_cmi(pmf, ("xr",), ("y2",), ("x2",)))
        comp = abs(brute_cmi(pmf, ("yhat",), ("yr",), ("x1", "xr", "y1"))
                   - brute_cmi(pmf, ("yhat",), ("yr",), ("x2", "xr", "y2")))
        assert dmc.equal_region_necessary_condition(d) == (link <= 1e-9 and comp <= 1e-9)


def test_binning_strictly_worse_when_condition_fails():
    """No-binning feasible, binning infeasible and the condition false: a strict gap remains."""
    seen = 0
    for d in random_twoway(300, 51):
        orig, nob = dmc.twrc_cf_original(d), dmc.twrc_cf_nobinning(d)
        if nob.feasible and not orig.feasible and not dmc.equal_region_necessary_condition(d):
            seen += 1
            assert max(nob.r1_bound, nob.r2_bound) > 1e-9
    assert seen > 0


def test_twoway_factorization_checked():
    probs = np.zeros((2,) * 7)
    probs[(0,) * 7] = probs[(1,) * 7] = 0.5
    with pytest.raises(FactorizationError):
        dmc.TwoWayDistribution(JointPmf([(n, 2) for n in dmc.TWOWAY_VARS], probs))


def test_load_and_evaluate():
    d = random_twoway(1, 61)[0]
    loaded = dmc.load_distribution(d.to_dict("twrc-dmc"))
    assert loaded.pmf.allclose(d.pmf)
    out = dmc.evaluate(loaded)
    assert set(out["schemes"]) == set(dmc.TWOWAY_SCHEMES)
    with pytest.raises(ArgumentError):
        dmc.load_distribution({"model": "gaussian"})


def test_symmetric_requires_matching_alphabets():
    with pytest.raises(ArgumentError):
        dmc.TwoWayDistribution.random(np.random.default_rng(0), sizes={"x1": 3}, symmetric=True)
