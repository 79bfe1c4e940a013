import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psilab import bohr
from psilab.intervals import IntervalUnion, intersect_all


def test_contains_examples():
    s = bohr.BohrSpec([1.0], [0.0], 0.1)
    assert bohr.contains(s, 5.05)
    assert not bohr.contains(s, 5.3)
    assert bohr.contains(bohr.BohrSpec([1.0, 0.5], [0.0, 0.0], 0.1), 2.0)


def test_constraint_interval_examples():
    u = bohr.constraint_intervals(1.0, 0.0, 0.1, 10.0)
    assert u.component_count == 11
    assert abs(u.total_measure - 2.0) < 1e-12
    v = bohr.constraint_intervals(0.5, 0.0, 0.1, 10.0)
    assert abs(v.total_measure - 2.0) < 1e-12
    assert np.allclose(np.round(v.midpoints()), [0, 2, 4, 6, 8, 10])
    with pytest.raises(ValueError):
        bohr.constraint_intervals(1.0, 0.0, 0.5, 10.0)
    with pytest.raises(ValueError):
        bohr.constraint_intervals(0.0, 0.0, 0.1, 10.0)


def test_constraint_irrational_against_monte_carlo():
    a, b, r, t = math.sqrt(2), 0.3, 0.05, 100.0
    u = bohr.constraint_intervals(a, b, r, t)
    assert abs(u.component_count - (math.floor(a * t) + 1)) <= 1
    rng = np.random.default_rng(0)
    x = rng.uniform(0, t, 10**7)
    hit = np.abs((a * x + b) - np.round(a * x + b)) <= r
    p = hit.mean()
    se = t * math.sqrt(p * (1 - p) / x.size)
    assert abs(u.total_measure - t * p) < 5 * se
    assert abs(u.total_measure - 2 * r * t) < 0.1 / a + 2 * r / a


def test_rank_one_equals_constraint():
    s = bohr.BohrSpec([1.7], [0.2], 0.08, 50.0)
    m, dec = bohr.truncated_measure(s)
    ref = bohr.constraint_intervals(1.7, 0.2, 0.08, 50.0)
    assert np.array_equal(dec.intervals, ref.intervals)
    assert m == ref.total_measure


def test_incompatible_constraints_have_zero_measure():
    m, dec = bohr.truncated_measure(bohr.BohrSpec([1.0, 1.0], [0.0, 0.5], 0.1, 10.0))
    assert m == 0.0 and dec.component_count == 0


def test_rank_three_against_monte_carlo():
    freqs = [1.0, math.sqrt(2), math.sqrt(3)]
    s = bohr.BohrSpec(freqs, [0.0, 0.0, 0.0], 0.05, 200.0)
    m, _ = bohr.truncated_measure(s)
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 200, 10**7)
    p = bohr.member_mask(s, x).mean()
    se = 200 * math.sqrt(p * (1 - p) / x.size)
    assert abs(m - 200 * p) < 5 * se
    assert 0.5 < m / ((2 * 0.05) ** 3 * 200) < 2


def test_decomposition_agrees_with_contains():
    rng = np.random.default_rng(5)
    for _ in range(10):
        k = int(rng.integers(1, 5))
        s = bohr.BohrSpec(rng.uniform(0.1, 5, k), rng.uniform(0, 1, k), float(rng.uniform(0.05, 0.3)), 100.0)
        _, dec = bohr.truncated_measure(s)
        x = rng.uniform(0, 100, 10**4)
        inside = dec.contains(x)
        direct = bohr.member_mask(s, x)
        # disagreements only where a point sits within merge tolerance of an endpoint
        bad = inside != direct
        assert bad.sum() == 0


def test_count_members_cases(table):
    s = bohr.BohrSpec([math.log(2) / (2 * math.pi)], [0.0], 0.1, 100.0)
    assert bohr.count_members(s, []) == 0
    g = table.upto(100)
    brute = sum(1 for v in g if abs(v * math.log(2) / (2 * math.pi) - round(v * math.log(2) / (2 * math.pi))) <= 0.1)
    assert bohr.count_members(s, g) == brute
    s2 = bohr.BohrSpec([1.3, 0.7], [0.1, 0.2], 0.1, 50.0)
    _, dec = bohr.truncated_measure(s2)
    assert bohr.count_members(s2, dec.midpoints()) == dec.component_count


def test_measure_invariances():
    base = bohr.BohrSpec([1.3, 2.1], [0.1, 0.4], 0.12, 80.0)
    m0, d0 = bohr.truncated_measure(base)
    shifted, _ = bohr.truncated_measure(bohr.BohrSpec([1.3, 2.1], [3.1, -1.6], 0.12, 80.0))
    negated, _ = bohr.truncated_measure(bohr.BohrSpec([-1.3, 2.1], [-0.1, 0.4], 0.12, 80.0))
    assert abs(m0 - shifted) < 1e-9 and abs(m0 - negated) < 1e-9
    m1, d1 = bohr.truncated_measure(base.with_radius(0.15))
    assert m1 >= m0 and d0.is_subset_of(d1)


def test_rank_one_closed_form():
    # freq 1, phase 0, radius r on [0, T] with integer T: r + 2r(T-1) + r
    for T in (5, 10, 37):
        for r in (0.05, 0.2):
            m, _ = bohr.truncated_measure(bohr.BohrSpec([1.0], [0.0], r, float(T)))
            assert abs(m - 2 * r * T) < 1e-12


def test_extension_check():
    rng = np.random.default_rng(9)
    ratios = []
    for i in range(100):
        s = bohr.BohrSpec(rng.uniform(0.1, 2, 2), rng.uniform(0, 1, 2), 0.1, 500.0)
        pts = rng.uniform(0, 500, 1000)
        rep = bohr.interval_extension_check(s, pts, 0.1, 1.0)
        ratios.append(rep.ratio)
    assert max(ratios) <= 16
    empty = bohr.interval_extension_check(bohr.BohrSpec([1.0], [0.0], 0.1, 100.0), [], 0.1, 1.0)
    assert empty.lhs == 0 and empty.lhs <= empty.rhs
    with pytest.raises(bohr.BohrSpecError, match="frequency 50"):
        bohr.interval_extension_check(bohr.BohrSpec([50.0], [0.0], 0.1, 100.0), [1.0], 0.1, 1.0)


def test_average_measure_rank_one():
    rep = bohr.average_measure_experiment([1.0], 1, 0.1, 0.1, 10.0, trials=4, beta_grid=4)
    assert abs(rep["aggregate"]["avg_grid_max"] - 2.0) < 1e-9
    for trial in rep["per_trial"]:
        assert trial["grid_max"] <= trial["majorant_bound"] + 1e-9


def test_average_measure_grid_monotone():
    pool = [j / 100 + j * j * 1e-5 for j in range(1, 51)]
    a = bohr.average_measure_experiment(pool, 2, 0.1, 0.1, 100.0, trials=6, beta_grid=4, seed=3)
    b = bohr.average_measure_experiment(pool, 2, 0.1, 0.1, 100.0, trials=6, beta_grid=16, seed=3)
    for ta, tb in zip(a["per_trial"], b["per_trial"]):
        assert ta["tuple"] == tb["tuple"]
        assert tb["grid_max"] >= ta["grid_max"] - 1e-12
        assert tb["grid_max"] <= tb["majorant_bound"] + 1e-9


def test_spacing_violation_lists_pair():
    with pytest.raises(bohr.BohrSpecError, match=r"\(1.0, 1.001\)"):
        bohr.average_measure_experiment([1.0, 1.001], 1, 0.1, 0.1, 100.0, trials=2, beta_grid=4)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(0.1, 5.0), min_size=1, max_size=3),
    st.floats(0.02, 0.3),
    st.floats(5.0, 60.0),
)
def test_sweep_matches_pairwise_intersection(freqs, radius, t):
    phases = [0.37 * (i + 1) for i in range(len(freqs))]
    unions = [bohr.constraint_intervals(a, b, radius, t) for a, b in zip(freqs, phases)]
    swept = intersect_all(unions)
    acc = unions[0]
    for u in unions[1:]:
        lo = np.maximum.outer(acc.lo, u.lo).ravel()
        hi = np.minimum.outer(acc.hi, u.hi).ravel()
        keep = hi >= lo
        acc = IntervalUnion.from_bounds(lo[keep], hi[keep])
    assert abs(swept.total_measure - acc.total_measure) < 1e-9
