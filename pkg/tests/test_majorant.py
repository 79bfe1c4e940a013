import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from psilab import bohr, majorant
from psilab.majorant import MajorantError, VinogradovBump, VinogradovParams


def random_params(rng) -> VinogradovParams:
    delta = float(rng.uniform(0.01, 0.2))
    width = float(rng.uniform(delta, 1 - delta))
    a = float(rng.uniform(-0.5, 0.5))
    return VinogradovParams(a, a + width, delta, int(rng.integers(1, 5)))


def test_params_validation():
    with pytest.raises(MajorantError, match="Delta < 1/2"):
        VinogradovParams(0, 0.9, 0.6, 2)
    with pytest.raises(MajorantError, match="Delta <= b - a"):
        VinogradovParams(0, 0.01, 0.02, 2)
    with pytest.raises(MajorantError, match="b - a <= 1 - Delta"):
        VinogradovParams(0, 0.99, 0.02, 2)
    with pytest.raises(MajorantError):
        VinogradovParams(0, 0.3, 0.02, 0)


def test_zeroth_coefficient_and_plateau():
    p = VinogradovParams(-0.11, 0.11, 0.02, 2)
    b = VinogradovBump(p)
    assert b.coefficient(0).real == p.b - p.a
    assert b(0.0) == 1.0
    m50 = abs(b.coefficient(50))
    assert m50 <= (2 / (math.pi * 50)) * (2 / (math.pi * 50 * 0.02)) ** 2


def test_coefficients_match_quadrature():
    b = VinogradovBump(VinogradovParams(0.1, 0.4, 0.05, 3))
    for m in (1, 2, 5, 11):
        re = quad(lambda u: b(u) * math.cos(2 * math.pi * m * u), 0, 1, limit=400, points=[0.075, 0.125, 0.375, 0.425])[0]
        im = quad(lambda u: -b(u) * math.sin(2 * math.pi * m * u), 0, 1, limit=400, points=[0.075, 0.125, 0.375, 0.425])[0]
        assert abs(complex(re, im) - b.coefficient(m)) < 1e-9


def test_plateau_and_vanishing_regions():
    rng = np.random.default_rng(2)
    for _ in range(5):
        p = random_params(rng)
        b = VinogradovBump(p)
        if p.width >= 2 * p.delta:
            inner = rng.uniform(p.a + p.delta / 2, p.b - p.delta / 2, 1000)
            assert np.all(b(inner) == 1.0)
        outer = rng.uniform(p.b + p.delta / 2, 1 + p.a - p.delta / 2, 1000)
        assert np.all(b(outer) == 0.0)
        x = rng.uniform(-2, 2, 1000)
        v = b(x)
        assert np.all((v >= 0) & (v <= 1))


def test_series_within_tail_bound():
    b = VinogradovBump(VinogradovParams(-0.2, 0.15, 0.1, 3))
    order = b.order_for_tail(1e-8)
    assert b.tail_bound(order) <= 1e-8
    x = np.random.default_rng(4).uniform(0, 1, 10_000)
    assert np.max(np.abs(b(x) - b.series(x, order))) <= b.tail_bound(order)


def test_bohr_majorant_properties():
    rng = np.random.default_rng(6)
    freqs, phases = [1.0, math.sqrt(2)], [0.1, 0.3]
    B = majorant.bohr_majorant(freqs, phases, 0.1, 0.1, 2)
    assert B.coefficient(0).real == pytest.approx(2 * 0.1 * 1.1, abs=1e-15)
    spec = bohr.BohrSpec(freqs, phases, 0.1)
    x = rng.uniform(-100, 100, 10**5)
    inside = bohr.member_mask(spec, x)
    v = B(x)
    assert np.all(v[inside] == 1.0)
    assert np.all(v >= 0) and np.all(v <= 1)
    with pytest.raises(MajorantError, match="Delta < 1/2"):
        majorant.bohr_majorant([1.0], [0.0], 0.4, 1.0)


def test_cutoff_kernel():
    assert majorant.cutoff_kernel(0.0) == 1.0
    assert majorant.cutoff_kernel(1.0) == pytest.approx((2 / math.pi) ** 2, rel=1e-15)
    assert majorant.cutoff_transform(1.5) == 0.0
    xs = np.linspace(-1, 1, 2001)
    assert majorant.cutoff_kernel(xs).min() == pytest.approx(majorant.CUTOFF_MIN, rel=1e-12)
    # transform of f agrees with numerical integration
    for xi in (0.0, 0.1, 0.3, 0.6):
        val = quad(lambda x: majorant.cutoff_kernel(x) * math.cos(2 * math.pi * x * xi), -200, 200, limit=2000)[0]
        assert abs(val - majorant.cutoff_transform(xi)) < 5e-3


def test_majorized_count_examples():
    B = majorant.bohr_majorant([1.0], [0.0], 0.1, 0.1, 2)
    res = majorant.majorized_count([0.05, 0.5], B, 1.0)
    assert res.point_sum == 1.0
    assert majorant.majorized_count([], B, 1.0).point_sum == 0.0
    rng = np.random.default_rng(8)
    pts = rng.uniform(0, 200, 2000)
    spec = bohr.BohrSpec([1.0], [0.0], 0.1)
    wide = bohr.BohrSpec([1.0], [0.0], 0.1 * 1.1 + 0.01)
    r = majorant.majorized_count(pts, B, 200.0)
    assert bohr.count_members(spec, pts) <= r.point_sum <= bohr.count_members(wide, pts)


def test_majorized_measure_bound_dominates_exact_measure():
    freqs, phases = [1.0, math.sqrt(2)], [0.1, 0.3]
    for T in (20.0, 80.0):
        B = majorant.bohr_majorant(freqs, phases, 0.1, 0.1)
        r = majorant.majorized_count([], B, T)
        exact, _ = bohr.truncated_measure(bohr.BohrSpec(freqs, phases, 0.1, T))
        assert exact <= r.measure_upper_bound
        assert abs(r.remainder) <= r.remainder_bound + 1e-12
    bound = majorant.majorant_measure_bound(freqs, 0.1, 0.1, 80.0)
    assert exact <= bound


def test_coefficient_dump_shape():
    rows = VinogradovBump(VinogradovParams(-0.1, 0.1, 0.05, 2)).dump(3)
    assert [r[0] for r in rows] == [-3, -2, -1, 0, 1, 2, 3]
    assert rows[3][1] == pytest.approx(0.2)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.01, 0.3),
    st.floats(0.0, 1.0),
    st.integers(1, 4),
    st.floats(-0.5, 0.5),
    st.integers(1, 10_000),
)
def test_coefficient_bounds_hold(delta, frac, r, a, m):
    # keep a little slack so rounding in a + width - a stays inside the constraints
    width = delta * (1 + 1e-9) + frac * (1 - 2 * delta) * (1 - 1e-9)
    b = VinogradovBump(VinogradovParams(a, a + width, delta, r))
    c = abs(b.coefficient(m))
    assert c <= 2 * width * (1 + 1e-12)
    assert c <= 2 / (math.pi * m) * (1 + 1e-12)
    assert c <= (2 / (math.pi * m)) * (r / (math.pi * m * delta)) ** r * (1 + 1e-12)
