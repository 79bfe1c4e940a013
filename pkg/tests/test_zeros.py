import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from psilab import zeros
from psilab.zeros import ZeroTable, ZeroTableError

from conftest import FIRST_ZEROS


def write(tmp_path, text, name="t.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_examples(tmp_path):
    t = zeros.load_zero_table(write(tmp_path, "# header\n14.134725142\n21.022039639\n"))
    assert t.ordinates[0] == 14.134725142 and len(t) == 2 and t.t_max == 21.022039639
    with pytest.raises(ZeroTableError, match="no ordinates"):
        zeros.load_zero_table(write(tmp_path, "# only a comment\n"))
    with pytest.raises(ZeroTableError, match="not ascending at line 2"):
        zeros.load_zero_table(write(tmp_path, "15.0\n14.0\n"), strict=False)
    with pytest.raises(ZeroTableError, match="non-numeric .* line 2"):
        zeros.load_zero_table(write(tmp_path, "14.1347\nabc\n"))
    with pytest.raises(ZeroTableError, match="blank line"):
        zeros.load_zero_table(write(tmp_path, "14.1347\n\n21.0\n"))
    with pytest.raises(ZeroTableError, match="first zeta zero"):
        zeros.load_zero_table(write(tmp_path, "20.0\n"))


def test_bundled_table_head_and_size(table):
    assert len(table) == 100_000
    assert np.allclose(table.ordinates[:10], FIRST_ZEROS, atol=2e-9)
    assert abs(table.t_max - 74920.827) < 0.01


def test_bundled_table_spot_check_mpmath(table):
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 20
    for n in (1, 1000, 54321, 100_000):
        assert abs(float(mpmath.zetazero(n).imag) - table.ordinates[n - 1]) < 2e-9


def test_count_examples(table):
    assert zeros.count_zeros(table, 14) == 0
    assert zeros.count_zeros(table, 15) == 1
    assert zeros.count_zeros(table, 100) == 29
    with pytest.raises(zeros.OutOfRangeError):
        zeros.count_zeros(table, table.t_max + 1)


def test_count_is_right_continuous(table):
    g = table.ordinates[::997]
    for v in g:
        assert zeros.count_zeros(table, v) - zeros.count_zeros(table, v - 1e-9) == 1


def test_riemann_von_mangoldt():
    assert abs(zeros.riemann_von_mangoldt(100) - 100 * math.log(100) / (2 * math.pi)) < 1e-12
    assert abs(zeros.riemann_von_mangoldt(100) - 73.29) < 0.01
    assert abs(zeros.riemann_von_mangoldt(2 * math.pi, refined=True) + 0.125) < 1e-15
    assert abs(zeros.riemann_von_mangoldt(100, refined=True) - 29) < 1
    with pytest.raises(ValueError):
        zeros.riemann_von_mangoldt(0, refined=True)


def test_count_tracks_refined_formula(table):
    g = table.ordinates
    n = np.arange(1, g.size + 1)
    u = g / (2 * math.pi)
    smooth = u * np.log(u) - u + 7 / 8
    # just before and at every ordinate
    assert np.max(np.abs(n - smooth)) <= 3
    assert np.max(np.abs(n - 1 - smooth)) <= 3


def test_form_factor_integral_matches_quadrature():
    ref = quad(lambda u: 1 - (math.sin(math.pi * u) / (math.pi * u)) ** 2, 0.5, 1.0, epsabs=1e-13)[0]
    assert abs(zeros.form_factor_integral(0.5, 1.0) - ref) < 1e-10
    assert abs(ref - 0.436) < 1e-3


def test_pair_correlation_small_case(table):
    with pytest.raises(ValueError):
        zeros.pair_correlation(table, 30, 1.0, 1.0)
    pc = zeros.pair_correlation(table, 30, 0.01, 5)
    g = table.upto(30)
    assert g.size == 3
    L = math.log(30)
    lo, hi = 2 * math.pi * 0.01 / L, 2 * math.pi * 5 / L
    brute = sum(1 for x, y in itertools.permutations(g, 2) if lo <= x - y <= hi)
    assert pc.observed == brute
    assert pc.observed_symmetric == 2 * brute


def test_pair_correlation_reflection(synthetic_table):
    g = synthetic_table.ordinates
    L = math.log(synthetic_table.t_max)
    lo, hi = 2 * math.pi * 0.25 / L, 2 * math.pi * 1.5 / L
    forward = sum(int(np.sum((d >= lo) & (d <= hi))) for d in (g[:, None] - g[None, :]))
    backward = sum(int(np.sum((d >= lo) & (d <= hi))) for d in (g[None, :] - g[:, None]))
    assert forward == backward == zeros.pair_correlation(synthetic_table, synthetic_table.t_max, 0.25, 1.5).observed


def test_close_pairs(table):
    g = table.upto(30)
    assert zeros.close_pair_count(table, 30, 1e-6) == g.size
    h = 2 / math.log(30)
    brute = sum(1 for x in g for y in g if abs(x - y) <= h)
    assert zeros.close_pair_count(table, 30, 2) == brute
    ratios = [zeros.close_pair_count(table, t, 2) / (t * math.log(t)) for t in (1e3, 1e4, table.t_max)]
    assert max(ratios) < 1


def test_partition_examples(table):
    p = zeros.partition_zeros(table, 100, 10**6, 1)
    assert p.n2.size == 0 and p.n1.size == 29
    p = zeros.partition_zeros(table, 100, 1, 2)
    g = table.upto(100)
    L = 1 / math.log(100)
    windows = {}
    for i, v in enumerate(g):
        windows.setdefault(math.floor(v / L), []).append(i)
    n2 = sorted(i for idx in windows.values() if len(idx) > 2 for i in idx)
    assert p.n2.tolist() == n2
    with pytest.raises(ValueError):
        zeros.partition_zeros(table, 5, 1, 1)


def test_partition_crowded_window():
    L = 1 / math.log(90)
    centre = (math.floor(50 / L) + 0.5) * L
    pts = np.concatenate([[14.2], centre + np.linspace(-0.01, 0.01, 10), [80.0, 90.0]])
    p = zeros.partition_zeros(ZeroTable(pts), 90, 5, 1)
    assert p.n2.tolist() == list(range(1, 11))


@pytest.mark.parametrize("offset", [0.0, 0.5])
def test_partition_window_bound(table, offset):
    t = 5000.0
    p = zeros.partition_zeros(table, t, 3, 1)
    g = table.upto(t)
    assert np.intersect1d(p.n1, p.n2).size == 0
    assert np.union1d(p.n1, p.n2).tolist() == list(range(g.size))
    w = zeros.window_index(g[p.n1] + offset * p.interval_length, p.interval_length)
    _, counts = np.unique(w, return_counts=True)
    # a shifted window meets at most two grid windows
    assert counts.max() <= (1 if offset == 0 else 2) * p.threshold
    assert zeros.max_points_in_window(g[p.n1], p.interval_length) <= 2 * p.threshold


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1.0, 1000.0), min_size=1, max_size=200, unique=True), st.floats(1.0, 1000.0))
def test_count_matches_brute_force(values, t):
    tab = ZeroTable(sorted(values))
    if t <= tab.t_max:
        assert zeros.count_zeros(tab, t) == sum(v <= t for v in values)
