import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slicelab import ifs as I
from slicelab import slicer as S
from slicelab import takagi as tk
from slicelab.errors import DegenerateHull, DepthTooLarge, InsufficientData, ValidationError
from slicelab.words import Word

LAM = 2 / 3
M = 1.0


def random_lines(seed, count, lam=LAM):
    rng = np.random.default_rng(seed)
    m = tk.constants(lam).m_lambda
    out = []
    for _ in range(count):
        t = rng.uniform(-4, 4)
        x = rng.uniform(0, 1)
        y = rng.uniform(-0.2, 1.2 * m)
        out.append(S.Line.sloped(t, (x, y)))
    return out


def word_oracle(ifs, target, n, slack=None):
    """Per-word classification of every depth-n cylinder via its own hull (valid for invariant hulls)."""
    definite = possible = 0
    for digits in itertools.product(range(ifs.N), repeat=n):
        w = Word(digits, ifs.N)
        hull = I.cylinder_hull(ifs, w)
        m = I.cylinder_map(ifs, w)
        wits = [tuple(m(p)) for p in ifs.witnesses]
        v = S.classify_cylinder(hull, wits, target, slack if slack is not None else S.default_slack(
            S._target_parts(target)[0].normal_form()[1], ifs.enclosure))
        possible += v is not S.Verdict.EMPTY
        definite += v is S.Verdict.DEFINITE
    return definite, possible


# ------------------------------------------------------ classification ----

def test_classify_examples():
    box = I.ConvexPolygon.box(0, 1, 0, 1)
    hull = I.ConvexPolygon([(0, 0), (0.5, 0.5), (0.5, 7 / 6), (0, 2 / 3)])
    ends = [(0, 0), (0.5, 0.5)]
    above = S.Line.with_intercept(0, 1.5 * M)
    assert S.classify_cylinder(box, [(0, 0), (1, 0)], above) is S.Verdict.EMPTY
    assert S.classify_cylinder(hull, ends, S.Line.with_intercept(0, 0.3)) is S.Verdict.DEFINITE
    assert S.classify_cylinder(hull, ends, S.Line.with_intercept(0, 0.5)) is S.Verdict.POSSIBLE


def test_classify_strip_and_validation():
    box = I.ConvexPolygon.box(0, 1, 0, 1)
    strip = S.Strip(S.Line.with_intercept(0, 0.1), 0.2)
    assert S.classify_cylinder(box, [(0, 0), (1, 0)], strip) is S.Verdict.DEFINITE
    with pytest.raises(DegenerateHull):
        S.classify_cylinder(box, [(2, 2)], strip)


@settings(max_examples=200)
@given(st.floats(-3, 3), st.floats(-0.5, 1.5), st.floats(1e-12, 1e-3), st.floats(1.0, 100.0))
def test_slack_monotonicity(t, b, eps, factor):
    hull = I.ConvexPolygon([(0, 0), (0.5, 0.5), (0.5, 7 / 6), (0, 2 / 3)])
    line = S.Line.with_intercept(t, b)
    small = S.classify_cylinder(hull, [(0, 0), (0.5, 0.5)], line, eps)
    big = S.classify_cylinder(hull, [(0, 0), (0.5, 0.5)], line, eps * factor)
    if small is not big:
        assert big is S.Verdict.POSSIBLE


# -------------------------------------------------------------- census ----

def test_census_examples(use_numba):
    above = S.slice_census(LAM, S.Line.with_intercept(0, 1.5 * M), 10, use_numba=use_numba)
    assert above.definite == above.possible == 0
    c = S.slice_census(LAM, S.Line.with_intercept(0, 0.3), 1, use_numba=use_numba)
    assert c.definite == 2
    top = S.slice_census(LAM, S.Line.sloped(0, (0, M)), 6, use_numba=use_numba)
    assert top.definite <= 63
    assert top.possible <= 63


def test_census_frozen_values():
    # frozen from the per-word oracle (pentagon hull, invariant, so per-word == chain)
    line = S.Line.with_intercept(0, 0.3)
    ifs = tk.takagi_ifs(LAM, "pentagon")
    assert word_oracle(ifs, line, 6) == (2, 2)
    got = S.slice_census(ifs, line, 6).as_dict()
    assert (got["n"], got["definite"], got["possible"]) == (6, 2, 2)


def test_depth_guard():
    with pytest.raises(DepthTooLarge):
        S.slice_census(LAM, S.Line.with_intercept(0, 0.3), 27)


@pytest.mark.parametrize("line", random_lines(5, 12))
def test_per_word_oracle_on_invariant_hull(line):
    ifs = tk.takagi_ifs(LAM, "pentagon")
    for n in (3, 6):
        got = S.slice_census(ifs, line, n)
        assert (got.definite, got.possible) == word_oracle(ifs, line, n)
        assert (got.definite, got.possible) == S.brute_force_census(ifs, line, n)


def test_per_word_oracle_example3():
    e3 = I.example3_ifs()
    for line in random_lines(9, 6):
        for target in (line, S.Strip(line, 0.03)):
            got = S.slice_census(e3, target, 4)
            assert (got.definite, got.possible) == word_oracle(e3, target, 4)


@pytest.mark.parametrize("hull", ["box", "pentagon"])
def test_pruned_equals_brute_force(hull, use_numba):
    for k, line in enumerate(random_lines(11, 25)):
        target = S.Strip(line, 0.01 * (k % 4)) if k % 2 else line
        n = 1 + k % 8
        got = S.slice_census(LAM, target, n, hull=hull, use_numba=use_numba)
        assert (got.definite, got.possible) == S.brute_force_census(LAM, target, n, hull=hull)


def test_census_against_dense_graph_sampling():
    lam, n = 0.75, 9
    pts = tk.graph_samples(lam, n + 6)
    for line in random_lines(13, 15, lam):
        (nx, ny), c = line.normal_form()
        g = pts @ np.array([nx, ny]) - c
        per = 2 ** 6
        true_hits = 0
        for k in range(2 ** n):
            seg = g[k * per:(k + 1) * per + 1]
            true_hits += bool(seg.min() <= 0 <= seg.max())
        got = S.slice_census(lam, line, n)
        assert got.definite <= true_hits <= got.possible


def test_nested_targets_and_hulls():
    for line in random_lines(17, 30):
        for n in (6, 10):
            ln = S.slice_census(LAM, line, n)
            st_ = S.slice_census(LAM, S.Strip(line, 0.02), n)
            assert ln.possible <= st_.possible and ln.definite <= st_.possible
            assert S.slice_census(LAM, line, n, hull="pentagon").possible <= ln.possible


def test_possible_monotone_under_widening():
    line = S.Line.sloped(0.7, (0.4, 0.6))
    counts = [S.slice_census(LAM, S.Strip(line, r), 10).possible for r in (0, 0.001, 0.01, 0.1, 0.5)]
    assert counts == sorted(counts)


def test_every_live_node_has_live_parent():
    for line in random_lines(19, 10):
        c = S.slice_census(LAM, line, 14)
        assert np.all(c.possible_levels[1:] <= 2 * c.possible_levels[:-1])


def test_extra_witnesses_only_add_definite():
    for line in random_lines(23, 20):
        a = S.slice_census(LAM, line, 10)
        b = S.slice_census(LAM, line, 10, extra_witnesses=True)
        assert a.possible == b.possible and a.definite <= b.definite <= b.possible


def test_vertical_closed_form():
    assert S.slice_census(LAM, S.Line.vertical_at(0.3), 12).possible == 1
    c = S.slice_census(LAM, S.Line.vertical_at(0.5), 12)
    assert c.definite == c.possible == 2
    assert S.slice_census(LAM, S.Line.vertical_at(1.3), 5).possible == 0
    geo = S.slice_census(I.AffineIFS(tk.takagi_ifs(LAM).maps, tk.graph_hull(LAM).polygon),
                         S.Line.vertical_at(0.3), 12)
    assert geo.definite <= 1 <= geo.possible


def test_line_forms():
    a = S.Line.sloped(2.0, (1.0, 3.0))
    b = S.Line.with_intercept(2.0, 1.0)
    assert np.allclose(a.normal_form()[0], b.normal_form()[0]) and math.isclose(a.normal_form()[1], b.normal_form()[1])
    assert b.intercept == 1.0
    with pytest.raises(ValidationError):
        S.Line.sloped(math.inf, (0, 0))
    with pytest.raises(ValidationError):
        S.Strip(b, -1.0)


# ------------------------------------------------------------- slopes -----

def fake(n, d, p):
    z = np.zeros(n + 1, np.int64)
    return S.SliceCensus(n, d, p, 0, z, z, z)


def test_minkowski_synthetic():
    cs = [fake(n, int(round(2 ** (0.5 * n))), int(round(2 ** (0.5 * n)))) for n in range(8, 17, 2)]
    with pytest.raises(InsufficientData):
        S.minkowski_slope(cs)
    cs = [fake(n, 2 ** (n // 2) if n % 2 == 0 else 2 ** (n // 2), 2 ** n) for n in range(8, 17)]
    est = S.minkowski_slope(cs)
    assert math.isclose(est.upper, 1.0, abs_tol=1e-9)
    ones = [fake(n, 1, 1) for n in range(3, 9)]
    assert S.minkowski_slope(ones).upper == 0.0
    exact = S.minkowski_slope([fake(n, 0, 0) for n in range(3, 9)])
    assert exact.lower == exact.upper == 0.0
    with pytest.raises(InsufficientData):
        S.minkowski_slope(cs[:2])


def test_minkowski_half_slope():
    n = np.arange(8, 17)
    # exact powers of two at even depths, logs linear in n
    cs = [fake(int(k), 2 ** (int(k) // 2 * 2 // 2), 2 ** int(k)) for k in n]
    assert math.isclose(S.minkowski_slope(cs).upper, 1.0, abs_tol=1e-9)
    z = np.zeros(1, np.int64)
    lv = [S.SliceCensus(int(k), 0, 0, 0, z, z, z) for k in n]
    counts = 2.0 ** (0.5 * n)
    x = np.polyfit(n, np.log2(counts), 1)[0]
    assert math.isclose(x, 0.5, abs_tol=1e-9)
    assert len(lv) == 9


def test_slice_dimension_y03():
    c = S.slice_census(LAM, S.Line.with_intercept(0, 0.3), 18)
    est = S.census_slopes(c, 10)
    # the regression slopes of two ordered count sequences need not be ordered
    assert np.all(c.definite_levels <= c.possible_levels)
    assert 0.0 <= est.upper <= math.log(63) / math.log(64) + 0.1
    assert est.lower >= 0.0


# ----------------------------------------------------------- bad words ----

def bad_oracle(lam, line, n, radius):
    """Per-word bad-word histogram on the invariant hull."""
    ifs = tk.takagi_ifs(lam, "pentagon")
    (nx, ny), c = line.normal_form()
    eps = S.default_slack(c, ifs.enclosure)
    bad = np.zeros(n + 1, np.int64)
    strip = 0
    for digits in itertools.product(range(2), repeat=n):
        g = lambda k: I.cylinder_hull(ifs, Word(digits[:k], 2)).vertices @ np.array([nx, ny]) - c
        leaf = g(n)
        if leaf.min() > radius + eps or leaf.max() < -(radius + eps):
            continue
        strip += 1
        for k in range(1, n + 1):
            gk = g(k)
            if gk.min() > eps or gk.max() < -eps:
                bad[k] += 1
                break
    return bad, strip


def test_bad_words_below_graph():
    t = S.bad_word_tally(LAM, S.Line.with_intercept(0, -0.1), 2)
    assert t.bad[1:].tolist() == [4, 0]
    assert t.line_possible[2] == 0
    assert math.isclose(t.radius, math.sqrt(2) * 4 * LAM ** 2)


def test_bad_words_zero_radius_above():
    t = S.bad_word_tally(LAM, S.Line.with_intercept(0, 1.5 * M), 6, radius=0.0)
    assert t.bad.sum() == 0 and t.strip_possible == 0


@pytest.mark.parametrize("line", random_lines(29, 6))
def test_bad_words_against_oracle(line, use_numba):
    n = 7
    radius = S.strip_constant(LAM) * LAM ** n
    t = S.bad_word_tally(LAM, line, n, hull="pentagon", use_numba=use_numba)
    bad, strip = bad_oracle(LAM, line, n, radius)
    assert t.strip_possible == strip
    assert t.bad.tolist() == bad.tolist()


def test_bad_word_ratios_reported():
    t = S.bad_word_tally(LAM, S.Line.with_intercept(0, 0.3), 12)
    r = t.ratios()
    assert np.all(np.isfinite(r[t.line_possible[1:] > 0]))
    assert set(t.as_dict()) >= {"bad", "line_possible", "ratios"}


# ---------------------------------------------------------- bound check ---

def test_bound_check_examples():
    rows = S.count_bound_check(LAM, S.Line.with_intercept(0, 0.3), 2)
    assert [r.bound for r in rows] == [63, 3969]
    assert all(r.ok for r in rows)
    rows = S.count_bound_check(LAM, S.Line.with_intercept(0, 1.5 * M), 2)
    assert all(r.definite == 0 and r.ok for r in rows)
    with pytest.raises(DepthTooLarge):
        S.count_bound_check(LAM, S.Line.with_intercept(0, 0.3), 5)


# ---------------------------------------------------------------- scan ----

def test_scan_trivial_and_vertical():
    res = S.scan_max_slice(LAM, [(0.0, 1.5 * M)], 10)
    assert res.max_possible_dim == 0 and res.max_definite_dim == 0
    with pytest.raises(ValidationError, match="vertical"):
        S.scan_max_slice(LAM, [(math.inf, 0.0)], 10)


def test_scan_rows_in_grid_order_and_thread_independent():
    cells = [(t, b) for t in S.slope_grid(-3, 3, 1.5) for b in S.graph_offsets(LAM, t, [0.2, 0.6])]
    a = S.scan_max_slice(LAM, cells, 12, threads=1)
    b = S.scan_max_slice(LAM, cells, 12, threads=4)
    assert a == b
    assert [(r.slope, r.offset) for r in a.rows] == cells
    assert a.max_possible_dim <= math.log(63) / math.log(64) + 0.1


def test_graph_offsets_pass_through_graph():
    for t, x in [(1.0, 0.25), (-2.0, 0.5)]:
        (b,) = S.graph_offsets(LAM, t, [x])
        assert math.isclose(t * x + b, tk.evaluate(LAM, x)[0])
