"""Acceptance criteria 1-13, each reporting one pass/fail line."""
import io
import math
import random
import subprocess
import sys
import time
from contextlib import redirect_stdout
from fractions import Fraction

import numpy as np

from acceptance_log import record
from cli_manifest import MANIFEST
from slicelab import ifs as I
from slicelab import measure as Ms
from slicelab import slicer as S
from slicelab import takagi as tk
from slicelab import tangent as T
from slicelab.linalg2 import MultiCone, svd2_batch

LAMS = (0.55, 2 / 3, 0.75, 0.9)
BOUND_63 = math.log(63) / math.log(64)


def graph_line(lam, t, x):
    return S.Line.sloped(t, (x, tk.evaluate(lam, x)[0]))


def census_grid(lam=2 / 3):
    """5 slopes in [-3, 3] through 20 graph points, plus 9 horizontal lines."""
    xs = [(i + 0.5) / 20 for i in range(20)]
    cells = [(t, b) for t in (-3.0, -1.5, 0.0, 1.5, 3.0) for b in S.graph_offsets(lam, t, xs)]
    return cells + [(0.0, k / 10) for k in range(1, 10)]


def test_01_constants():
    t0 = time.perf_counter()
    worst = 0.0
    for lam in LAMS:
        c = tk.constants(lam)
        worst = max(worst, abs(c.k_lambda - 1 / (2 * lam - 1)), abs(c.m_lambda - 1 / (3 * (1 - lam))))
    c = tk.constants(2 / 3)
    closed = 1 + math.log(2 ** 6 - 1) / math.log(2 ** 6)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and c.n_lambda == 6 and abs(c.assouad_upper - closed) <= 1e-12 and dt < 1
    assert record(1, "constants", ok, f"max K/M error {worst:.1e}, n_lambda {c.n_lambda}, {dt:.2f}s")


def test_02_evaluation():
    t0 = time.perf_counter()
    rng = random.Random(2)
    err_m, half_ok, fe = 0.0, True, 0.0
    for lam in LAMS:
        err_m = max(err_m, abs(tk.evaluate(lam, Fraction(1, 3))[0] - tk.constants(lam).m_lambda))
        half_ok &= tk.evaluate(lam, 0.5) == (0.5, 0.0)
        for _ in range(250):
            # k / 2^52 keeps x / 2 and (x + 1) / 2 exact in binary64
            x = rng.getrandbits(52) / 2.0 ** 52
            tx = tk.evaluate(lam, x)[0]
            fe = max(fe, abs(tk.evaluate(lam, x / 2)[0] - (x / 2 + lam * tx)),
                     abs(tk.evaluate(lam, (x + 1) / 2)[0] - ((1 - x) / 2 + lam * tx)))
    dt = time.perf_counter() - t0
    ok = err_m <= 1e-9 and half_ok and fe <= 3e-9 and dt < 1
    assert record(2, "evaluation", ok, f"|T(1/3)-M| {err_m:.1e}, T(1/2) exact {half_ok}, "
                                      f"functional residual {fe:.1e}, {dt:.2f}s")


def test_03_closed_form_matrices():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for k in range(1000):
        lam = LAMS[k % 4]
        ifs = tk.takagi_ifs(lam)
        digits = tuple(int(d) for d in rng.integers(0, 2, rng.integers(1, 31)))
        closed = np.array(tk.word_matrix(lam, digits).rows())
        product = np.array(I.cylinder_map(ifs, digits).linear.rows())
        worst = max(worst, np.abs(closed - product).max() / np.abs(product).max())
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 5
    assert record(3, "closed-form matrices", ok, f"max relative error {worst:.1e} on 1000 words, {dt:.2f}s")


def test_04_domination_sandwich():
    t0 = time.perf_counter()
    violations, products = 0, 0
    for lam in (0.6, 0.75):
        c = tk.constants(lam).dom_constant_c
        lin, _ = tk.takagi_ifs(lam).packed()
        for n in range(1, 13):
            a1, a2 = svd2_batch(I.all_products(lin, n))
            tol = 1e-12
            products += a1.size
            violations += int(np.sum(a1 < lam ** n * (1 - tol)) + np.sum(a1 > c * lam ** n * (1 + tol))
                              + np.sum(a2 < 2.0 ** -n / c * (1 - tol)) + np.sum(a2 > 2.0 ** -n * (1 + tol)))
    dt = time.perf_counter() - t0
    ok = violations == 0 and dt < 30
    assert record(4, "domination sandwich", ok, f"{violations} violations over {products} products, {dt:.2f}s")


def test_05_furstenberg_interval():
    t0 = time.perf_counter()
    lam = 2 / 3
    k = tk.constants(lam).k_lambda
    cone = I.furstenberg_enclosure(tk.takagi_ifs(lam), MultiCone.from_slopes(-k - 1, k + 1), 14, "backward")
    (iv,) = cone.intervals
    lo, hi = iv.slopes()
    tol = k * (2 * lam) ** -14 + 1e-9
    dt = time.perf_counter() - t0
    ok = abs(lo + 3) <= tol and abs(hi - 3) <= tol and dt < 10
    assert record(5, "Furstenberg interval", ok, f"slopes [{lo:.6f}, {hi:.6f}], tolerance {tol:.4f}, {dt:.2f}s")


def test_06_census_induction_bound():
    t0 = time.perf_counter()
    lam = 2 / 3
    violations, possible_violations = 0, 0
    cells = census_grid(lam)
    for t, b in cells:
        for row in S.count_bound_check(lam, S.Line.with_intercept(t, b), 3):
            violations += not row.ok
            possible_violations += not row.possible_ok
    dt = time.perf_counter() - t0
    ok = violations == 0 and dt < 300
    assert record(6, "census induction bound", ok,
                  f"{violations} definite violations on {len(cells)} slices, k = 1..3 "
                  f"(possible-count diagnostics: {possible_violations}), {dt:.1f}s")


def test_07_slice_dimension_bound():
    t0 = time.perf_counter()
    res = S.scan_max_slice(2 / 3, census_grid(), 18)
    dt = time.perf_counter() - t0
    ok = res.max_possible_dim <= BOUND_63 + 0.1 and dt < 600
    assert record(7, "slice dimension bound", ok,
                  f"worst upper slope {res.max_possible_dim:.4f} <= {BOUND_63 + 0.1:.4f} on {len(res.rows)} "
                  f"cells, {dt:.1f}s")


def test_08_conservation_sandwich():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    failures, checked = 0, 0
    for lam in (2 / 3, 0.8):
        for _ in range(50):
            line = graph_line(lam, rng.uniform(-3, 3), rng.uniform(0, 1))
            failures += not Ms.conservation_sandwich_check(lam, line, 12).ok
            checked += 1
    dt = time.perf_counter() - t0
    ok = failures == 0 and dt < 300
    assert record(8, "conservation sandwich", ok, f"{failures} failures on {checked} slices, {dt:.1f}s")


def test_09_conservation_identity():
    t0 = time.perf_counter()
    lam = 2 / 3
    residuals = []
    for i in range(10):
        line = graph_line(lam, -3 + 6 * i / 9, (i + 0.5) / 10)
        residuals.append(Ms.pointwise_dim_estimate(lam, line, range(8, 17)).residual)
    dt = time.perf_counter() - t0
    ok = max(residuals) <= 0.15 and dt < 300
    shown = ", ".join(f"{r:.3f}" for r in residuals)
    assert record(9, "conservation identity", ok, f"residuals [{shown}], limit 0.15, {dt:.1f}s")


def test_10_affinity_dimension():
    t0 = time.perf_counter()
    tlo, thi = I.affinity_dimension(tk.takagi_ifs(2 / 3), 16)
    elo, ehi = I.affinity_dimension(I.example3_ifs(), 12)
    dt = time.perf_counter() - t0
    ok = tlo <= 1.41504 <= thi and 1 < elo <= ehi < 2 and dt < 120
    assert record(10, "affinity dimension", ok,
                  f"Takagi [{tlo:.4f}, {thi:.4f}], example3 [{elo:.4f}, {ehi:.4f}], {dt:.1f}s")


def test_11_example3_suite():
    t0 = time.perf_counter()
    checks = I.example3_checks()
    ex3 = I.example3_ifs()
    probes = [I.wbnc_probe(ex3, (0.0, 0.0), 4.0 ** -m) for m in range(2, 7)]
    increasing = all(a < b for a, b in zip(probes, probes[1:]))
    tangents = [T.example3_tangent_check(n) for n in range(3, 7)]
    dt = time.perf_counter() - t0
    desk = checks["norm_bound_ok"] and checks["cone_min_ok"] and checks["restricted_inverse_ok"]
    ok = desk and checks["square_invariant"] and checks["cone_invariant"] and increasing \
        and all(t.ok for t in tangents) and dt < 120
    shown = ", ".join(f"{t.distance:.3f}/{t.bound:.3f}" for t in tangents)
    assert record(11, "example3 suite", ok, f"norm checks {desk}, square {checks['square_invariant']}, "
                                            f"cone {checks['cone_invariant']}, wbnc {probes}, "
                                            f"tangent n=3..6 {shown}, {dt:.1f}s")


def test_12_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(12)
    mismatches = 0
    for k in range(200):
        lam = float(rng.uniform(0.55, 0.95))
        line = S.Line.sloped(rng.uniform(-4, 4), (rng.uniform(0, 1), rng.uniform(-0.2, 1.2 * tk.constants(lam).m_lambda)))
        target = S.Strip(line, float(rng.uniform(0, 0.1))) if k % 2 else line
        n = 1 + k % 8
        hull = "pentagon" if k % 3 == 0 else "box"
        got = S.slice_census(lam, target, n, hull=hull)
        mismatches += (got.definite, got.possible) != S.brute_force_census(lam, target, n, hull=hull)
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 120
    assert record(12, "oracle equivalence", ok, f"{mismatches} mismatches on 200 targets, {dt:.1f}s")


def _cli_bytes(cmd, threads):
    res = subprocess.run([sys.executable, "-m", "slicelab", *cmd.split(), "--threads", str(threads)],
                         capture_output=True)
    return res.returncode, res.stdout


def test_13_determinism():
    t0 = time.perf_counter()
    differing = [cmd for cmd in MANIFEST if _cli_bytes(cmd, 1) != _cli_bytes(cmd, 8)]
    codes = {_cli_bytes(cmd, 8)[0] for cmd in MANIFEST[:1]}
    dt = time.perf_counter() - t0
    ok = not differing and codes == {0} and dt < 300
    assert record(13, "determinism", ok, f"{len(differing)} of {len(MANIFEST)} commands differ "
                                         f"between 1 and 8 threads, {dt:.1f}s")
