"""The Takagi function T(x) = sum_n lam^n dist(2^n x, Z) for 1/2 < lam < 1.

Certified evaluation, the two-map IFS whose attractor is the graph, closed
forms for word matrices, the constants K, M, n_lam and the derived dimension
bounds, the pull-back slope recursion and dyadic graph sampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import OutOfDomain, OutOfRange
from .ifs import ASSERTED, VERIFIED, AffineIFS, AffineMap2, ConvexPolygon, verify_invariant_enclosure
from .linalg2 import Mat2, Vec2
from .words import Word

NEAR_INTEGER = 1e-12


def check_lambda(lam) -> float:
    lam = float(lam)
    if not 0.5 < lam < 1.0:
        raise OutOfDomain(f"lambda must lie in (1/2, 1), got {lam!r}")
    return lam


def parse_lambda(text: str) -> float:
    """Decimal or rational ``p/q`` (evaluated exactly, then rounded once)."""
    try:
        value = float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise OutOfDomain(f"cannot parse lambda {text!r}") from None
    return check_lambda(value)


@dataclass(frozen=True)
class TakagiParams:
    lam: float
    k_lambda: float
    m_lambda: float
    n_lambda: int
    dim_hausdorff: float
    assouad_upper: float
    dom_constant_c: float

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam, "k_lambda": self.k_lambda, "m_lambda": self.m_lambda,
            "n_lambda": self.n_lambda, "dim_hausdorff": self.dim_hausdorff,
            "assouad_upper": self.assouad_upper, "dom_constant_c": self.dom_constant_c,
        }


def constants(lam) -> TakagiParams:
    lam = check_lambda(lam)
    k = 1.0 / (2.0 * lam - 1.0)
    m = 1.0 / (3.0 * (1.0 - lam))
    arg = math.log(2.0 * (k + m)) / -math.log(lam)
    nearest = round(arg)
    # near-integer arguments round up: a larger n only weakens the bound
    n = nearest + 1 if abs(arg - nearest) <= NEAR_INTEGER else math.ceil(arg)
    n = max(n, 2)
    dim_h = 2.0 + math.log(lam) / math.log(2.0)
    assouad = 1.0 + math.log(2.0 ** n - 1.0) / math.log(2.0 ** n)
    c = math.sqrt((k + 1.0) ** 2 + 1.0)
    return TakagiParams(lam, k, m, n, dim_h, assouad, c)


# ------------------------------------------------------------ evaluation ---

def terms_needed(lam: float, tol: float) -> int:
    """Smallest N with lam^(N+1) / (2(1-lam)) <= tol."""
    bound = tol * 2.0 * (1.0 - lam)
    n = max(0, math.ceil(math.log(bound) / math.log(lam)) - 1)
    while lam ** (n + 1) / (2.0 * (1.0 - lam)) > tol:
        n += 1
    while n > 0 and lam ** n / (2.0 * (1.0 - lam)) <= tol:
        n -= 1
    return n


def evaluate(lam, x, tol: float = 1e-12):
    """(T(x), certified_error) with error <= tol; exact (error 0) at dyadic x.

    ``x`` may be a float (itself a dyadic rational) or an exact
    ``Fraction``/int, doubled in integer arithmetic. T is only Hoelder
    continuous, so T(float(1/3)) and T(1/3) can differ far more than the
    input rounding; pass Fraction(1, 3) for the latter.
    """
    lam = check_lambda(lam)
    if not tol > 0.0:
        raise OutOfDomain("tol must be positive")
    if isinstance(x, (Fraction, int)):
        p, q = Fraction(x).numerator, Fraction(x).denominator
    else:
        p, q = float(x).as_integer_ratio()
    if not 0 <= p <= q:
        raise OutOfDomain(f"x must lie in [0, 1], got {x!r}")
    n_max = terms_needed(lam, tol)
    f = p % q
    terms = []
    weight = 1.0
    for _ in range(n_max + 1):
        if f == 0:
            return math.fsum(terms), 0.0
        terms.append(weight * (min(f, q - f) / q))
        weight *= lam
        f = (2 * f) % q
    if f == 0:
        return math.fsum(terms), 0.0
    return math.fsum(terms), lam ** (n_max + 1) / (2.0 * (1.0 - lam))


def parse_x(text: str):
    """Decimal or rational ``p/q``; rationals stay exact."""
    try:
        return Fraction(text.strip()) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise OutOfDomain(f"cannot parse x {text!r}") from None


def eval_array(lam, x, tol: float = 1e-12) -> np.ndarray:
    """Vectorised T on an array; exact at dyadics whose last digit falls within the truncation."""
    lam = check_lambda(lam)
    frac = np.mod(np.asarray(x, dtype=float), 1.0)
    total = np.zeros_like(frac)
    weight = 1.0
    for _ in range(terms_needed(lam, tol) + 1):
        total += weight * np.minimum(frac, 1.0 - frac)
        weight *= lam
        frac = np.mod(2.0 * frac, 1.0)
        if not frac.any():
            break
    return total


def graph_samples(lam, n: int) -> np.ndarray:
    """Points (k/2^n, T(k/2^n)) for k = 0..2^n, exact at these dyadics."""
    lam = check_lambda(lam)
    if not 0 <= n <= 24:
        raise OutOfRange("graph sampling depth must be in 0..24")
    k = np.arange(2 ** n + 1, dtype=np.int64)
    x = k / float(2 ** n)
    y = np.zeros_like(x)
    weight = 1.0
    for j in range(n):
        # 2^j x mod 1 = (k 2^j mod 2^n) / 2^n, all exact in int64
        r = (k << j) & (2 ** n - 1)
        y += weight * np.minimum(r, 2 ** n - r) / float(2 ** n)
        weight *= lam
    return np.stack([x, y], axis=1)


# ------------------------------------------------------------------ IFS ---

@dataclass(frozen=True)
class GraphHull:
    kind: str
    polygon: ConvexPolygon


def graph_hull(lam, kind: str = "box") -> GraphHull:
    """Convex region containing the graph: the box [0,1]x[0,M] or the box cut by y <= x + lam M, y <= 1 - x + lam M."""
    lam = check_lambda(lam)
    m = 1.0 / (3.0 * (1.0 - lam))
    if kind == "box":
        return GraphHull(kind, ConvexPolygon.box(0.0, 1.0, 0.0, m))
    if kind == "pentagon":
        # the cuts meet y = M at x = M(1 - lam) = 1/3 and 2/3
        pts = [(0.0, 0.0), (1.0, 0.0), (1.0, lam * m), (2.0 / 3.0, m), (1.0 / 3.0, m), (0.0, lam * m)]
        return GraphHull(kind, ConvexPolygon(pts))
    raise OutOfRange(f"hull kind must be 'box' or 'pentagon', got {kind!r}")


def takagi_ifs(lam, hull: str = "box", extra_witnesses: bool = False) -> AffineIFS:
    """phi_1(x, y) = (x/2, x/2 + lam y), phi_2(x, y) = (x/2 + 1/2, 1/2 - x/2 + lam y).

    The graph endpoints (0,0), (1,0) are the witnesses; ``extra_witnesses``
    adds the maximiser (1/3, M) and (1/2, 1/2), which lie on the graph too.
    """
    lam = check_lambda(lam)
    maps = (
        AffineMap2(Mat2(0.5, 0.0, 0.5, lam), Vec2(0.0, 0.0)),
        AffineMap2(Mat2(0.5, 0.0, -0.5, lam), Vec2(0.5, 0.5)),
    )
    m = 1.0 / (3.0 * (1.0 - lam))
    wits = [(0.0, 0.0), (1.0, 0.0)]
    if extra_witnesses:
        wits += [(1.0 / 3.0, m), (0.5, 0.5)]
    gh = graph_hull(lam, hull)
    ifs = AffineIFS(maps, gh.polygon, ASSERTED, wits, label="takagi", params={"lambda": lam, "hull": hull})
    if verify_invariant_enclosure(ifs, gh.polygon, 0.0):
        ifs = ifs.with_enclosure(gh.polygon, VERIFIED)
    return ifs


def _digits(w) -> tuple:
    if isinstance(w, str):
        w = Word.parse(w, 2)
    elif not isinstance(w, Word):
        w = Word(tuple(w), 2)
    if w.alphabet_size != 2:
        raise OutOfRange("Takagi words use the digits 1 and 2")
    return w.digits


def word_matrix(lam, w) -> Mat2:
    """Closed form of A_{i1}...A_{in}: lower triangular with diagonal (2^-n, lam^n)."""
    lam = check_lambda(lam)
    d = _digits(w)
    n = len(d)
    # digit index 0 is the symbol 1, carrying sign +
    off = math.fsum((1.0 if d[n - k] == 0 else -1.0) * 2.0 ** -k * lam ** (n - k) for k in range(1, n + 1))
    return Mat2(2.0 ** -n, 0.0, off, lam ** n)


def inverse_reversed_matrix(lam, w) -> Mat2:
    """Closed form of (A_{in}...A_{i1})^{-1}, diagonal (2^n, lam^-n)."""
    lam = check_lambda(lam)
    d = _digits(w)
    n = len(d)
    off = math.fsum((-1.0 if d[k - 1] == 0 else 1.0) * 2.0 ** (n - k) * lam ** -k for k in range(1, n + 1))
    return Mat2(2.0 ** n, 0.0, off, lam ** -n)


def pullback_slope(lam, w, t: float) -> float:
    """t_w = sum_k (-1)^{i_k} (2 lam)^{-k} + (2 lam)^{-n} t, the slope of A^{-1}_{reversed w}(1, t)."""
    lam = check_lambda(lam)
    d = _digits(w)
    q = 1.0 / (2.0 * lam)
    s = math.fsum((-1.0 if di == 0 else 1.0) * q ** k for k, di in enumerate(d, start=1))
    tw = s + q ** len(d) * t
    bound = max(1.0 / (2.0 * lam - 1.0), abs(t))
    if abs(tw) > bound * (1.0 + 1e-12) + 1e-12:
        raise AssertionError(f"pull-back slope {tw} exceeds max(K, |t|) = {bound}")
    return tw
