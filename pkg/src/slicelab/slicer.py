"""Certified slice censuses: which depth-n cylinders meet a line or a strip.

Every cylinder is classified three ways against the target (Empty, Possible,
Definite). Empty is certified by the cylinder hull lying strictly on one side;
Definite is certified by a path-connected piece of the cylinder having
witness points strictly on both sides (or a witness inside the strip).
``definite`` and ``possible`` bracket the true census from below and above.

Classification follows the word chain: a word is Empty as soon as some
prefix hull is Empty, and lies inside a strip as soon as some prefix hull
does. This is what the pruned walk computes, and it is sound because every
cylinder sits inside the hulls of all its prefixes.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import kernels
from .errors import DegenerateHull, DepthTooLarge, InsufficientData, OutOfRange, ValidationError
from .ifs import AffineIFS, ConvexPolygon
from .linalg2 import Vec2
from . import takagi as tk

MAX_DEPTH = 26


# ------------------------------------------------------------- targets ----

@dataclass(frozen=True)
class Line:
    """y = t (x - px) + py for finite t, or x = px when ``vertical``."""
    t: float
    point: Vec2
    vertical: bool = False

    def __post_init__(self):
        if not self.vertical and not math.isfinite(self.t):
            raise ValidationError("sloped lines need a finite slope; use Line.vertical_at")
        object.__setattr__(self, "point", Vec2(float(self.point[0]), float(self.point[1])))

    @classmethod
    def sloped(cls, t: float, point) -> "Line":
        return cls(float(t), point)

    @classmethod
    def with_intercept(cls, t: float, b: float) -> "Line":
        return cls(float(t), Vec2(0.0, float(b)))

    @classmethod
    def vertical_at(cls, x0: float) -> "Line":
        return cls(math.inf, Vec2(float(x0), 0.0), vertical=True)

    @property
    def intercept(self) -> float:
        if self.vertical:
            raise ValidationError("vertical lines have no intercept")
        return self.point.y - self.t * self.point.x

    def normal_form(self):
        """(unit normal, c) with the line equal to {p : normal . p = c}."""
        if self.vertical:
            return (1.0, 0.0), self.point.x
        h = math.hypot(self.t, 1.0)
        nx, ny = self.t / h, -1.0 / h
        return (nx, ny), (self.t * self.point.x - self.point.y) / h


@dataclass(frozen=True)
class Strip:
    line: Line
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius >= 0.0):
            raise ValidationError("strip radius must be finite and nonnegative")


Target = Union[Line, Strip]


def _target_parts(target: Target):
    if isinstance(target, Strip):
        return target.line, float(target.radius)
    if isinstance(target, Line):
        return target, 0.0
    raise ValidationError("target must be a Line or a Strip")


def default_slack(c: float, enclosure: ConvexPolygon) -> float:
    return 1e-9 * (1.0 + abs(c) + enclosure.diameter())


# ------------------------------------------------------ classification ----

class Verdict(enum.Enum):
    EMPTY = "empty"
    POSSIBLE = "possible"
    DEFINITE = "definite"


def classify_cylinder(hull: ConvexPolygon, endpoints, target: Target, slack: float | None = None) -> Verdict:
    """Three-way certified test of one cylinder against a line or strip.

    ``endpoints`` are points of a connected piece of the cylinder (the graph
    piece's ends for Takagi); they must lie in the hull.
    """
    pts = np.asarray(endpoints, dtype=float).reshape(-1, 2)
    if len(pts) < 1:
        raise DegenerateHull("need at least one witness point")
    for p in pts:
        if not hull.contains(p, margin=-1e-9):
            raise DegenerateHull(f"witness {tuple(p)} is outside the hull")
    line, r = _target_parts(target)
    (nx, ny), c = line.normal_form()
    eps = default_slack(c, hull) if slack is None else float(slack)
    g = hull.vertices @ np.array([nx, ny]) - c
    if g.min() > r + eps or g.max() < -(r + eps):
        return Verdict.EMPTY
    w = pts @ np.array([nx, ny]) - c
    if (w.min() < -eps and w.max() > eps) or np.abs(w).min() < r - eps:
        return Verdict.DEFINITE
    return Verdict.POSSIBLE


# -------------------------------------------------------------- census ----

@dataclass(frozen=True)
class SliceCensus:
    """Counts at ``depth``; the per-level arrays hold every level 0..depth of the same walk."""
    depth: int
    definite: int
    possible: int
    visited_nodes: int
    definite_levels: np.ndarray = field(repr=False)
    possible_levels: np.ndarray = field(repr=False)
    inside_levels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.definite <= self.possible:
            raise AssertionError(f"census violates 0 <= definite <= possible: {self.definite}, {self.possible}")

    @property
    def inside(self) -> int:
        return int(self.inside_levels[self.depth])

    def level(self, k: int) -> "SliceCensus":
        if not 0 <= k <= self.depth:
            raise OutOfRange(f"level {k} outside 0..{self.depth}")
        return SliceCensus(k, int(self.definite_levels[k]), int(self.possible_levels[k]), self.visited_nodes,
                           self.definite_levels[:k + 1], self.possible_levels[:k + 1], self.inside_levels[:k + 1])

    def as_dict(self) -> dict:
        return {"n": self.depth, "definite": self.definite, "possible": self.possible, "visited": self.visited_nodes}


def as_system(system, hull: str = "box", extra_witnesses: bool = False) -> AffineIFS:
    """An AffineIFS as is, or the Takagi IFS for a lambda value."""
    if isinstance(system, AffineIFS):
        return system
    return tk.takagi_ifs(system, hull, extra_witnesses)


def _root_count(system: AffineIFS, line: Line, r: float, eps: float, inside: bool = False) -> int:
    (nx, ny), c = line.normal_form()
    g = system.enclosure.vertices @ np.array([nx, ny]) - c
    if inside:
        return int(g.min() > -(r - eps) and g.max() < r - eps)
    return int(not (g.min() > r + eps or g.max() < -(r + eps)))


def _vertical_takagi(x0: float, n: int):
    """Dyadic cylinders whose x-range [k 2^-n, (k+1) 2^-n] contains x0, per level."""
    counts = np.zeros(n + 1, np.int64)
    if not 0.0 <= x0 <= 1.0:
        return counts
    counts[0] = 1
    for k in range(1, n + 1):
        s = x0 * 2.0 ** k
        lo = math.floor(s)
        hits = {min(lo, 2 ** k - 1)}
        if s == lo and 0 < lo < 2 ** k:
            hits.add(lo - 1)
        counts[k] = len(hits)
    return counts


def slice_census(system, target: Target, depth: int, hull: str = "box", slack: float | None = None,
                 extra_witnesses: bool = False, threads: int = 1, use_numba=None) -> SliceCensus:
    """Certified census of depth-``depth`` cylinders meeting ``target``.

    ``system`` is an AffineIFS or a Takagi lambda. Vertical lines through a
    Takagi graph are answered in closed form (1 or 2 cylinders per level).
    """
    if not 0 <= depth <= MAX_DEPTH:
        raise DepthTooLarge(f"depth must be in 0..{MAX_DEPTH}")
    ifs = as_system(system, hull, extra_witnesses)
    line, r = _target_parts(target)
    if line.vertical and ifs.label == "takagi" and r == 0.0:
        counts = _vertical_takagi(line.point.x, depth)
        return SliceCensus(depth, int(counts[depth]), int(counts[depth]), int(counts.sum()),
                           counts, counts.copy(), np.zeros_like(counts))
    normal, c = line.normal_form()
    eps = default_slack(c, ifs.enclosure) if slack is None else float(slack)
    lin, trans = ifs.packed()
    d, p, s, visited = kernels.census(lin, trans, ifs.enclosure.vertices, ifs.witnesses, normal, c, r, eps,
                                      depth, threads=threads, use_numba=use_numba)
    p[0] = _root_count(ifs, line, r, eps)
    s[0] = _root_count(ifs, line, r, eps, inside=True)
    d[0] = p[0]
    return SliceCensus(depth, int(d[depth]), int(p[depth]), visited, d, p, s)


def brute_force_census(system, target: Target, depth: int, hull: str = "box", slack: float | None = None,
                       extra_witnesses: bool = False) -> tuple:
    """Unpruned oracle: classify every word of length ``depth`` along its prefix chain.

    Returns ``(definite, possible)``. Cost is N**depth cylinders times depth.
    """
    from .ifs import all_products
    ifs = as_system(system, hull, extra_witnesses)
    line, r = _target_parts(target)
    (nx, ny), c = line.normal_form()
    eps = default_slack(c, ifs.enclosure) if slack is None else float(slack)
    lin, trans = ifs.packed()
    N = ifs.N
    maps = kernels.IDENTITY[None, :]
    empty = np.zeros(1, bool)
    inside = np.zeros(1, bool)
    definite = np.zeros(1, bool)
    for _ in range(depth):
        maps = kernels._expand(maps, lin, trans)
        # _expand is generator-major; carry the prefix flags the same way
        empty = np.tile(empty, N)
        inside = np.tile(inside, N)
        g = kernels._signed(maps, ifs.enclosure.vertices, nx, ny, c)
        e_now = (g.min(axis=1) > r + eps) | (g.max(axis=1) < -(r + eps))
        i_now = (g.min(axis=1) > -(r - eps)) & (g.max(axis=1) < r - eps)
        empty = empty | (e_now & ~inside)
        inside = inside | (i_now & ~empty)
    if depth == 0:
        poss = _root_count(ifs, line, r, eps)
        return poss, poss
    w = kernels._signed(maps, ifs.witnesses, nx, ny, c) if len(ifs.witnesses) else np.zeros((len(maps), 0))
    if w.shape[1]:
        definite = (w.min(axis=1) < -eps) & (w.max(axis=1) > eps) | (np.abs(w).min(axis=1) < r - eps)
    else:
        definite = np.zeros(len(maps), bool)
    live = ~empty
    return int((live & (inside | definite)).sum()), int(live.sum())


# ------------------------------------------------------------- slopes -----

@dataclass(frozen=True)
class MinkowskiEstimate:
    lower: float
    upper: float
    lower_residual: float
    upper_residual: float


def _fit(n, counts):
    keep = counts > 0
    if keep.sum() < 2:
        return 0.0, 0.0
    x, y = n[keep].astype(float), np.log2(counts[keep].astype(float))
    # centred normal equations: constant counts give slope exactly 0
    dx, dy = x - x.mean(), y - y.mean()
    slope = float(dx @ dy / (dx @ dx))
    res = dy - slope * dx
    return float(slope), float(np.sqrt(np.mean(res ** 2)))


def minkowski_slope(censuses: Sequence[SliceCensus]) -> MinkowskiEstimate:
    """Least-squares slopes of log2(definite) and log2(possible) against depth.

    Zero counts are omitted; fewer than two nonzero counts give slope 0.
    """
    if len(censuses) < 3:
        raise InsufficientData("need censuses at three or more depths")
    n = np.array([c.depth for c in censuses])
    if np.any(np.diff(np.sort(n)) != 1):
        raise InsufficientData("census depths must be consecutive")
    lo, lo_res = _fit(n, np.array([c.definite for c in censuses]))
    up, up_res = _fit(n, np.array([c.possible for c in censuses]))
    return MinkowskiEstimate(lo, up, lo_res, up_res)


def census_slopes(census: SliceCensus, n0: int, n1: int | None = None) -> MinkowskiEstimate:
    n1 = census.depth if n1 is None else n1
    return minkowski_slope([census.level(k) for k in range(n0, n1 + 1)])


# ----------------------------------------------------------- bad words ----

@dataclass(frozen=True)
class BadTally:
    depth: int
    c: float
    radius: float
    bad: np.ndarray            # index k = level the word first left the line census
    line_possible: np.ndarray  # possible line census per level
    strip_possible: int
    visited_nodes: int

    def __post_init__(self):
        if int(self.bad.sum()) != self.strip_possible - int(self.line_possible[self.depth]):
            raise AssertionError("bad-word tally does not balance against the censuses")

    def ratios(self) -> np.ndarray:
        """bad_k / possible_k(line) for k = 1..depth (inf where the line census is empty)."""
        b = self.bad[1:].astype(float)
        p = self.line_possible[1:].astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(p > 0, b / np.where(p > 0, p, 1.0), np.where(b > 0, np.inf, 0.0))

    def as_dict(self) -> dict:
        return {"n": self.depth, "c": self.c, "radius": self.radius, "bad": self.bad[1:].tolist(),
                "line_possible": self.line_possible[1:].tolist(), "strip_possible": self.strip_possible,
                "ratios": self.ratios().tolist(), "visited": self.visited_nodes}


def strip_constant(lam) -> float:
    p = tk.constants(lam)
    return math.sqrt(2.0) * (p.k_lambda + p.m_lambda)


def bad_word_tally(lam, line: Line, depth: int, hull: str = "box", radius: float | None = None,
                   slack: float | None = None, use_numba=None) -> BadTally:
    """Histogram of words meeting the strip of radius c lam^n but not the line, by first level left."""
    if not 0 <= depth <= 22:
        raise DepthTooLarge("bad-word depth must be in 0..22")
    if line.vertical:
        raise ValidationError("bad-word tallies are defined for non-vertical lines")
    c = strip_constant(lam)
    rad = c * tk.check_lambda(lam) ** depth if radius is None else float(radius)
    ifs = tk.takagi_ifs(lam, hull)
    normal, off = line.normal_form()
    eps = default_slack(off, ifs.enclosure) if slack is None else float(slack)
    lin, trans = ifs.packed()
    bad, lp, leaves, visited = kernels.bad_words(lin, trans, ifs.enclosure.vertices, normal, off, rad, eps,
                                                 depth, use_numba=use_numba)
    lp[0] = _root_count(ifs, line, 0.0, eps)
    return BadTally(depth, c, rad, bad, lp, leaves, visited)


# ---------------------------------------------------------- bound check ---

@dataclass(frozen=True)
class BoundRow:
    k: int
    depth: int
    definite: int
    possible: int
    bound: int

    @property
    def ok(self) -> bool:
        return self.definite <= self.bound

    @property
    def possible_ok(self) -> bool:
        return self.possible <= self.bound


def count_bound_check(lam, line: Line, k_max: int, hull: str = "box", slack: float | None = None,
                      use_numba=None) -> list:
    """definite census at depth k n_lam against (2^n_lam - 1)^k for k = 1..k_max."""
    n_lam = tk.constants(lam).n_lambda
    if k_max < 1 or k_max * n_lam > 24:
        raise DepthTooLarge(f"need 1 <= k_max and k_max * n_lambda <= 24 (n_lambda = {n_lam})")
    census = slice_census(lam, line, k_max * n_lam, hull=hull, slack=slack, use_numba=use_numba)
    rows = []
    for k in range(1, k_max + 1):
        lv = census.level(k * n_lam)
        rows.append(BoundRow(k, k * n_lam, lv.definite, lv.possible, (2 ** n_lam - 1) ** k))
    return rows


# ---------------------------------------------------------------- scan ----

@dataclass(frozen=True)
class ScanRow:
    slope: float
    offset: float
    definite_dim: float
    possible_dim: float
    definite_n: int
    possible_n: int


@dataclass(frozen=True)
class ScanResult:
    rows: list

    @property
    def max_possible_dim(self) -> float:
        return max((r.possible_dim for r in self.rows), default=0.0)

    @property
    def max_definite_dim(self) -> float:
        return max((r.definite_dim for r in self.rows), default=0.0)


def graph_offsets(lam, slope: float, xs) -> list:
    """Intercepts b so that y = slope x + b passes through (x, T(x))."""
    return [tk.evaluate(lam, x, 1e-15)[0] - slope * x for x in xs]


def scan_cell(lam, slope: float, offset: float, depth: int, n0: int, hull: str = "box",
              slack: float | None = None, use_numba=None) -> ScanRow:
    census = slice_census(lam, Line.with_intercept(slope, offset), depth, hull=hull, slack=slack,
                          use_numba=use_numba)
    est = census_slopes(census, n0, depth)
    return ScanRow(float(slope), float(offset), est.lower, est.upper, census.definite, census.possible)


def scan_max_slice(lam, cells, depth: int, n0: int | None = None, hull: str = "box",
                   slack: float | None = None, threads: int = 1, use_numba=None) -> ScanResult:
    """Minkowski slope estimates for each (slope, offset) cell, in cell order.

    ``cells`` is a sequence of (slope, intercept) pairs. Slopes are regressed
    over depths n0..depth (default: the upper half of the range).
    """
    tk.check_lambda(lam)
    if n0 is None:
        n0 = max(1, depth // 2 + 1)
    if depth - n0 < 2:
        raise InsufficientData("the regression window needs at least three depths")
    cells = [(float(t), float(b)) for t, b in cells]
    for t, _ in cells:
        if not math.isfinite(t):
            raise ValidationError(
                "vertical slices are excluded: a graph meets a vertical line in one point "
                "(use slice census --vertical for the closed form)")

    def run(cell):
        return scan_cell(lam, cell[0], cell[1], depth, n0, hull, slack, use_numba)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, cells))
    else:
        rows = [run(cell) for cell in cells]
    return ScanResult(rows)


def slope_grid(lo: float, hi: float, step: float) -> list:
    if step <= 0:
        raise ValidationError("grid step must be positive")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(count)]
