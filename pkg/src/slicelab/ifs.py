"""Planar affine iterated function systems.

Cylinder maps and hulls, invariant enclosures, domination diagnostics,
Furstenberg-direction enclosures, the bounded-neighbourhood probe, the
singular-value pressure, and the three-map fixture with a quadrant tangent
(``example3_ifs``).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConeNotInvariant, DegenerateHull, OutOfRange, ValidationError
from .linalg2 import (
    PI, Mat2, MultiCone, ProjInterval, Vec2, cone_strictly_maps_into, image_interval, svd2,
    svd2_batch,
)
from .words import Word

VERIFIED = "verified-invariant"
ASSERTED = "asserted-external"


# ----------------------------------------------------------- polygons -----

class ConvexPolygon:
    """Convex polygon with counterclockwise vertices (a 2-vertex segment is allowed)."""

    __slots__ = ("vertices",)

    def __init__(self, vertices, allow_segment: bool = False):
        v = np.array(vertices, dtype=float).reshape(-1, 2)
        if len(v) < 2 or (len(v) == 2 and not allow_segment):
            raise DegenerateHull("need at least three vertices")
        if len(v) >= 3:
            area = _signed_area(v)
            if area < 0.0:
                v = v[::-1].copy()
                area = -area
            if area <= 0.0 and not allow_segment:
                raise DegenerateHull("polygon has zero area")
            if not _is_convex(v):
                raise DegenerateHull("polygon is not convex")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __setattr__(self, name, value):
        raise AttributeError("ConvexPolygon is immutable")

    @classmethod
    def box(cls, x0, x1, y0, y1) -> "ConvexPolygon":
        return cls([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])

    def area(self) -> float:
        return abs(_signed_area(self.vertices)) if len(self.vertices) >= 3 else 0.0

    def diameter(self) -> float:
        v = self.vertices
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    def centroid(self) -> Vec2:
        return Vec2(*self.vertices.mean(axis=0))

    def contains(self, p, margin: float = 0.0) -> bool:
        """p lies inside with distance >= margin from every edge (margin may be negative)."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        rel = np.asarray(p, dtype=float) - v
        cross = e[:, 0] * rel[:, 1] - e[:, 1] * rel[:, 0]
        return bool(np.all(cross / np.hypot(e[:, 0], e[:, 1]) >= margin))

    def distance_to(self, p) -> float:
        return float(polygon_point_distance(self.vertices[None], np.asarray(p, dtype=float))[0])

    def __repr__(self):
        return f"ConvexPolygon({self.vertices.tolist()!r})"


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _is_convex(v, tol=1e-12):
    e = np.roll(v, -1, axis=0) - v
    f = np.roll(e, -1, axis=0)
    cross = e[:, 0] * f[:, 1] - e[:, 1] * f[:, 0]
    scale = max(1.0, float(np.abs(v).max())) ** 2
    return bool(np.all(cross >= -tol * scale))


def polygon_point_distance(polys, p):
    """Distance from point ``p`` to each convex polygon in ``polys`` (m, V, 2); 0 inside.

    Works for either vertex orientation.
    """
    v = polys
    w = np.roll(v, -1, axis=1)
    e = w - v
    rel = p - v
    cross = e[..., 0] * rel[..., 1] - e[..., 1] * rel[..., 0]
    inside = np.all(cross >= 0.0, axis=1) | np.all(cross <= 0.0, axis=1)
    ee = (e ** 2).sum(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.clip(np.where(ee > 0, (rel * e).sum(-1) / ee, 0.0), 0.0, 1.0)
    closest = v + t[..., None] * e
    dist = np.sqrt(((p - closest) ** 2).sum(-1)).min(axis=1)
    return np.where(inside, 0.0, dist)


# -------------------------------------------------------------- maps ------

@dataclass(frozen=True)
class AffineMap2:
    linear: Mat2
    translation: Vec2

    def __post_init__(self):
        if abs(self.linear.det()) <= 1e-14:
            raise ValidationError("affine map needs an invertible linear part (|det| > 1e-14)")

    @classmethod
    def identity(cls) -> "AffineMap2":
        return cls(Mat2.identity(), Vec2(0.0, 0.0))

    def __call__(self, p) -> Vec2:
        return self.linear.apply(p) + self.translation

    def compose(self, other: "AffineMap2") -> "AffineMap2":
        """self o other."""
        return _unchecked_map(self.linear @ other.linear, self(other.translation))

    def row(self) -> np.ndarray:
        return np.array(self.linear.flat() + tuple(self.translation))


def _unchecked_map(linear: Mat2, translation) -> AffineMap2:
    # deep compositions can have tiny determinants; skip the generator check
    m = object.__new__(AffineMap2)
    object.__setattr__(m, "linear", linear)
    object.__setattr__(m, "translation", Vec2(*translation))
    return m


@dataclass(frozen=True)
class AffineIFS:
    """An IFS with a convex enclosure of its attractor.

    ``witnesses`` are points of the attractor lying in one path-connected
    piece of it; a cylinder whose witness images straddle a line is certain
    to meet that line. ``label`` tags special systems (``"takagi"``).
    """
    maps: tuple
    enclosure: ConvexPolygon
    certificate: str = ASSERTED
    witnesses: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    label: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.maps) < 2:
            raise ValidationError("an IFS needs at least two maps")
        if self.certificate not in (VERIFIED, ASSERTED):
            raise ValidationError(f"unknown certificate {self.certificate!r}")
        w = np.array(self.witnesses, dtype=float).reshape(-1, 2)
        for p in w:
            if not self.enclosure.contains(p, margin=-1e-9):
                raise ValidationError(f"witness {tuple(p)} lies outside the enclosure")
        object.__setattr__(self, "witnesses", w)

    @property
    def N(self) -> int:
        return len(self.maps)

    def packed(self):
        lin = np.array([m.linear.flat() for m in self.maps])
        trans = np.array([tuple(m.translation) for m in self.maps])
        return kernels.pack_maps(lin, trans)

    def with_enclosure(self, enclosure: ConvexPolygon, certificate: str) -> "AffineIFS":
        return AffineIFS(self.maps, enclosure, certificate, self.witnesses, self.label, self.params)

    def base_point(self) -> Vec2:
        """Fixed point of the first map."""
        m = self.maps[0]
        a = Mat2(1.0 - m.linear.a11, -m.linear.a12, -m.linear.a21, 1.0 - m.linear.a22)
        return a.inverse().apply(m.translation)

    # -- JSON ------------------------------------------------------------
    def to_json_obj(self) -> dict:
        return {
            "maps": [{"A": m.linear.rows(), "b": list(m.translation)} for m in self.maps],
            "enclosure": self.enclosure.vertices.tolist(),
            "certificate": self.certificate,
            "witnesses": self.witnesses.tolist(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "AffineIFS":
        try:
            maps = tuple(AffineMap2(Mat2.from_rows(m["A"]), Vec2(*map(float, m["b"]))) for m in obj["maps"])
            enclosure = ConvexPolygon(obj["enclosure"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed IFS JSON: {exc}") from None
        ifs = cls(maps, enclosure, ASSERTED, obj.get("witnesses", []))
        cert = obj.get("certificate")
        if cert == ASSERTED:
            return ifs
        if not verify_invariant_enclosure(ifs, enclosure, 0.0):
            raise ValidationError(
                "enclosure is not invariant; mark it \"certificate\": \"asserted-external\" if justified otherwise")
        return ifs.with_enclosure(enclosure, VERIFIED)

    @classmethod
    def load(cls, path) -> "AffineIFS":
        with open(path) as fh:
            return cls.from_json_obj(json.load(fh))


def _as_word(ifs: AffineIFS, w) -> Word:
    if isinstance(w, str):
        w = Word.parse(w, ifs.N)
    elif not isinstance(w, Word):
        w = Word(tuple(w), ifs.N)
    for d in w.digits:
        if d >= ifs.N:
            raise OutOfRange(f"digit {d + 1} exceeds the {ifs.N} maps")
    return w


def cylinder_map(ifs: AffineIFS, w) -> AffineMap2:
    """phi_{i1} o ... o phi_{in}; the empty word gives the identity."""
    w = _as_word(ifs, w)
    out = AffineMap2.identity()
    for d in w.digits:
        out = out.compose(ifs.maps[d])
    return out


def cylinder_hull(ifs: AffineIFS, w) -> ConvexPolygon:
    """Image of the enclosure under the cylinder map; contains phi_w(X)."""
    m = cylinder_map(ifs, w)
    pts = [tuple(m(p)) for p in ifs.enclosure.vertices]
    return ConvexPolygon(pts, allow_segment=True)


def verify_invariant_enclosure(ifs: AffineIFS, p: ConvexPolygon, margin: float = 0.0) -> bool:
    """True iff phi_i(p) is inside p for every map, which certifies attractor <= p."""
    for m in ifs.maps:
        for v in p.vertices:
            if not p.contains(m(v), margin=margin - 1e-15):
                return False
    return True


def all_products(lin: np.ndarray, n: int) -> np.ndarray:
    """Flattened products A_{i1}...A_{in} for all words, lexicographic, shape (N**n, 4)."""
    out = np.array([[1.0, 0.0, 0.0, 1.0]])
    for _ in range(n):
        a, b, c, d = (out[:, None, k] for k in range(4))
        out = np.stack([
            a * lin[:, 0] + b * lin[:, 2], a * lin[:, 1] + b * lin[:, 3],
            c * lin[:, 0] + d * lin[:, 2], c * lin[:, 1] + d * lin[:, 3],
        ], axis=-1).reshape(-1, 4)
    return out


# --------------------------------------------------------- domination -----

@dataclass(frozen=True)
class DominationReport:
    max_ratio: np.ndarray  # index k = word length, entry 0 is 1

    def decay_rate(self):
        """Least-squares (tau, C) with max_ratio[k] ~ C * tau**k over k >= 1."""
        k = np.arange(1, len(self.max_ratio))
        if len(k) < 2:
            raise ValidationError("need at least two levels")
        slope, icpt = np.polyfit(k, np.log(self.max_ratio[1:]), 1)
        return math.exp(slope), math.exp(icpt)


def domination_report(ifs: AffineIFS, n: int, use_numba=None) -> DominationReport:
    if n > 22:
        raise OutOfRange("domination_report is exhaustive; depth must be <= 22")
    lin, _ = ifs.packed()
    return DominationReport(kernels.level_ratio_max(lin, n, use_numba=use_numba))


# ------------------------------------------------------- Furstenberg ------

def furstenberg_enclosure(ifs: AffineIFS, seed: MultiCone, n: int, direction: str = "backward") -> MultiCone:
    """Depth-n outer enclosure of the backward (X_F) or forward (Y_F) directions.

    backward: union over words of length n of A^{-1}_{reversed w}(seed), built
    level by level as U <- union_j A_j^{-1} U; forward: U <- union_j A_j U.
    """
    if direction not in ("backward", "forward"):
        raise ValidationError("direction must be 'backward' or 'forward'")
    mats = [m.linear for m in ifs.maps]
    if direction == "backward":
        mats = [a.inverse() for a in mats]
    cone = seed
    for _ in range(n):
        images = []
        for a in mats:
            for iv in cone:
                img = image_interval(a, iv)
                if not seed.contains_interval(img, -1e-12):
                    raise ConeNotInvariant(f"image {img!r} escapes the seed cone")
                images.append(img)
        cone = MultiCone(images)
    return cone


def is_strongly_invariant(ifs: AffineIFS, cone: MultiCone, margin: float, direction: str = "forward") -> bool:
    mats = [m.linear for m in ifs.maps]
    if direction == "backward":
        mats = [a.inverse() for a in mats]
    return all(cone_strictly_maps_into(a, cone, cone, margin) for a in mats)


# --------------------------------------------------------------- WBNC -----

def _wbnc_walk(ifs: AffineIFS, x, r: float, node_budget: int):
    """Yield (rows, alpha2) for every word in the scale window r whose hull meets B(x, r)."""
    lin, trans = ifs.packed()
    verts = ifs.enclosure.vertices
    x = np.asarray(x, dtype=float)
    frontier = kernels.IDENTITY[None, :].copy()
    visited = 0
    while frontier.shape[0]:
        kids = kernels._expand(frontier, lin, trans)
        visited += kids.shape[0]
        if visited > node_budget:
            raise ValidationError(f"wbnc probe exceeded {node_budget} nodes; use a larger r")
        _, a2 = svd2_batch(kids[:, :4])
        polys = _hull_points(kids, verts)
        near = polygon_point_distance(polys, x) <= r
        hit = near & (a2 <= r)
        yield kids[hit]
        frontier = kids[near & (a2 > r)]


def wbnc_probe(ifs: AffineIFS, x, r: float, node_budget: int = 5_000_000) -> int:
    """Upper count of Phi(x, r): words with alpha2(A_w) <= r < alpha2(A_parent) whose hull meets B(x, r)."""
    if not 0.0 < r:
        raise ValidationError("r must be positive")
    if r >= 1.0:
        return 0
    return int(sum(rows.shape[0] for rows in _wbnc_walk(ifs, x, r, node_budget)))


def wbnc_witness(ifs: AffineIFS, x, r: float, tol: float = 1e-13, node_budget: int = 5_000_000) -> int:
    """Lower count of Phi(x, r): window words whose cylinder map fixes ``x`` (so x is in the cylinder).

    Sound only when ``x`` is a point of the attractor.
    """
    if r >= 1.0:
        return 0
    x = np.asarray(x, dtype=float)
    total = 0
    for rows in _wbnc_walk(ifs, x, r, node_budget):
        img = _hull_points(rows, x[None])[:, 0, :]
        total += int((np.abs(img - x).max(axis=1) <= tol).sum()) if rows.shape[0] else 0
    return total


def _hull_points(rows, pts):
    a, b, c, d, tx, ty = (rows[:, k:k + 1] for k in range(6))
    x = a * pts[:, 0] + b * pts[:, 1] + tx
    y = c * pts[:, 0] + d * pts[:, 1] + ty
    return np.stack([x, y], axis=-1)


# ------------------------------------------------------------ pressure ----

@dataclass(frozen=True)
class PressureCurve:
    s_grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    depth: int


def singular_value_function(alpha1, alpha2, s: float):
    """phi^s for arrays of singular values (three-branch definition)."""
    alpha1 = np.asarray(alpha1, dtype=float)
    alpha2 = np.asarray(alpha2, dtype=float)
    if s <= 1.0:
        return alpha1 ** s
    if s <= 2.0:
        return alpha1 * alpha2 ** (s - 1.0)
    return (alpha1 * alpha2) ** (0.5 * s)


def _log_phi(log_a1, log_a2, s):
    if s <= 1.0:
        return s * log_a1
    if s <= 2.0:
        return log_a1 + (s - 1.0) * log_a2
    return 0.5 * s * (log_a1 + log_a2)


class _PressureData:
    def __init__(self, ifs: AffineIFS, n: int):
        if n > 18:
            raise OutOfRange("pressure enumeration is exhaustive; depth must be <= 18")
        if n < 1:
            raise OutOfRange("depth must be >= 1")
        lin, _ = ifs.packed()
        a1, a2 = svd2_batch(all_products(lin, n))
        self.n = n
        self.log_a1 = np.log(a1)
        self.log_a2 = np.log(a2)
        g1, g2 = svd2_batch(lin)
        self.log_cond = float(np.max(np.log(g1) - np.log(g2)))

    def upper(self, s):
        from scipy.special import logsumexp
        return float(logsumexp(_log_phi(self.log_a1, self.log_a2, s))) / self.n

    def lower(self, s):
        return self.upper(s) - s * self.log_cond / self.n


def pressure_curve(ifs: AffineIFS, s_grid: Sequence[float], n: int) -> PressureCurve:
    """Depth-n pressure enclosure.

    upper = (1/n) log sum_w phi^s(A_w), an upper bound for the limit by
    sub-multiplicativity; lower subtracts the distortion s log(max_i cond A_i) / n.
    """
    data = _PressureData(ifs, n)
    s = np.asarray(s_grid, dtype=float)
    up = np.array([data.upper(v) for v in s])
    lo = np.array([data.lower(v) for v in s])
    return PressureCurve(s, lo, up, n)


def _root(f, lo=0.0, hi=2.0, tol=5e-7):
    """Bracket [a, b] of the zero of a decreasing function on [lo, hi], clamped."""
    if f(hi) >= 0.0:
        return hi, hi
    if f(lo) <= 0.0:
        return lo, lo
    a, b = lo, hi
    while b - a > tol:
        m = 0.5 * (a + b)
        if f(m) > 0.0:
            a = m
        else:
            b = m
    return a, b


def affinity_dimension(ifs: AffineIFS, n: int):
    """Interval [s_lo, s_hi] bracketing the affinity dimension at depth n, within [0, 2]."""
    data = _PressureData(ifs, n)
    s_lo = _root(data.lower)[0]
    s_hi = _root(data.upper)[1]
    return s_lo, s_hi


# ------------------------------------------------------------ fixture -----

EX3_MATRICES = (
    ((1 / 3, 1 / 4), (0.0, 1 / 4)),
    ((1 / 4, 0.0), (1 / 4, 1 / 3)),
    ((1 / 3, 1 / 12), (1 / 4, 1 / 2)),
)
EX3_TRANSLATIONS = ((0.0, 0.0), (0.0, 0.0), (7 / 12, 1 / 4))
EX3_NORM_BOUND = 0.62
EX3_RESTRICTED_BOUND = 7 / 12 * math.sqrt(5 / 17)


def example3_ifs() -> AffineIFS:
    """Three maps on the unit square; the origin is fixed by maps 1 and 2."""
    maps = tuple(AffineMap2(Mat2.from_rows(a), Vec2(*b)) for a, b in zip(EX3_MATRICES, EX3_TRANSLATIONS))
    square = ConvexPolygon.box(0.0, 1.0, 0.0, 1.0)
    ifs = AffineIFS(maps, square, ASSERTED, [(0.0, 0.0), (1.0, 1.0)], label="example3")
    if not verify_invariant_enclosure(ifs, square, 0.0):  # pragma: no cover - fixture sanity
        raise AssertionError("unit square must be invariant")
    return ifs.with_enclosure(square, VERIFIED)


def cone_c(eps: float) -> MultiCone:
    """Cone bounded by <(1,-eps)> and <(-eps,1)> containing <(1,1)>."""
    t = math.atan(eps)
    return MultiCone([ProjInterval.from_angles(-t, 0.5 * PI + 2 * t)])


def cone_d0() -> MultiCone:
    """Cone bounded by <(3,-1)> and <(1,-3)> containing <(1,-1)>."""
    lo = PI - math.atan(3.0)
    return MultiCone([ProjInterval.from_angles(lo, math.atan(3.0) - math.atan(1 / 3))])


def _cone_samples(cone: MultiCone, k: int) -> np.ndarray:
    (iv,) = cone.intervals
    th = iv.start + np.linspace(0.0, iv.length, k)
    return np.stack([np.cos(th), np.sin(th)])


def example3_checks(samples: int = 10_000, eps: float = 0.05, margin: float = 1e-3) -> dict:
    """Desk checks of the norm bounds, the square invariance and cone invariance."""
    ifs = example3_ifs()
    mats = [m.linear for m in ifs.maps]
    arrays = [m.as_array() for m in mats]
    norms = [svd2(m).alpha1 for m in mats]
    c0 = _cone_samples(cone_c(0.0), samples)
    d0 = _cone_samples(cone_d0(), samples)
    min_c0 = [float(np.linalg.norm(a @ c0, axis=0).min()) for a in arrays]
    inv = [np.linalg.inv(a) for a in arrays]
    max_d0 = [float((1.0 / np.linalg.norm(b @ d0, axis=0)).max()) for b in inv]
    cone = cone_c(eps)
    return {
        "norm_max": max(norms),
        "norm_bound_ok": max(norms) < EX3_NORM_BOUND,
        "cone_min_norm": min(min_c0),
        "cone_min_ok": min(min_c0) >= 1 / 3 - 1e-12,
        "restricted_inverse_max": max(max_d0),
        "restricted_inverse_constant": EX3_RESTRICTED_BOUND,
        "restricted_inverse_ok": max(max_d0) <= EX3_RESTRICTED_BOUND + 1e-12 and max(max_d0) < 0.32,
        "square_invariant": verify_invariant_enclosure(ifs, ifs.enclosure, 0.0),
        "cone_invariant": all(cone_strictly_maps_into(a, cone, cone, margin) for a in mats),
    }
