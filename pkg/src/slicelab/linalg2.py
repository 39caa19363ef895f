"""2x2 linear algebra, the projective line RP^1 and cone predicates.

Projective points are stored as canonical unit representatives; arcs of RP^1
are handled in the angle coordinate theta in [0, pi), where the whole line
has length pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import SingularMatrix, ValidationError

PI = math.pi
DEGENERATE_DISCRIMINANT = 1e-14
SINGULAR_SLACK = 1e-14


class Vec2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Vec2(self.x - other[0], self.y - other[1])

    def scale(self, s: float) -> "Vec2":
        return Vec2(s * self.x, s * self.y)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class Mat2:
    a11: float
    a12: float
    a21: float
    a22: float

    @classmethod
    def from_rows(cls, rows) -> "Mat2":
        (a, b), (c, d) = rows
        return cls(float(a), float(b), float(c), float(d))

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def diag(cls, d1: float, d2: float) -> "Mat2":
        return cls(float(d1), 0.0, 0.0, float(d2))

    def rows(self):
        return [[self.a11, self.a12], [self.a21, self.a22]]

    def as_array(self) -> np.ndarray:
        return np.array(self.rows(), dtype=float)

    def flat(self):
        return (self.a11, self.a12, self.a21, self.a22)

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def frobenius2(self) -> float:
        return self.a11 ** 2 + self.a12 ** 2 + self.a21 ** 2 + self.a22 ** 2

    def is_singular(self, slack: float = SINGULAR_SLACK) -> bool:
        return abs(self.det()) <= slack * self.frobenius2()

    def inverse(self) -> "Mat2":
        if self.is_singular():
            raise SingularMatrix(f"matrix {self.rows()} is singular")
        d = self.det()
        return Mat2(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d)

    def transpose(self) -> "Mat2":
        return Mat2(self.a11, self.a21, self.a12, self.a22)

    def apply(self, v) -> Vec2:
        return Vec2(self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1])

    def __matmul__(self, other):
        if isinstance(other, Mat2):
            return Mat2(
                self.a11 * other.a11 + self.a12 * other.a21,
                self.a11 * other.a12 + self.a12 * other.a22,
                self.a21 * other.a11 + self.a22 * other.a21,
                self.a21 * other.a12 + self.a22 * other.a22,
            )
        return self.apply(other)


class ProjLine:
    """A point of RP^1, i.e. a line through the origin.

    The representative is a unit vector whose first nonzero component is
    positive, so ``ProjLine((1, 0)) == ProjLine((-1, 0))``.
    """

    __slots__ = ("direction",)

    def __init__(self, v):
        x, y = float(v[0]), float(v[1])
        n = math.hypot(x, y)
        if n == 0.0 or not math.isfinite(n):
            raise ValidationError("a projective point needs a finite nonzero vector")
        x, y = x / n, y / n
        if x < 0.0 or (x == 0.0 and y < 0.0):
            x, y = -x, -y
        object.__setattr__(self, "direction", Vec2(x + 0.0, y + 0.0))

    def __setattr__(self, name, value):
        raise AttributeError("ProjLine is immutable")

    @classmethod
    def from_angle(cls, theta: float) -> "ProjLine":
        return cls((math.cos(theta), math.sin(theta)))

    @classmethod
    def from_slope(cls, t: float) -> "ProjLine":
        """V_t = <(1, t)>; ``math.inf`` gives the vertical line V_inf."""
        if math.isinf(t):
            return cls((0.0, 1.0))
        return cls((1.0, t))

    @property
    def angle(self) -> float:
        """Angle coordinate in [0, pi)."""
        th = math.atan2(self.direction.y, self.direction.x)
        if th < 0.0:
            th += PI
        if th >= PI:
            th -= PI
        return th

    @property
    def slope(self) -> float:
        x, y = self.direction
        return math.inf if x == 0.0 else y / x

    def __eq__(self, other):
        return isinstance(other, ProjLine) and self.direction == other.direction

    def __hash__(self):
        return hash(self.direction)

    def __repr__(self):
        return f"ProjLine({self.direction.x!r}, {self.direction.y!r})"


def proj_angle(v: ProjLine, w: ProjLine) -> float:
    """Angle metric on RP^1, in [0, pi/2].

    atan2(|v ^ w|, |v . w|) agrees with both the arccos and arcsin forms and
    stays well conditioned near 0 and pi/2.
    """
    a, b = v.direction, w.direction
    return math.atan2(abs(a.x * b.y - a.y * b.x), abs(a.x * b.x + a.y * b.y))


def act(m: Mat2, v: ProjLine) -> ProjLine:
    """A<v> = <Av>."""
    if m.is_singular():
        raise SingularMatrix(f"matrix {m.rows()} is singular")
    return ProjLine(m.apply(v.direction))


@dataclass(frozen=True)
class Svd2:
    alpha1: float
    alpha2: float
    eta1: ProjLine | None

    @property
    def eta1_defined(self) -> bool:
        return self.eta1 is not None


def svd2(m: Mat2) -> Svd2:
    """Singular values from the closed-form eigenvalues of A^T A."""
    a, b, c, d = m.flat()
    p = a * a + c * c
    q = a * b + c * d
    r = b * b + d * d
    half = 0.5 * (p + r)
    h = math.hypot(0.5 * (p - r), q)
    alpha1 = math.sqrt(half + h)
    alpha2 = abs(a * d - b * c) / alpha1 if alpha1 > 0.0 else 0.0
    if h <= DEGENERATE_DISCRIMINANT * (p + r) or alpha1 == 0.0:
        return Svd2(alpha1, alpha2, None)
    lam = half + h
    v1 = (q, lam - p)
    v2 = (lam - r, q)
    v = v1 if math.hypot(*v1) >= math.hypot(*v2) else v2
    return Svd2(alpha1, alpha2, ProjLine(v))


def svd2_batch(m: np.ndarray):
    """Vectorised singular values for an array of shape (..., 4) of flattened matrices."""
    m = np.asarray(m, dtype=float)
    a, b, c, d = m[..., 0], m[..., 1], m[..., 2], m[..., 3]
    p = a * a + c * c
    q = a * b + c * d
    r = b * b + d * d
    alpha1 = np.sqrt(0.5 * (p + r) + np.hypot(0.5 * (p - r), q))
    det = np.abs(a * d - b * c)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha2 = np.where(alpha1 > 0.0, det / alpha1, 0.0)
    return alpha1, alpha2


# ---------------------------------------------------------------- arcs ----

def _mod_pi(theta: float) -> float:
    t = math.fmod(theta, PI)
    if t < 0.0:
        t += PI
    return 0.0 if t >= PI else t


class ProjInterval:
    """Closed arc of RP^1 running counterclockwise from ``lo`` to ``hi``."""

    __slots__ = ("start", "length")

    def __init__(self, lo: ProjLine, hi: ProjLine):
        start = lo.angle
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "length", _mod_pi(hi.angle - start))

    def __setattr__(self, name, value):
        raise AttributeError("ProjInterval is immutable")

    @classmethod
    def from_angles(cls, start: float, length: float) -> "ProjInterval":
        if not 0.0 <= length < PI:
            raise ValidationError(f"arc length {length} outside [0, pi)")
        iv = object.__new__(cls)
        object.__setattr__(iv, "start", _mod_pi(start))
        object.__setattr__(iv, "length", float(length))
        return iv

    @property
    def lo(self) -> ProjLine:
        return ProjLine.from_angle(self.start)

    @property
    def hi(self) -> ProjLine:
        return ProjLine.from_angle(self.start + self.length)

    @classmethod
    def from_slopes(cls, t_lo: float, t_hi: float) -> "ProjInterval":
        """The arc of slopes ``t_lo -> t_hi`` not passing through the vertical."""
        if not t_lo <= t_hi:
            raise ValidationError("need t_lo <= t_hi")
        return cls(ProjLine.from_slope(t_lo), ProjLine.from_slope(t_hi))

    @property
    def end(self) -> float:
        return self.start + self.length

    def midpoint(self) -> ProjLine:
        return ProjLine.from_angle(self.start + 0.5 * self.length)

    def offset_of(self, v: ProjLine) -> float:
        """Counterclockwise angular offset of ``v`` from ``lo``, in [0, pi)."""
        return _mod_pi(v.angle - self.start)

    def contains(self, v: ProjLine, slack: float = 0.0) -> bool:
        off = self.offset_of(v)
        return off <= self.length + slack or off >= PI - slack

    def within(self, other: "ProjInterval", margin: float = 0.0) -> bool:
        """True iff this arc sits inside ``other`` with clearance >= margin at both ends.

        A negative margin acts as a tolerance.
        """
        off = _mod_pi(self.start - other.start)
        if margin < 0.0 and off > PI + margin:
            off -= PI
        return off >= margin and off + self.length <= other.length - margin

    def slopes(self):
        """Slopes (tan lo, tan hi); raises if the arc contains the vertical direction."""
        vertical = ProjLine((0.0, 1.0))
        if self.contains(vertical) and self.length > 0.0:
            off = self.offset_of(vertical)
            if 0.0 < off < self.length:
                raise ValidationError("interval contains the vertical direction")
        lo = self.start if self.start < 0.5 * PI else self.start - PI
        return math.tan(lo), math.tan(lo + self.length)

    def __repr__(self):
        return f"ProjInterval(start={self.start!r}, length={self.length!r})"


def image_interval(m: Mat2, iv: ProjInterval) -> ProjInterval:
    """Image of a projective interval under an invertible matrix."""
    a = act(m, iv.lo)
    b = act(m, iv.hi)
    if iv.length < 1e-12:
        fwd, back = ProjInterval(a, b), ProjInterval(b, a)
        return fwd if fwd.length <= back.length else back
    mid = act(m, iv.midpoint())
    forward = ProjInterval(a, b)
    if 0.0 < forward.offset_of(mid) < forward.length:
        return forward
    return ProjInterval(b, a)


class MultiCone:
    """Finite union of pairwise-disjoint closed projective intervals."""

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable[ProjInterval]):
        merged = _merge(list(intervals))
        object.__setattr__(self, "intervals", tuple(merged))

    def __setattr__(self, name, value):
        raise AttributeError("MultiCone is immutable")

    @classmethod
    def from_slopes(cls, t_lo: float, t_hi: float) -> "MultiCone":
        return cls([ProjInterval.from_slopes(t_lo, t_hi)])

    def total_length(self) -> float:
        return sum(iv.length for iv in self.intervals)

    def contains(self, v: ProjLine, slack: float = 0.0) -> bool:
        return any(iv.contains(v, slack) for iv in self.intervals)

    def contains_interval(self, iv: ProjInterval, margin: float = 0.0) -> bool:
        return any(iv.within(big, margin) for big in self.intervals)

    def within(self, other: "MultiCone", margin: float = 0.0) -> bool:
        return all(other.contains_interval(iv, margin) for iv in self.intervals)

    def complement(self) -> "MultiCone":
        """Closure of RP^1 minus this cone."""
        ivs = sorted(self.intervals, key=lambda iv: iv.start)
        out = []
        for k, iv in enumerate(ivs):
            nxt = ivs[(k + 1) % len(ivs)]
            gap = _mod_pi(nxt.start - iv.end)
            if len(ivs) == 1:
                gap = PI - iv.length
            out.append(ProjInterval.from_angles(iv.end, gap))
        return MultiCone(out)

    def image(self, m: Mat2) -> "MultiCone":
        return MultiCone(image_interval(m, iv) for iv in self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __repr__(self):
        return f"MultiCone({list(self.intervals)!r})"


def _merge(intervals):
    """Merge overlapping arcs; raises if they cover the whole of RP^1."""
    if not intervals:
        raise ValidationError("a multicone needs at least one interval")
    segs = []
    for iv in intervals:
        if iv.end <= PI:
            segs.append([iv.start, iv.end])
        else:
            segs.append([iv.start, PI])
            segs.append([0.0, iv.end - PI])
    segs.sort()
    merged = [segs[0]]
    for s, e in segs[1:]:
        if s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    if merged[0][0] <= 0.0 and merged[-1][1] >= PI:
        if len(merged) == 1:
            raise ValidationError("multicone covers all of RP^1")
        first = merged.pop(0)
        merged[-1][1] = PI + first[1]
    out = []
    for s, e in merged:
        if e - s >= PI:
            raise ValidationError("multicone covers all of RP^1")
        out.append(ProjInterval.from_angles(s, e - s))
    return out


def cone_strictly_maps_into(m: Mat2, c: MultiCone, target: MultiCone, margin: float) -> bool:
    """Certify ``m C`` lies in the interior of ``target`` with clearance ``margin``.

    Images of projective intervals are projective intervals, so checking the
    image arcs is exact up to rounding.
    """
    if not margin > 0.0:
        raise ValidationError("margin must be positive")
    return all(target.contains_interval(image_interval(m, iv), margin) for iv in c)
