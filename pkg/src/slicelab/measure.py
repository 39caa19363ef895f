"""The lifted length measure nu on the Takagi graph (each depth-m cylinder weighs 2^-m).

Strip masses are bracketed by cylinder censuses; the pointwise-dimension
regression and the conservation identity combine them with the slice census.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import takagi as tk
from .errors import DepthTooLarge, InsufficientData, MassVanishes
from .slicer import Line, Strip, slice_census, strip_constant

MASS_EXTRA_DEPTH = 4


@dataclass(frozen=True)
class StripMassBounds:
    depth: int
    lower: float
    upper: float

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise AssertionError(f"mass bounds out of order: {self.lower}, {self.upper}")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


def strip_mass(lam, strip: Strip, depth: int, hull: str = "box", slack=None, use_numba=None) -> StripMassBounds:
    """nu(strip) lies in [2^-m #(cylinders inside the strip), 2^-m #(cylinders meeting it)]."""
    if not 0 <= depth <= 24:
        raise DepthTooLarge("mass depth must be in 0..24")
    census = slice_census(lam, strip, depth, hull=hull, slack=slack, use_numba=use_numba)
    scale = 2.0 ** -depth
    return StripMassBounds(depth, census.inside * scale,
                           census.possible * scale)


@dataclass(frozen=True)
class ConservationReport:
    depths: list
    radii: list
    mass_lower: list
    mass_upper: list
    sigma_counts: list
    slope_nu: float
    slope_sigma: float
    residual: float

    def as_dict(self) -> dict:
        return {"radii": self.radii, "mass_lower": self.mass_lower, "mass_upper": self.mass_upper,
                "slope_nu": self.slope_nu, "slope_sigma": self.slope_sigma, "residual": self.residual}


def conservation_residual(lam, slope_nu: float, slope_sigma: float) -> float:
    ratio = math.log(0.5) / math.log(tk.check_lambda(lam))
    return abs(slope_nu + ratio * slope_sigma - ratio)


def regression_slope(x, y) -> float:
    return float(np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)[0])


def pointwise_dim_estimate(lam, line: Line, n_range, hull: str = "box", extra_depth: int = MASS_EXTRA_DEPTH,
                           slack=None, use_numba=None) -> ConservationReport:
    """Regress log nu([line]_{c lam^n}) on log(c lam^n) and log2 #census on n over ``n_range``.

    Masses use depth n + ``extra_depth``; the midpoint of the mass bracket
    enters the regression. The census slope uses the possible counts.
    """
    lam = tk.check_lambda(lam)
    depths = sorted(int(n) for n in n_range)
    if len(depths) < 3:
        raise InsufficientData("need at least three depths")
    if depths[-1] + extra_depth > 24:
        raise DepthTooLarge("mass depth n + extra must stay <= 24")
    census = slice_census(lam, line, depths[-1], hull=hull, slack=slack, use_numba=use_numba)
    if census.possible == 0:
        # the strips still carry mass, but none of it is near a point of the slice
        raise MassVanishes("the line misses the graph: pointwise dimension is undefined here")
    c = strip_constant(lam)
    radii, lower, upper = [], [], []
    for n in depths:
        r = c * lam ** n
        b = strip_mass(lam, Strip(line, r), n + extra_depth, hull=hull, slack=slack, use_numba=use_numba)
        radii.append(r)
        lower.append(b.lower)
        upper.append(b.upper)
    if all(u == 0.0 for u in upper):
        raise MassVanishes("every strip has zero mass")
    counts = [int(census.possible_levels[n]) for n in depths]
    mid = np.array([0.5 * (a + b) for a, b in zip(lower, upper)])
    keep = mid > 0
    if keep.sum() < 2:
        raise MassVanishes("fewer than two radii carry mass")
    slope_nu = regression_slope(np.log(np.array(radii)[keep]), np.log(mid[keep]))
    cnt = np.array(counts, float)
    ck = cnt > 0
    slope_sigma = regression_slope(np.array(depths)[ck], np.log2(cnt[ck])) if ck.sum() >= 2 else 0.0
    return ConservationReport(depths, radii, lower, upper, counts, slope_nu, slope_sigma,
                              conservation_residual(lam, slope_nu, slope_sigma))


@dataclass(frozen=True)
class SandwichResult:
    n: int
    upper_mass: float
    definite_line: int
    rhs: float

    @property
    def ok(self) -> bool:
        return self.upper_mass >= self.rhs


def conservation_sandwich_check(lam, line: Line, n: int, hull: str = "box", slack=None,
                                use_numba=None) -> SandwichResult:
    """upper nu([line]_{c lam^n}) at depth n must dominate 2^-n #definite(line, n)."""
    if not 0 <= n <= 20:
        raise DepthTooLarge("sandwich depth must be in 0..20")
    lam = tk.check_lambda(lam)
    r = strip_constant(lam) * lam ** n
    mass = strip_mass(lam, Strip(line, r), n, hull=hull, slack=slack, use_numba=use_numba)
    definite = slice_census(lam, line, n, hull=hull, slack=slack, use_numba=use_numba).definite
    return SandwichResult(n, mass.upper, definite, definite * 2.0 ** -n)
