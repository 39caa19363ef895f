"""Blow-ups M_{x,r}(y) = (y - x)/r of an attractor near a point, as finite point clouds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import EmptyCloud, ResolutionTooFine, ValidationError
from .ifs import AffineIFS, _hull_points, example3_ifs, polygon_point_distance

NET_SPACING = 0.02


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    resolution: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if not self.resolution > 0.0:
            raise ValidationError("resolution must be positive")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


def blowup_cloud(ifs: AffineIFS, x, r: float, eps: float, node_budget: int = 20_000_000) -> PointCloud:
    """Cloud within Hausdorff distance 2 eps of M_{x,r}(X) in B(0,1).

    Walks every cylinder whose hull meets B(x, r(1+eps)) until its hull
    diameter is <= eps r, emits the image of the first map's fixed point,
    rescales and clips to B(0, 1+eps). Points are sorted, so the output does
    not depend on the walk order.
    """
    if not (r > 0.0 and eps > 0.0):
        raise ValidationError("r and eps must be positive")
    x = np.asarray(x, dtype=float)
    lin, trans = ifs.packed()
    verts = ifs.enclosure.vertices
    base = np.asarray(ifs.base_point(), dtype=float)[None]
    reach, fine = r * (1.0 + eps), eps * r
    frontier = kernels.IDENTITY[None, :].copy()
    out = []
    visited = 0
    while frontier.shape[0]:
        polys = _hull_points(frontier, verts)
        near = polygon_point_distance(polys, x) <= reach
        frontier, polys = frontier[near], polys[near]
        diff = polys[:, :, None, :] - polys[:, None, :, :]
        diam = np.sqrt((diff ** 2).sum(-1)).max(axis=(1, 2))
        done = diam <= fine
        if done.any():
            out.append(_hull_points(frontier[done], base)[:, 0, :])
        frontier = frontier[~done]
        if frontier.shape[0]:
            frontier = kernels._expand(frontier, lin, trans)
            visited += frontier.shape[0]
            if visited > node_budget:
                raise ResolutionTooFine(f"blow-up needs more than {node_budget} cylinders; raise eps")
    pts = (np.concatenate(out) - x) / r if out else np.zeros((0, 2))
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= 1.0 + eps]
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    return PointCloud(pts, 2.0 * eps)


def _directed(a: np.ndarray, b: np.ndarray) -> float:
    return float(cKDTree(b).query(a, k=1)[0].max())


def hausdorff_distance(a: PointCloud, b: PointCloud) -> float:
    if len(a) == 0 or len(b) == 0:
        raise EmptyCloud("Hausdorff distance needs two nonempty clouds")
    return max(_directed(a.points, b.points), _directed(b.points, a.points))


def quadrant_net(spacing: float = NET_SPACING) -> PointCloud:
    """Polar grid of the closed quarter disk with covering radius <= spacing."""
    rings = max(1, math.ceil(1.0 / spacing))
    pts = [(0.0, 0.0)]
    for i in range(1, rings + 1):
        rho = i / rings
        arcs = max(1, math.ceil(rho * (math.pi / 2) / spacing))
        th = np.linspace(0.0, math.pi / 2, arcs + 1)
        pts.extend(zip(rho * np.cos(th), rho * np.sin(th)))
    return PointCloud(np.array(pts), spacing)


@dataclass(frozen=True)
class TangentCheck:
    n: int
    distance: float
    bound: float
    points: int

    @property
    def ok(self) -> bool:
        return self.distance <= self.bound


def example3_tangent_check(n: int, eps: float = NET_SPACING) -> TangentCheck:
    """Blow-up of the three-map fixture at the origin, r = 3^-n, against the quarter disk."""
    if not 2 <= n <= 7:
        raise ValidationError("n must be in 2..7")
    cloud = blowup_cloud(example3_ifs(), (0.0, 0.0), 3.0 ** -n, eps)
    net = quadrant_net(NET_SPACING)
    d = hausdorff_distance(cloud, net)
    bound = math.asin(0.75 ** n) + 2 * eps + net.resolution
    return TangentCheck(n, d, bound, len(cloud))
