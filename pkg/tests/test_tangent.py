import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slicelab import ifs as I
from slicelab import tangent as T
from slicelab import takagi as tk
from slicelab.errors import EmptyCloud, ResolutionTooFine, ValidationError


def brute_hausdorff(a, b):
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1))
    return max(d.min(axis=1).max(), d.min(axis=0).max())


def cloud(pts):
    return T.PointCloud(np.asarray(pts, float), 0.01)


def test_hausdorff_examples():
    assert T.hausdorff_distance(cloud([(0, 0)]), cloud([(3, 4)])) == 5.0
    assert T.hausdorff_distance(cloud([(0, 0), (1, 0)]), cloud([(0, 0)])) == 1.0
    with pytest.raises(EmptyCloud):
        T.hausdorff_distance(cloud(np.zeros((0, 2))), cloud([(0, 0)]))


pts = st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=30)


@settings(max_examples=100)
@given(pts, pts, pts)
def test_hausdorff_metric_and_oracle(a, b, c):
    A, B, C = (np.array(p) for p in (a, b, c))
    dab = T.hausdorff_distance(cloud(A), cloud(B))
    assert math.isclose(dab, brute_hausdorff(A, B), rel_tol=1e-12, abs_tol=1e-12)
    assert dab == T.hausdorff_distance(cloud(B), cloud(A))
    assert T.hausdorff_distance(cloud(A), cloud(A)) == 0.0
    assert dab <= T.hausdorff_distance(cloud(A), cloud(C)) + T.hausdorff_distance(cloud(C), cloud(B)) + 1e-12
    assert dab == T.hausdorff_distance(cloud(A[::-1]), cloud(B))


def test_quadrant_net_covering_radius():
    net = T.quadrant_net()
    assert np.all(np.hypot(*net.points.T) <= 1 + 1e-12) and np.all(net.points >= -1e-12)
    rng = np.random.default_rng(0)
    rho, th = np.sqrt(rng.uniform(0, 1, 20000)), rng.uniform(0, math.pi / 2, 20000)
    probe = np.stack([rho * np.cos(th), rho * np.sin(th)], 1)
    assert T._directed(probe, net.points) <= net.resolution


def test_blowup_is_sorted_and_inside_ball():
    c = T.blowup_cloud(I.example3_ifs(), (0.0, 0.0), 3.0 ** -3, 0.05)
    assert len(c) > 0 and c.resolution == 0.1
    assert np.all(np.hypot(*c.points.T) <= 1.05 + 1e-12)
    order = np.lexsort((c.points[:, 1], c.points[:, 0]))
    assert np.array_equal(order, np.arange(len(c)))


def test_blowup_resolution_self_consistent():
    ifs = I.example3_ifs()
    coarse = T.blowup_cloud(ifs, (0.0, 0.0), 1 / 9, 0.04)
    fine = T.blowup_cloud(ifs, (0.0, 0.0), 1 / 9, 0.02)
    assert T.hausdorff_distance(coarse, fine) <= coarse.resolution + fine.resolution


def test_blowup_of_takagi_graph_tracks_the_graph():
    lam = 2 / 3
    ifs = tk.takagi_ifs(lam)
    x0 = (0.5, 0.5)
    r = 0.1
    c = T.blowup_cloud(ifs, x0, r, 0.05)
    xs = np.linspace(0, 1, 200001)
    g = np.stack([xs, tk.eval_array(lam, xs)], 1)
    g = (g - x0) / r
    g = g[np.hypot(*g.T) <= 1.0]
    assert T._directed(g, c.points) <= c.resolution
    assert T._directed(c.points, g) <= c.resolution + 0.05


def test_blowup_validation():
    with pytest.raises(ValidationError):
        T.blowup_cloud(I.example3_ifs(), (0, 0), 0.0, 0.1)
    with pytest.raises(ResolutionTooFine):
        T.blowup_cloud(I.example3_ifs(), (0, 0), 0.5, 1e-4, node_budget=10_000)
    with pytest.raises(ValidationError):
        T.example3_tangent_check(8)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_example3_tangent(n):
    res = T.example3_tangent_check(n)
    assert res.ok and res.points > 0
    assert math.isclose(res.bound, math.asin(0.75 ** n) + 0.06)
