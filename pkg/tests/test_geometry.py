import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import circle, seeds
from variety_test.errors import EmptyCloud, NoFeasiblePoint, TooFewPoints
from variety_test.geometry import (PointCloud, crofton_volume_estimate, distances_to_variety, hausdorff_estimate,
                                   project_to_variety, reach_estimate, sample_variety, tangent_bases,
                                   variety_hausdorff)
from variety_test.poly import evaluate, make_poly, univariate

segment = make_poly(2, 1, 1, [(1, [0, 1], 1.0)])
two_lines = make_poly(2, 1, 2, [(1, [0, 2], 1.0), (1, [0, 0], -0.04)])  # x2^2 - 0.04
lemma_pair = univariate([0.0, -0.5, 1.0])  # x(x - 1/2)


def test_projection_examples():
    r = project_to_variety(circle(), [1.0, 0.0])
    assert r.distance == pytest.approx(0.5, abs=1e-9)
    np.testing.assert_allclose(r.nearest, [0.5, 0.0], atol=1e-9)
    assert r.converged and r.residual <= 1e-10
    r = project_to_variety(circle(), [0.0, 0.0])
    assert r.distance == pytest.approx(0.5, abs=1e-9)
    r = project_to_variety(univariate([0.0, 1.0]), [0.3])
    assert r.distance == pytest.approx(0.3) and r.nearest[0] == pytest.approx(0.0, abs=1e-12)


def test_projection_leaves_through_boundary():
    # the line x1 = 0.9 tilted: nearest point of Z(p) on the full line lies outside the disk
    p = make_poly(2, 1, 1, [(1, [1, 0], 1.0), (1, [0, 1], 1.0), (1, [0, 0], -1.3)])
    r = project_to_variety(p, [-0.7, -0.7])
    assert np.linalg.norm(r.nearest) <= 1 + 1e-9
    # dense-sampling oracle on the chord inside the disk
    s = np.linspace(0, 1, 200_001)
    a, b = _chord(p)
    chord = a + s[:, None] * (b - a)
    assert r.distance == pytest.approx(np.min(np.linalg.norm(chord - [-0.7, -0.7], axis=1)), abs=1e-6)


def _chord(p):
    pts = sample_variety(p, 400).points
    i, j = np.unravel_index(np.argmax(np.linalg.norm(pts[:, None] - pts[None], axis=-1)), (len(pts),) * 2)
    return pts[i], pts[j]


def test_projection_no_feasible_point():
    with pytest.raises(NoFeasiblePoint):
        project_to_variety(make_poly(2, 1, 2, [(1, [2, 0], 1.0), (1, [0, 2], 1.0), (1, [0, 0], 1.0)]), [0.1, 0.1])


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(0.1, 50.0))
def test_projection_scale_invariant(seed, lam):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.7, 0.7, 2)
    p = make_poly(2, 1, 2, [(1, [2, 0], 1.0), (1, [1, 1], 0.3), (1, [0, 2], 0.5), (1, [0, 0], -0.1)])
    assert project_to_variety(lam * p, x).distance == pytest.approx(project_to_variety(p, x).distance, abs=1e-9)


def test_points_on_variety_project_to_themselves():
    pts = sample_variety(circle(0.3), 50).points
    assert np.all(distances_to_variety(circle(0.3), pts) <= 1e-8)


def test_projection_matches_dense_oracle(rng):
    p = make_poly(2, 1, 3, [(1, [3, 0], 1.0), (1, [0, 2], -1.0), (1, [1, 0], 0.2), (1, [0, 0], 0.05)])
    dense = sample_variety(p, 20000).points
    X = rng.uniform(-0.7, 0.7, (30, 2))
    got = distances_to_variety(p, X)
    oracle = np.min(np.linalg.norm(X[:, None] - dense[None], axis=-1), axis=1)
    assert np.all(got <= oracle + 1e-6)
    assert np.all(oracle - got <= 2 * dense_gap(dense))


def dense_gap(P):
    from scipy.spatial import cKDTree
    d, _ = cKDTree(P).query(P, k=2)
    return d[:, 1].max()


def test_sample_variety_examples():
    cloud = sample_variety(circle(), 100)
    assert len(cloud) == 100
    assert np.abs(evaluate(circle(), cloud.points)).max() < 1e-8
    assert np.all(np.linalg.norm(cloud.points, axis=1) <= 1 + 1e-9)
    pts = sample_variety(lemma_pair, 10).points[:, 0]
    assert set(np.round(pts, 9)) <= {0.0, 0.5}
    assert len(sample_variety(circle(), 0)) == 0


def test_hausdorff_examples():
    assert hausdorff_estimate(np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]])) == 1.0
    assert hausdorff_estimate(np.array([[0.5]]), np.array([[0.0], [0.5]])) == 0.5
    assert variety_hausdorff(circle(0.3), circle(0.5)) == pytest.approx(0.2, abs=0.01)
    with pytest.raises(EmptyCloud):
        hausdorff_estimate(np.zeros((0, 2)), np.zeros((1, 2)))


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_hausdorff_metric_properties(seed):
    rng = np.random.default_rng(seed)
    A, B, C = (rng.uniform(-1, 1, (rng.integers(1, 20), 2)) for _ in range(3))
    assert hausdorff_estimate(A, A) == 0
    assert hausdorff_estimate(A, B) == hausdorff_estimate(B, A)
    assert hausdorff_estimate(A, C) <= hausdorff_estimate(A, B) + hausdorff_estimate(B, C) + 1e-15


def test_reach_examples():
    pts = sample_variety(circle(), 500).points
    assert reach_estimate(pts, tangent_bases(circle(), pts)) == pytest.approx(0.5, abs=0.02)
    pts = sample_variety(segment, 100).points
    assert reach_estimate(pts, tangent_bases(segment, pts)) == 1e6
    pts = sample_variety(two_lines, 400).points
    assert reach_estimate(pts, tangent_bases(two_lines, pts)) == pytest.approx(0.2, abs=0.02)
    with pytest.raises(TooFewPoints):
        reach_estimate(pts[:1], tangent_bases(two_lines, pts[:1]))


def test_crofton_examples():
    est = crofton_volume_estimate(circle(), 1, trials=10_000, rng_seed=0)
    assert est.estimate == pytest.approx(math.pi, abs=0.15) and est.bound == pytest.approx(4.0)
    est = crofton_volume_estimate(segment, 1, trials=10_000, rng_seed=0)
    assert est.estimate == pytest.approx(2.0, abs=0.1) and est.bound == pytest.approx(2.0)
    empty = make_poly(2, 1, 2, [(1, [2, 0], 1.0), (1, [0, 2], 1.0), (1, [0, 0], 1.0)])
    assert crofton_volume_estimate(empty, 1, trials=1000).estimate == 0.0


@pytest.mark.parametrize("r", [0.2, 0.5, 0.6, 0.8, 0.95])
def test_crofton_matches_length_and_bezout_count(r):
    est = crofton_volume_estimate(circle(r), 1, trials=5000, rng_seed=1)
    assert est.estimate == pytest.approx(2 * math.pi * r, abs=4 * est.stderr + 0.02)
    assert est.estimate <= est.bezout_bound + 1e-12
    assert est.bezout_bound == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("r", [0.2, 0.5, 0.6])
def test_crofton_below_stated_bound(r):
    est = crofton_volume_estimate(circle(r), 1, trials=5000, rng_seed=1)
    assert est.estimate <= est.bound + 3 * est.stderr


def test_stated_bound_fails_for_large_circles():
    # length 2*pi*0.8 ~ 5.03 exceeds vol(D^1) * 2 = 4: the stated bound only covers
    # planes meeting a flat k-disk, not all planes meeting D^n
    est = crofton_volume_estimate(circle(0.8), 1, trials=5000, rng_seed=1)
    assert est.estimate > est.bound + 3 * est.stderr


def test_point_cloud_rejects_points_outside_disk():
    with pytest.raises(ValueError):
        PointCloud(2, np.array([[1.5, 0.0]]))
