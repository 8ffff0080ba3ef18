import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import circle, random_poly, random_rotation, seeds
from variety_test.config import SearchConfig
from variety_test.discriminant import (boundary_margin_at, calibrate_a, discriminant_margin, interior_margin_at,
                                       raffalli_sphere_distance, sigma_min, sphere_discriminant_distance)
from variety_test.errors import NotOnBoundary, NotOnSphere, OutsideDisk
from variety_test.poly import compose_orthogonal, make_poly, univariate

x1 = make_poly(2, 1, 1, [(1, [1, 0], 1.0)])
x2 = make_poly(2, 1, 1, [(1, [0, 1], 1.0)])
x1_minus_1 = make_poly(2, 1, 1, [(1, [1, 0], 1.0), (1, [0, 0], -1.0)])
square = make_poly(1, 1, 2, [(1, [2], 1.0)])
line = univariate([0.0, 1.0])


def test_interior_margin_examples():
    assert interior_margin_at(line, [0.0]) == pytest.approx(1.0)
    assert interior_margin_at(square, [0.0]) == 0.0
    assert interior_margin_at(circle(), [0.5, 0.0]) == pytest.approx(1.0)
    with pytest.raises(OutsideDisk):
        interior_margin_at(circle(), [1.0, 0.5])


def test_boundary_margin_examples():
    assert boundary_margin_at(x2, [1.0, 0.0]) == pytest.approx(1.0)
    assert boundary_margin_at(x1_minus_1, [1.0, 0.0]) == pytest.approx(0.0, abs=1e-15)
    assert boundary_margin_at(x1, [0.0, 1.0]) == pytest.approx(1.0)
    with pytest.raises(NotOnBoundary):
        boundary_margin_at(x1, [0.5, 0.0])


def test_sigma_min_wide_jacobian_is_zero():
    J = np.ones((1, 3, 2))  # c=3 > n=2
    assert sigma_min(J)[0] == 0.0


def test_discriminant_margin_circle():
    cert = discriminant_margin(circle())
    assert cert.margin == pytest.approx(0.25, abs=1e-4)
    assert np.linalg.norm(cert.witness) < 1e-3
    assert cert.variant == "interior"
    assert interior_margin_at(circle(), cert.witness) == pytest.approx(cert.margin, abs=1e-10)


def test_discriminant_margin_univariate():
    assert discriminant_margin(square).margin == pytest.approx(0.0, abs=1e-12)
    assert discriminant_margin(line).margin == pytest.approx(1.0)


def test_raffalli_examples():
    assert raffalli_sphere_distance(line, [1.0, 0.0]) == pytest.approx(1.0)
    assert raffalli_sphere_distance(univariate([1.0, 0.0]), [1.0, 0.0]) == pytest.approx(1.0)
    with pytest.raises(NotOnSphere):
        raffalli_sphere_distance(line, [1.0, 1.0])


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(0.1, 10.0))
def test_raffalli_homogeneous(seed, lam):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, 2, 1, 3)
    u = rng.normal(size=3)
    u /= np.linalg.norm(u)
    assert raffalli_sphere_distance(lam * p, u) == pytest.approx(lam * raffalli_sphere_distance(p, u), rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(0.1, 10.0))
def test_margin_homogeneous_and_nonnegative(seed, lam):
    rng = np.random.default_rng(seed)
    p = random_poly(rng, 2, 1, 2)
    z = rng.uniform(-0.6, 0.6, 2)
    m = interior_margin_at(p, z)
    assert m >= 0
    assert interior_margin_at(lam * p, z) == pytest.approx(lam * m, rel=1e-9)
    b = z / np.linalg.norm(z)
    assert boundary_margin_at(lam * p, b) == pytest.approx(lam * boundary_margin_at(p, b), rel=1e-9)


def test_margin_rotation_invariant(rng):
    cfg = SearchConfig()
    for _ in range(5):
        p = random_poly(rng, 2, 1, 2)
        q = compose_orthogonal(p, random_rotation(rng, 2))
        assert discriminant_margin(q, cfg).margin == pytest.approx(discriminant_margin(p, cfg).margin, abs=1e-4)


def test_singular_point_gives_small_margin(rng):
    # a node at a random interior point: (x1 - z1)^2 - (x2 - z2)^2, BW weight of x_i is sqrt(2)
    for _ in range(5):
        z = rng.uniform(-0.5, 0.5, 2)
        p = make_poly(2, 1, 2, [(1, [0, 0], z[0] ** 2 - z[1] ** 2), (1, [1, 0], -2 * z[0] / np.sqrt(2)),
                                (1, [0, 1], 2 * z[1] / np.sqrt(2)), (1, [2, 0], 1.0), (1, [0, 2], -1.0)])
        assert interior_margin_at(p, z) < 1e-12
        assert discriminant_margin(p).margin < 1e-3


def test_sphere_distance_dominated_by_margin(rng):
    # both certify distance to the discriminant; their ratio is a finite constant on random instances
    ratios = []
    for _ in range(10):
        p = random_poly(rng, 1, 1, 2)
        ratios.append(sphere_discriminant_distance(p)[0] / discriminant_margin(p).margin)
    assert np.all(np.isfinite(ratios)) and min(ratios) > 0


def test_calibrate_a_reports_positive_constant():
    out = calibrate_a(1, 1, 2, samples=5, seed=0)
    assert out["a"] > 0 and len(out["ratios"]) == 5
