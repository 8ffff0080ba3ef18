import math

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import circle, random_poly, random_rotation, seeds, shapes
from variety_test.errors import DegreeExceeded, IndexOutOfRange, NotOnSphere, NotOrthogonal, ShapeMismatch
from variety_test.poly import (bw_inner, bw_norm, bw_weight, compose_orthogonal, elevate, eval_and_jacobian,
                               evaluate, from_raw, make_poly, multiply, normalize, sphere_lift, stereographic_lift,
                               univariate, zero_poly)


def test_make_poly_weights():
    p = make_poly(1, 1, 2, [(1, [2], 1.0)])
    xs = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(evaluate(p, xs[:, None])[:, 0], xs**2)
    assert np.all(evaluate(make_poly(1, 1, 2, []), xs[:, None]) == 0)


def test_make_poly_circle():
    p = circle()
    X = np.array([[0.5, 0.0], [0.0, 0.0], [0.3, 0.4]])
    np.testing.assert_allclose(evaluate(p, X)[:, 0], [0.0, -0.25, 0.0], atol=1e-15)


def test_make_poly_errors():
    with pytest.raises(DegreeExceeded):
        make_poly(1, 1, 2, [(1, [3], 1.0)])
    with pytest.raises(IndexOutOfRange):
        make_poly(1, 1, 2, [(2, [1], 1.0)])
    with pytest.raises(IndexOutOfRange):
        make_poly(2, 1, 2, [(1, [1], 1.0)])


def test_weight_closed_form():
    # d!/((d-|a|)! a!) for a=(1,1), d=3: 6/(1*1*1) = 6
    assert bw_weight([1, 1], 3) == pytest.approx(math.sqrt(6))
    assert bw_weight([1], 2) == pytest.approx(math.sqrt(2))


def test_eval_and_jacobian_examples():
    v, J = eval_and_jacobian(circle(), [0.5, 0.0])
    np.testing.assert_allclose(v, [0.0], atol=1e-15)
    np.testing.assert_allclose(J, [[1.0, 0.0]])
    v, J = eval_and_jacobian(make_poly(1, 1, 2, [(1, [2], 1.0)]), [0.0])
    assert v[0] == 0 and J[0, 0] == 0


@settings(max_examples=100, deadline=None)
@given(shapes, seeds)
def test_jacobian_matches_finite_differences(shape, seed):
    n, c, d = shape
    rng = np.random.default_rng(seed)
    p = random_poly(rng, n, c, d)
    x = rng.uniform(-1, 1, n) / math.sqrt(n)
    _, J = eval_and_jacobian(p, x)
    h = 1e-5
    fd = np.stack([(evaluate(p, x + h * e) - evaluate(p, x - h * e)) / (2 * h) for e in np.eye(n)], axis=-1)
    scale = max(1.0, np.abs(J).max())
    np.testing.assert_allclose(J, fd, atol=1e-6 * scale)


def test_bw_inner_examples():
    p = make_poly(1, 1, 2, [(1, [2], 1.0)])
    assert bw_inner(p, p) == 1.0
    lin = univariate([0.0, 1.0], d=2)  # p(x) = x in the degree-2 space
    assert bw_norm(lin) == pytest.approx(1 / math.sqrt(2))
    assert bw_inner(p, zero_poly(1, 1, 2)) == 0.0
    with pytest.raises(ShapeMismatch):
        bw_inner(p, zero_poly(1, 1, 3))


@settings(max_examples=50, deadline=None)
@given(shapes, seeds)
def test_bw_inner_symmetric_bilinear_positive(shape, seed):
    n, c, d = shape
    rng = np.random.default_rng(seed)
    p, q, r = (random_poly(rng, n, c, d) for _ in range(3))
    a, b = rng.normal(size=2)
    assert bw_inner(p, q) == pytest.approx(bw_inner(q, p))
    assert bw_inner(a * p + b * q, r) == pytest.approx(a * bw_inner(p, r) + b * bw_inner(q, r), abs=1e-9)
    assert bw_inner(p, p) > 0


def test_compose_orthogonal_examples(rng):
    p = circle()
    R = random_rotation(rng, 2)
    np.testing.assert_allclose(compose_orthogonal(p, R).coeffs, p.coeffs, atol=1e-14)
    assert compose_orthogonal(p, np.eye(2)) == p
    with pytest.raises(NotOrthogonal):
        compose_orthogonal(p, np.diag([1.0, 2.0]))


@settings(max_examples=100, deadline=None)
@given(shapes, seeds)
def test_bw_norm_rotation_invariant(shape, seed):
    n, c, d = shape
    rng = np.random.default_rng(seed)
    p = random_poly(rng, n, c, d)
    R = random_rotation(rng, n)
    q = compose_orthogonal(p, R)
    assert abs(bw_norm(q) - bw_norm(p)) / bw_norm(p) < 1e-9
    X = rng.uniform(-0.5, 0.5, (5, n))
    np.testing.assert_allclose(evaluate(q, X), evaluate(p, X @ R.T), atol=1e-10)


def test_sphere_lift_examples():
    v, T = sphere_lift(univariate([0.0, 1.0]), [1.0, 0.0])
    assert v[0] == pytest.approx(0.0) and abs(T[0, 0]) == pytest.approx(1.0)
    v, T = sphere_lift(univariate([1.0, 0.0]), [1.0, 0.0])
    assert v[0] == pytest.approx(1.0) and T[0, 0] == pytest.approx(0.0)
    with pytest.raises(NotOnSphere):
        sphere_lift(circle(), [1.0, 1.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(shapes, seeds)
def test_homogenization_identity(shape, seed):
    # the lifted value at pi(x) equals p(x) / (1 + |x|^2)^(d/2)
    n, c, d = shape
    rng = np.random.default_rng(seed)
    p = random_poly(rng, n, c, d)
    x = rng.normal(size=n)
    u = stereographic_lift(x)
    v, _ = sphere_lift(p, u)
    np.testing.assert_allclose(v * (1 + x @ x) ** (d / 2), evaluate(p, x), rtol=1e-8, atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_stereographic_lift(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=3) * 3
    u = stereographic_lift(x)
    assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-12)
    assert u[0] == pytest.approx(1 / math.sqrt(1 + x @ x))


def test_elevate_and_multiply(rng):
    p = random_poly(rng, 2, 1, 2)
    q = random_poly(rng, 2, 1, 1)
    X = rng.uniform(-0.7, 0.7, (10, 2))
    np.testing.assert_allclose(evaluate(elevate(p, 4), X), evaluate(p, X), atol=1e-12)
    np.testing.assert_allclose(evaluate(multiply(p, q), X), evaluate(p, X) * evaluate(q, X), atol=1e-12)
    assert bw_norm(normalize(p)) == pytest.approx(1.0)
    np.testing.assert_allclose(evaluate(from_raw(2, 1, 2, p.raw()), X), evaluate(p, X), atol=1e-12)
