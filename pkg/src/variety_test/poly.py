"""Polynomial tuples in the Bombieri-Weyl weighted monomial basis.

A tuple ``p = (p_1, ..., p_c)`` of n-variate polynomials of degree at most d is
stored through its coefficients ``p_{j,alpha}`` with respect to the rescaled
monomials ``w(alpha) * x**alpha`` where

    w(alpha) = sqrt(d! / ((d - |alpha|)! * alpha_1! * ... * alpha_n!)).

In this basis the Bombieri-Weyl inner product is the plain dot product of the
coefficient arrays, and the homogenization ``x_0**(d-|alpha|) * x**alpha`` of a
basis element has unit norm.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.signal import convolve

from .errors import (
    DegreeExceeded,
    IndexOutOfRange,
    NotOnSphere,
    NotOrthogonal,
    ShapeMismatch,
)

BASIS_NAME = "bombieri-weyl"
_EXACT_FACTORIAL_MAX_DEGREE = 20


@lru_cache(maxsize=None)
def _basis(n: int, d: int) -> tuple[np.ndarray, np.ndarray, dict]:
    exps = []
    for deg in range(d + 1):
        # graded; inside a degree, x_1 powers first
        for combo in itertools.combinations_with_replacement(range(n), deg):
            alpha = [0] * n
            for i in combo:
                alpha[i] += 1
            exps.append(tuple(alpha))
    exps_arr = np.array(exps, dtype=np.int64).reshape(len(exps), n)
    weights = np.array([bw_weight(a, d) for a in exps], dtype=float)
    index = {a: i for i, a in enumerate(exps)}
    exps_arr.setflags(write=False)
    weights.setflags(write=False)
    return exps_arr, weights, index


def monomial_exponents(n: int, d: int) -> np.ndarray:
    """Exponent table of shape (N, n), N = C(n+d, d), in storage order."""
    return _basis(n, d)[0]


def bw_weights(n: int, d: int) -> np.ndarray:
    return _basis(n, d)[1]


def basis_size(n: int, d: int) -> int:
    return math.comb(n + d, d)


def bw_weight(alpha: Sequence[int], d: int) -> float:
    k = sum(alpha)
    if k > d:
        raise DegreeExceeded(f"multi-index {tuple(alpha)} has degree {k} > {d}")
    if d <= _EXACT_FACTORIAL_MAX_DEGREE:
        num = math.factorial(d)
        den = math.factorial(d - k)
        for a in alpha:
            den *= math.factorial(a)
        return math.sqrt(num // den)
    log_w = math.lgamma(d + 1) - math.lgamma(d - k + 1) - sum(math.lgamma(a + 1) for a in alpha)
    return math.exp(0.5 * log_w)


@dataclass(frozen=True, eq=False)
class PolyTuple:
    """A c-tuple of n-variate polynomials of degree <= d (immutable).

    ``coeffs`` has shape (c, N); row j holds the Bombieri-Weyl coefficients of
    the (j+1)-th polynomial in the order of :func:`monomial_exponents`.
    """

    n: int
    c: int
    d: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.c < 1 or self.d < 0:
            raise ValueError(f"invalid shape n={self.n}, c={self.c}, d={self.d}")
        arr = np.array(self.coeffs, dtype=float, copy=True)
        expected = (self.c, basis_size(self.n, self.d))
        if arr.shape != expected:
            raise ShapeMismatch(f"coefficient array has shape {arr.shape}, expected {expected}")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.c, self.d)

    @property
    def k(self) -> int:
        return self.n - self.c

    @property
    def exponents(self) -> np.ndarray:
        return monomial_exponents(self.n, self.d)

    def raw(self) -> np.ndarray:
        """Coefficients in the plain monomial basis, shape (c, N)."""
        return self.coeffs * bw_weights(self.n, self.d)

    def coefficient(self, j: int, alpha: Sequence[int]) -> float:
        """BW coefficient of equation ``j`` (1-based) at multi-index ``alpha``."""
        idx = _basis(self.n, self.d)[2].get(tuple(int(a) for a in alpha))
        if idx is None:
            raise IndexOutOfRange(f"multi-index {tuple(alpha)} not in basis")
        return float(self.coeffs[j - 1, idx])

    def __eq__(self, other):
        if not isinstance(other, PolyTuple):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.shape, self.coeffs.tobytes()))

    def digest(self) -> str:
        """Short stable identifier derived from shape and coefficients."""
        h = hashlib.sha1(repr(self.shape).encode())
        h.update(np.ascontiguousarray(self.coeffs).tobytes())
        return h.hexdigest()[:12]

    def __add__(self, other: "PolyTuple") -> "PolyTuple":
        _check_same_shape(self, other)
        return PolyTuple(self.n, self.c, self.d, self.coeffs + other.coeffs)

    def __sub__(self, other: "PolyTuple") -> "PolyTuple":
        _check_same_shape(self, other)
        return PolyTuple(self.n, self.c, self.d, self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "PolyTuple":
        return PolyTuple(self.n, self.c, self.d, self.coeffs * float(s))

    __rmul__ = __mul__

    def __neg__(self) -> "PolyTuple":
        return self * -1.0

    def __repr__(self):
        return f"PolyTuple(n={self.n}, c={self.c}, d={self.d}, id={self.digest()})"


def _check_same_shape(p: PolyTuple, q: PolyTuple) -> None:
    if p.shape != q.shape:
        raise ShapeMismatch(f"shapes differ: {p.shape} vs {q.shape}")


def make_poly(n: int, c: int, d: int, entries: Iterable[tuple[int, Sequence[int], float]] = ()) -> PolyTuple:
    """Build a tuple from ``(j, alpha, value)`` entries given in the BW basis.

    ``j`` is 1-based. Repeated entries accumulate. Unlisted coefficients are zero.
    """
    _, _, index = _basis(n, d)
    coeffs = np.zeros((c, len(index)))
    for j, alpha, value in entries:
        if not 1 <= j <= c:
            raise IndexOutOfRange(f"equation index {j} outside 1..{c}")
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != n or min(alpha, default=0) < 0:
            raise IndexOutOfRange(f"multi-index {alpha} invalid for n={n}")
        if sum(alpha) > d:
            raise DegreeExceeded(f"multi-index {alpha} has degree {sum(alpha)} > {d}")
        coeffs[j - 1, index[alpha]] += float(value)
    return PolyTuple(n, c, d, coeffs)


def from_monomials(n: int, c: int, d: int, terms: Mapping[tuple[int, tuple[int, ...]], float]) -> PolyTuple:
    """Build a tuple from plain monomial coefficients ``{(j, alpha): value}``."""
    entries = [(j, alpha, value / bw_weight(alpha, d)) for (j, alpha), value in terms.items()]
    return make_poly(n, c, d, entries)


def from_raw(n: int, c: int, d: int, raw: np.ndarray) -> PolyTuple:
    raw = np.asarray(raw, dtype=float).reshape(c, -1)
    return PolyTuple(n, c, d, raw / bw_weights(n, d))


def zero_poly(n: int, c: int, d: int) -> PolyTuple:
    return PolyTuple(n, c, d, np.zeros((c, basis_size(n, d))))


def univariate(coeffs_low_to_high: Sequence[float], d: int | None = None) -> PolyTuple:
    """Single polynomial in one variable from plain coefficients a_0 + a_1 x + ..."""
    d = len(coeffs_low_to_high) - 1 if d is None else d
    terms = {(1, (i,)): float(a) for i, a in enumerate(coeffs_low_to_high) if a != 0}
    return from_monomials(1, 1, d, terms)


def stack(polys: Sequence[PolyTuple]) -> PolyTuple:
    """Concatenate tuples with equal n and d into one tuple of all their equations."""
    n, d = polys[0].n, polys[0].d
    if any(p.n != n or p.d != d for p in polys):
        raise ShapeMismatch("stack needs equal n and d")
    return PolyTuple(n, sum(p.c for p in polys), d, np.vstack([p.coeffs for p in polys]))


# -- evaluation ----------------------------------------------------------------

def _power_tables(X: np.ndarray, d: int):
    m, n = X.shape
    pw = np.empty((m, n, d + 1))
    pw[:, :, 0] = 1.0
    for k in range(1, d + 1):
        pw[:, :, k] = pw[:, :, k - 1] * X
    dpw = np.zeros_like(pw)
    for k in range(1, d + 1):
        dpw[:, :, k] = k * pw[:, :, k - 1]
    return pw, dpw


def _row_product(factors: list[np.ndarray]) -> np.ndarray:
    out = factors[0].copy()
    for f in factors[1:]:
        out *= f
    return out


def _monomials(exps: np.ndarray, X: np.ndarray, d: int, order: int = 0):
    """Monomial values and, optionally, first/second derivatives at points X (m, n)."""
    m, n = X.shape
    pw, dpw = _power_tables(X, d)
    # fac[i][:, a] = x_i ** exps[a, i]
    fac = [pw[:, i, exps[:, i]] for i in range(n)]
    mono = _row_product(fac)
    if order == 0:
        return mono, None, None
    dfac = [dpw[:, i, exps[:, i]] for i in range(n)]
    grad = np.empty((m, exps.shape[0], n))
    for i in range(n):
        grad[:, :, i] = _row_product([dfac[l] if l == i else fac[l] for l in range(n)])
    if order == 1:
        return mono, grad, None
    d2pw = np.zeros_like(pw)
    for k in range(2, d + 1):
        d2pw[:, :, k] = k * (k - 1) * pw[:, :, k - 2]
    d2fac = [d2pw[:, i, exps[:, i]] for i in range(n)]
    hess = np.empty((m, exps.shape[0], n, n))
    for i in range(n):
        for j in range(i, n):
            if i == j:
                parts = [d2fac[l] if l == i else fac[l] for l in range(n)]
            else:
                parts = [dfac[l] if l in (i, j) else fac[l] for l in range(n)]
            hess[:, :, i, j] = hess[:, :, j, i] = _row_product(parts)
    return mono, grad, hess


def _as_points(p: PolyTuple, X) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=float)
    single = X.ndim <= 1
    X = np.atleast_2d(X.reshape(1, -1) if single else X)
    if X.shape[1] != p.n:
        raise ShapeMismatch(f"points have dimension {X.shape[1]}, polynomial has n={p.n}")
    return X, single


def evaluate(p: PolyTuple, X) -> np.ndarray:
    """Values p(x) for points X of shape (m, n) -> (m, c); a single point -> (c,)."""
    X, single = _as_points(p, X)
    mono, _, _ = _monomials(p.exponents, X, p.d)
    out = mono @ p.raw().T
    return out[0] if single else out


@lru_cache(maxsize=None)
def _derivative_maps(n: int, d: int) -> np.ndarray:
    """Matrices D (1 + n + n*n, N, N) with raw(d^k p / dx...) = raw(p) @ D[k]:
    identity, then first partials, then second partials in row-major (i, j) order."""
    exps, _, index = _basis(n, d)
    N = len(exps)
    first = np.zeros((n, N, N))
    for a, e in enumerate(exps):
        for i in range(n):
            if e[i]:
                f = list(e)
                f[i] -= 1
                first[i, a, index[tuple(f)]] = e[i]
    second = np.einsum("iab,jbc->ijac", first, first).reshape(n * n, N, N)
    return np.concatenate([np.eye(N)[None], first, second])


def _derivatives(p: PolyTuple, X: np.ndarray, order: int):
    """Values, Jacobians and (order 2) Hessians from one product with the monomial table."""
    m, n, c = len(X), p.n, p.c
    maps = _derivative_maps(n, p.d)[: 1 + n + (n * n if order == 2 else 0)]
    W = np.einsum("ca,kab->bkc", p.raw(), maps).reshape(maps.shape[1], -1)
    out = (_monomials(p.exponents, X, p.d)[0] @ W).reshape(m, len(maps), c)
    val = out[:, 0]
    jac = np.transpose(out[:, 1:1 + n], (0, 2, 1))
    hes = np.transpose(out[:, 1 + n:].reshape(m, n, n, c), (0, 3, 1, 2)) if order == 2 else None
    return val, jac, hes


def jacobian(p: PolyTuple, X) -> tuple[np.ndarray, np.ndarray]:
    """Values (m, c) and Jacobians (m, c, n) at points X."""
    X, single = _as_points(p, X)
    val, jac, _ = _derivatives(p, X, 1)
    if single:
        return val[0], jac[0]
    return val, jac


def hessian(p: PolyTuple, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values (m, c), Jacobians (m, c, n) and Hessians (m, c, n, n) at points X."""
    X, single = _as_points(p, X)
    val, jac, hes = _derivatives(p, X, 2)
    if single:
        return val[0], jac[0], hes[0]
    return val, jac, hes


def eval_and_jacobian(p: PolyTuple, x) -> tuple[np.ndarray, np.ndarray]:
    """Value vector (c,) and Jacobian (c, n) of p at a single point."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return jacobian(p, x)


def feature_map(n: int, d: int, X) -> np.ndarray:
    """Rows ``w(alpha) * x**alpha`` so that ``p(x) = feature_map(x) @ coeffs[j]``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mono, _, _ = _monomials(monomial_exponents(n, d), X, d)
    return mono * bw_weights(n, d)


# -- Bombieri-Weyl geometry -------------------------------------------------------

def bw_inner(p: PolyTuple, q: PolyTuple) -> float:
    _check_same_shape(p, q)
    return float(np.sum(p.coeffs * q.coeffs))


def bw_norm(p: PolyTuple) -> float:
    return float(np.linalg.norm(p.coeffs))


def normalize(p: PolyTuple) -> PolyTuple:
    nrm = bw_norm(p)
    if nrm == 0:
        raise ValueError("cannot normalize the zero tuple")
    return p * (1.0 / nrm)


def elevate(p: PolyTuple, d: int) -> PolyTuple:
    """The same polynomials regarded as elements of the degree-<=d space."""
    if d < p.d:
        raise DegreeExceeded(f"cannot lower degree bound {p.d} to {d}")
    if d == p.d:
        return p
    _, _, index = _basis(p.n, d)
    raw = np.zeros((p.c, len(index)))
    for a, alpha in enumerate(map(tuple, p.exponents)):
        raw[:, index[alpha]] = p.raw()[:, a]
    return from_raw(p.n, p.c, d, raw)


def _to_tensor(n: int, d: int, raw_row: np.ndarray, size: int | None = None) -> np.ndarray:
    size = d + 1 if size is None else size
    T = np.zeros((size,) * n)
    for a, alpha in enumerate(map(tuple, monomial_exponents(n, d))):
        T[alpha] = raw_row[a]
    return T


def _from_tensor(n: int, d: int, T: np.ndarray) -> np.ndarray:
    return np.array([T[tuple(alpha)] for alpha in monomial_exponents(n, d)])


def _tensor_mul(A: np.ndarray, B: np.ndarray, size: int) -> np.ndarray:
    out = convolve(A, B, method="direct")
    return out[(slice(0, size),) * A.ndim]


def multiply(p: PolyTuple, q: PolyTuple) -> PolyTuple:
    """Componentwise product p_j * q_j (degree bound p.d + q.d)."""
    if p.n != q.n or p.c != q.c:
        raise ShapeMismatch("multiply needs equal n and c")
    D = p.d + q.d
    rows = []
    for j in range(p.c):
        A = _to_tensor(p.n, p.d, p.raw()[j], D + 1)
        B = _to_tensor(q.n, q.d, q.raw()[j], D + 1)
        rows.append(_from_tensor(p.n, D, _tensor_mul(A, B, D + 1)))
    return from_raw(p.n, p.c, D, np.array(rows))


def compose_orthogonal(p: PolyTuple, R, tol: float = 1e-10) -> PolyTuple:
    """The tuple x -> p(R x) for an orthogonal matrix R (BW norm is preserved)."""
    R = np.asarray(R, dtype=float)
    if R.shape != (p.n, p.n):
        raise ShapeMismatch(f"R has shape {R.shape}, expected {(p.n, p.n)}")
    if np.max(np.abs(R.T @ R - np.eye(p.n))) > tol:
        raise NotOrthogonal("R is not orthogonal within tolerance")
    n, d = p.n, p.d
    size = d + 1
    # powers[i][k] = tensor of (R[i] . x) ** k
    powers = []
    for i in range(n):
        lin = np.zeros((size,) * n)
        for j in range(n):
            e = [0] * n
            if d >= 1:
                e[j] = 1
                lin[tuple(e)] = R[i, j]
        row = [np.zeros((size,) * n)]
        row[0][(0,) * n] = 1.0
        for _ in range(d):
            row.append(_tensor_mul(row[-1], lin, size))
        powers.append(row)
    raw = p.raw()
    out = np.zeros((p.c, basis_size(n, d)))
    for a, alpha in enumerate(map(tuple, p.exponents)):
        if not np.any(raw[:, a]):
            continue
        T = powers[0][alpha[0]]
        for i in range(1, n):
            T = _tensor_mul(T, powers[i][alpha[i]], size)
        out += np.outer(raw[:, a], _from_tensor(n, d, T))
    return from_raw(n, p.c, d, out)


# -- sphere lift -------------------------------------------------------------------

def orthonormal_complement(u) -> np.ndarray:
    """Columns form an orthonormal basis of u-perp (u a unit vector).

    Uses the Householder reflection sending e_1 to u, so for u = e_1 the basis is
    e_2, ..., e_m in order.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    m = u.size
    v = u.copy()
    v[0] -= 1.0
    vv = v @ v
    if vv < 1e-30:
        return np.eye(m)[:, 1:]
    H = np.eye(m) - 2.0 * np.outer(v, v) / vv
    return H[:, 1:]


def stereographic_lift(x) -> np.ndarray:
    """pi(x) = (1, x) / sqrt(1 + |x|^2), a point of the unit sphere in R^{n+1}."""
    x = np.asarray(x, dtype=float)
    ones = np.ones(x.shape[:-1] + (1,))
    v = np.concatenate([ones, x], axis=-1)
    return v / np.sqrt(1.0 + np.sum(x * x, axis=-1, keepdims=True))


@lru_cache(maxsize=None)
def _homogeneous_exponents(n: int, d: int) -> np.ndarray:
    exps = monomial_exponents(n, d)
    h = np.column_stack([d - exps.sum(axis=1), exps])
    h.setflags(write=False)
    return h


def homogeneous_jacobian(p: PolyTuple, U) -> tuple[np.ndarray, np.ndarray]:
    """Values (m, c) and ambient gradients (m, c, n+1) of the homogenization at U."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    mono, grad, _ = _monomials(_homogeneous_exponents(p.n, p.d), U, p.d, order=1)
    raw = p.raw()
    return mono @ raw.T, np.einsum("ca,man->mcn", raw, grad)


def sphere_lift(p: PolyTuple, u, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Homogenization p-hat at u in S^n and its differential on T_u S^n (c x n).

    The tangent space basis is :func:`orthonormal_complement` of u.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != p.n + 1:
        raise ShapeMismatch(f"sphere point has dimension {u.size}, expected {p.n + 1}")
    if abs(np.linalg.norm(u) - 1.0) > tol:
        raise NotOnSphere(f"|u| = {np.linalg.norm(u)!r} is not 1")
    val, grad = homogeneous_jacobian(p, u)
    return val[0], grad[0] @ orthonormal_complement(u)


# -- serialization -------------------------------------------------------------------

def to_json_dict(p: PolyTuple) -> dict:
    entries = []
    for j in range(p.c):
        for a, alpha in enumerate(p.exponents):
            v = float(p.coeffs[j, a])
            if v != 0.0:
                entries.append({"eq": j + 1, "alpha": [int(t) for t in alpha], "value": v})
    return {"n": p.n, "c": p.c, "d": p.d, "basis": BASIS_NAME, "coeffs": entries}
