"""Regularity margins bounding the distance to the discriminant.

For a tuple p and a point z of the disk the interior margin is
``(|p(z)|^2 + sigma_min(Jp(z))^2) ** 0.5``; on the boundary sphere the Jacobian
is restricted to the tangent space z-perp. Minimizing both over the disk gives a
one-sided certificate: ``dist(p, Sigma) <= a * margin``. On the sphere S^n the
distance to the homogeneous discriminant is known exactly (Raffalli's formula).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import SearchConfig
from .errors import NotOnBoundary, NotOnSphere, OutsideDisk, ShapeMismatch
from .poly import PolyTuple, homogeneous_jacobian, jacobian, stereographic_lift

log = logging.getLogger(__name__)

INTERIOR = "interior"
BOUNDARY = "boundary"
SPHERE = "sphere"


@dataclass
class MarginCertificate:
    witness: np.ndarray
    margin: float
    variant: str
    search_stats: dict = field(default_factory=dict)
    a: float = 1.0

    @property
    def distance_bound(self) -> float:
        """Upper bound ``a * margin`` on the BW distance to the discriminant."""
        return self.a * self.margin

    def to_json_dict(self) -> dict:
        return {
            "margin": float(self.margin),
            "witness": [float(t) for t in self.witness],
            "variant": self.variant,
            "distance_bound": float(self.distance_bound),
            "search_stats": self.search_stats,
        }


def sigma_min(J: np.ndarray) -> np.ndarray:
    """Smallest singular value of each c x k matrix in a (m, c, k) stack.

    When c > k the rank can never reach c and the value is defined as 0.
    """
    J = np.asarray(J, dtype=float)
    m, c, k = J.shape
    if c > k or k == 0:
        return np.zeros(m)
    if c == 1:
        return np.linalg.norm(J[:, 0, :], axis=1)
    return np.linalg.svd(J, compute_uv=False)[:, -1]


def householder_complements(Z: np.ndarray) -> np.ndarray:
    """Batch of orthonormal bases of z-perp, shape (m, n, n-1); same convention as
    :func:`variety_test.poly.orthonormal_complement`."""
    m, n = Z.shape
    V = Z.copy()
    V[:, 0] -= 1.0
    vv = np.sum(V * V, axis=1)
    small = vv < 1e-30
    vv = np.where(small, 1.0, vv)
    H = np.eye(n)[None] - 2.0 * V[:, :, None] * V[:, None, :] / vv[:, None, None]
    H[small] = np.eye(n)
    return H[:, :, 1:]


def interior_margins(p: PolyTuple, Z: np.ndarray) -> np.ndarray:
    val, jac = jacobian(p, np.atleast_2d(Z))
    s = sigma_min(jac)
    return np.sqrt(np.sum(val * val, axis=1) + s * s)


def boundary_margins(p: PolyTuple, Z: np.ndarray) -> np.ndarray:
    Z = np.atleast_2d(Z)
    val, jac = jacobian(p, Z)
    restricted = np.einsum("mcn,mnk->mck", jac, householder_complements(Z))
    s = sigma_min(restricted)
    return np.sqrt(np.sum(val * val, axis=1) + s * s)


def interior_margin_at(p: PolyTuple, z, tol: float = 1e-12) -> float:
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != p.n:
        raise ShapeMismatch(f"point has dimension {z.size}, expected {p.n}")
    if np.linalg.norm(z) > 1.0 + tol:
        raise OutsideDisk(f"|z| = {np.linalg.norm(z)!r} > 1")
    return float(interior_margins(p, z[None])[0])


def boundary_margin_at(p: PolyTuple, z, tol: float = 1e-10) -> float:
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != p.n:
        raise ShapeMismatch(f"point has dimension {z.size}, expected {p.n}")
    if abs(np.linalg.norm(z) - 1.0) > tol:
        raise NotOnBoundary(f"|z| = {np.linalg.norm(z)!r} is not 1")
    return float(boundary_margins(p, z[None])[0])


# -- grids ------------------------------------------------------------------------

def disk_grid(n: int, per_axis: int) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, per_axis)
    mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    return mesh[np.sum(mesh * mesh, axis=1) <= 1.0]


def sphere_grid(dim: int, size: int) -> np.ndarray:
    """Roughly uniform points on the unit sphere of R^dim."""
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    if dim == 2:
        t = 2.0 * np.pi * np.arange(size) / size
        return np.column_stack([np.cos(t), np.sin(t)])
    if dim == 3:
        i = np.arange(size) + 0.5
        phi = np.arccos(1.0 - 2.0 * i / size)
        theta = np.pi * (1.0 + 5.0 ** 0.5) * i
        return np.column_stack([np.cos(phi), np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta)])
    g = np.random.default_rng(12345).normal(size=(size, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def boundary_grid(n: int, cfg: SearchConfig) -> np.ndarray:
    size = cfg.boundary_grid if n <= 2 else max(cfg.boundary_grid, cfg.boundary_grid ** 2 // 16)
    return sphere_grid(n, size)


# -- minimization -------------------------------------------------------------------

def _project_disk(Z: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(Z, axis=1, keepdims=True)
    return np.where(r > 1.0, Z / np.maximum(r, 1e-300), Z)


def _project_sphere(Z: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(Z, axis=1, keepdims=True)
    return Z / np.maximum(r, 1e-300)


def _descend(obj: Callable[[np.ndarray], np.ndarray], Z0: np.ndarray, project, iters: int, tol: float):
    """Projected gradient descent with central-difference gradients and
    backtracking, run on all starts at once. Returns (points, values, iterations)."""
    Z = Z0.copy()
    f = obj(Z)
    m, n = Z.shape
    step = np.full(m, 0.25)
    h = 1e-6
    done = 0
    for it in range(iters):
        done = it + 1
        probes = np.concatenate([Z + h * e for e in np.eye(n)] + [Z - h * e for e in np.eye(n)])
        vals = obj(probes).reshape(2, n, m)
        grad = ((vals[0] - vals[1]) / (2 * h)).T
        improved = np.zeros(m, dtype=bool)
        new_f = f.copy()
        new_Z = Z.copy()
        trial_step = step.copy()
        active = np.ones(m, dtype=bool)
        for _ in range(30):
            if not active.any():
                break
            cand = project(Z[active] - trial_step[active, None] * grad[active])
            fc = obj(cand)
            ok = fc < f[active] - 1e-4 * trial_step[active] * np.sum(grad[active] ** 2, axis=1)
            idx = np.flatnonzero(active)
            acc = idx[ok]
            new_Z[acc] = cand[ok]
            new_f[acc] = fc[ok]
            improved[acc] = True
            active[acc] = False
            trial_step[idx[~ok]] *= 0.5
        gain = f - new_f
        Z, f = new_Z, new_f
        step = np.where(improved, np.minimum(trial_step * 2.0, 4.0), trial_step)
        if np.all(gain <= tol * np.maximum(1.0, np.abs(f))):
            break
    return Z, f, done


def _grid_then_descend(obj, grid: np.ndarray, project, cfg: SearchConfig):
    vals = obj(grid)
    order = np.argsort(vals, kind="stable")[: cfg.refine_starts]
    Z, f, iters = _descend(obj, grid[order], project, cfg.refine_iters, cfg.tol)
    # never report worse than the grid
    better = f <= vals[order]
    Z = np.where(better[:, None], Z, grid[order])
    f = np.where(better, f, vals[order])
    best = int(np.argmin(f))
    return Z[best], float(f[best]), {"grid_points": int(len(grid)), "refine_iterations": int(iters)}


def discriminant_margin(p: PolyTuple, cfg: SearchConfig | None = None, a: float = 1.0) -> MarginCertificate:
    """Minimize the interior and boundary margins over the disk.

    The result times ``a`` upper-bounds the BW distance from p to the discriminant.
    Ties go to the interior witness.
    """
    cfg = cfg or SearchConfig()
    n = p.n

    def f_int(Z):
        return interior_margins(p, Z) ** 2

    def f_bdy(Z):
        return boundary_margins(p, _project_sphere(Z)) ** 2

    zi, vi, si = _grid_then_descend(f_int, disk_grid(n, cfg.interior_grid), _project_disk, cfg)
    bgrid = boundary_grid(n, cfg)
    if n == 1:
        vals = f_bdy(bgrid)
        b = int(np.argmin(vals))
        zb, vb, sb = bgrid[b], float(vals[b]), {"grid_points": 2, "refine_iterations": 0}
    else:
        zb, vb, sb = _grid_then_descend(f_bdy, bgrid, _project_sphere, cfg)
        zb = zb / np.linalg.norm(zb)
    stats = {"interior": si, "boundary": sb}
    if vi <= vb:
        return MarginCertificate(zi, float(np.sqrt(max(vi, 0.0))), INTERIOR, stats, a)
    return MarginCertificate(zb, float(np.sqrt(max(vb, 0.0))), BOUNDARY, stats, a)


# -- sphere-exact distances -------------------------------------------------------------

def raffalli_distances(p: PolyTuple, U: np.ndarray) -> np.ndarray:
    """Exact BW distances from p to the sets of tuples whose homogenization has a
    singular zero at u, for each row u of U (all on S^n)."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    val, grad = homogeneous_jacobian(p, U)
    tangent = np.einsum("mcn,mnk->mck", grad, householder_complements(U))
    s = sigma_min(tangent)
    sq = np.sum(val * val, axis=1)
    if p.d > 0:
        sq = sq + s * s / p.d
    return np.sqrt(sq)


def raffalli_sphere_distance(p: PolyTuple, u, tol: float = 1e-12) -> float:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != p.n + 1:
        raise ShapeMismatch(f"sphere point has dimension {u.size}, expected {p.n + 1}")
    if abs(np.linalg.norm(u) - 1.0) > tol:
        raise NotOnSphere(f"|u| = {np.linalg.norm(u)!r} is not 1")
    return float(raffalli_distances(p, u[None])[0])


def sphere_discriminant_distance(p: PolyTuple, grid_size: int = 10_000) -> tuple[float, np.ndarray]:
    """Minimum of the Raffalli distance over a sphere grid: distance to the full
    homogeneous discriminant. Returns (value, minimizing u)."""
    U = sphere_grid(p.n + 1, grid_size)
    d = raffalli_distances(p, U)
    i = int(np.argmin(d))
    return float(d[i]), U[i]


def disk_discriminant_distance(p: PolyTuple, cfg: SearchConfig | None = None) -> tuple[float, np.ndarray]:
    """Exact BW distance to the interior discriminant: the Raffalli distance
    minimized over the stereographic image of the closed disk."""
    cfg = cfg or SearchConfig()

    def obj(Z):
        return raffalli_distances(p, stereographic_lift(Z)) ** 2

    z, v, _ = _grid_then_descend(obj, disk_grid(p.n, cfg.interior_grid), _project_disk, cfg)
    return float(np.sqrt(v)), z


def interior_margin_min(p: PolyTuple, cfg: SearchConfig | None = None) -> tuple[float, np.ndarray]:
    cfg = cfg or SearchConfig()
    z, v, _ = _grid_then_descend(lambda Z: interior_margins(p, Z) ** 2,
                                 disk_grid(p.n, cfg.interior_grid), _project_disk, cfg)
    return float(np.sqrt(v)), z


def calibrate_a(n: int, c: int, d: int, samples: int = 50, seed: int = 0,
                cfg: SearchConfig | None = None) -> dict:
    """Fit the constant ``a`` in ``dist(p, Sigma_D) <= a * interior margin``.

    Uses random Gaussian tuples, for which the left side is computed exactly from
    the sphere formula. Returns the maximal observed ratio and the raw ratios.
    """
    rng = np.random.default_rng(seed)
    from .poly import basis_size

    ratios = []
    for _ in range(samples):
        p = PolyTuple(n, c, d, rng.normal(size=(c, basis_size(n, d))))
        exact, _ = disk_discriminant_distance(p, cfg)
        margin, _ = interior_margin_min(p, cfg)
        if margin > 1e-12:
            ratios.append(exact / margin)
    ratios = np.array(ratios)
    log.info("calibrate a: n=%d c=%d d=%d ratio range [%.4g, %.4g]", n, c, d, ratios.min(), ratios.max())
    return {"a": float(ratios.max()), "ratios": ratios.tolist()}
