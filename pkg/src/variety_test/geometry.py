"""Metric queries on zero sets in the unit disk.

Nearest-point projection, sampling of Z(p) ∩ D^n, Hausdorff distances, Federer's
pairwise reach formula and Crofton-style volume estimates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from .config import SolverConfig
from .errors import EmptyCloud, NoFeasiblePoint, ShapeMismatch, TooFewPoints
from .poly import PolyTuple, bw_norm, evaluate, hessian, jacobian

log = logging.getLogger(__name__)

REACH_CAP = 1e6
DISK_TOL = 1e-9


@dataclass
class PointCloud:
    n: int
    points: np.ndarray
    max_gap: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.n)
        self.points = pts
        if len(pts) and np.max(np.linalg.norm(pts, axis=1)) > 1.0 + DISK_TOL:
            raise ShapeMismatch("point cloud leaves the closed unit disk")

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class ProjectionResult:
    nearest: np.ndarray
    distance: float
    residual: float
    converged: bool
    starts_used: int


@dataclass
class VolumeEstimate:
    estimate: float
    bound: float
    stderr: float
    trials: int
    constant: float = field(default=float("nan"))
    bezout_bound: float = field(default=float("nan"))  # constant * d^(n-k): what the counts can reach

    def __iter__(self):
        yield self.estimate
        yield self.bound


# -- small helpers ---------------------------------------------------------------------

def _scale(p: PolyTuple) -> float:
    return max(bw_norm(p), 1e-300)


def _pinv_step(val: np.ndarray, jac: np.ndarray) -> np.ndarray:
    """Minimal-norm Gauss-Newton step -J^+ val for stacks of c x n Jacobians."""
    if jac.shape[1] == 1:
        g = jac[:, 0, :]
        gg = np.sum(g * g, axis=1)
        return -(val[:, 0] / np.where(gg > 1e-300, gg, np.inf))[:, None] * g
    JJt = np.einsum("mcn,mdn->mcd", jac, jac)
    JJt += 1e-14 * (np.trace(JJt, axis1=1, axis2=2)[:, None, None] + 1e-300) * np.eye(jac.shape[1])
    return -np.einsum("mcn,mc->mn", jac, _solve_batch(JJt, val))


def _clip_rows(step: np.ndarray, limit: float) -> np.ndarray:
    s = np.linalg.norm(step, axis=1, keepdims=True)
    return np.where(s > limit, step * (limit / np.maximum(s, 1e-300)), step)


def _constraint_system(p: PolyTuple, Y: np.ndarray, boundary: bool, order: int = 2):
    """Values, Jacobians and (order 2) Hessians of p, optionally stacked with
    (|y|^2 - 1)/2."""
    if order == 2:
        val, jac, hes = hessian(p, Y)
    else:
        (val, jac), hes = jacobian(p, Y), None
    if not boundary:
        return val, jac, hes
    m, n = Y.shape
    g = 0.5 * (np.sum(Y * Y, axis=1) - 1.0)
    val = np.concatenate([val, g[:, None]], axis=1)
    jac = np.concatenate([jac, Y[:, None, :]], axis=1)
    if hes is not None:
        hes = np.concatenate([hes, np.broadcast_to(np.eye(n), (m, 1, n, n))], axis=1)
    return val, jac, hes


def _gauss_newton(p: PolyTuple, Y: np.ndarray, iters: int, tol: float, boundary: bool = False):
    """Drive Y onto {p = 0} (and |y| = 1 if boundary) by minimal-norm steps."""
    Y = Y.copy()
    res = np.full(len(Y), np.inf)
    act = np.arange(len(Y))
    for _ in range(iters + 1):
        val, jac, _ = _constraint_system(p, Y[act], boundary, order=1)
        r = np.linalg.norm(val, axis=1)
        res[act] = r
        keep = r > tol
        act = act[keep]
        if act.size == 0:
            break
        Y[act] += _clip_rows(_pinv_step(val[keep], jac[keep]), 0.5)
    else:
        val, _, _ = _constraint_system(p, Y[act], boundary, order=1)
        res[act] = np.linalg.norm(val, axis=1)
    return Y, res


def _solve_batch(K: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(K, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return np.einsum("mij,mj->mi", np.linalg.pinv(K), rhs)


def _kkt_newton(p: PolyTuple, X: np.ndarray, Y0: np.ndarray, iters: int, feas: float,
                boundary: bool = False):
    """Lagrange-Newton iteration for min |x - y|^2 / 2 subject to the constraints.

    Returns (Y, residual, converged)."""
    Y = Y0.copy()
    m, n = Y.shape
    val, jac, _ = _constraint_system(p, Y, boundary)
    c = val.shape[1]
    JJt = np.einsum("mcn,mdn->mcd", jac, jac) + 1e-14 * np.eye(c)
    lam = _solve_batch(JJt, np.einsum("mcn,mn->mc", jac, X - Y))
    converged = np.zeros(m, dtype=bool)
    act = np.arange(m)
    for _ in range(iters):
        val, jac, hes = _constraint_system(p, Y[act], boundary)
        la = lam[act]
        G = Y[act] - X[act] + np.einsum("mcn,mc->mn", jac, la)
        done = (np.linalg.norm(val, axis=1) <= feas) & (np.linalg.norm(G, axis=1) <= 1e-11)
        converged[act[done]] = True
        keep = ~done
        act = act[keep]
        if act.size == 0:
            break
        Ja = jac[keep]
        K = np.zeros((act.size, n + c, n + c))
        K[:, :n, :n] = np.eye(n) + np.einsum("mc,mcij->mij", la[keep], hes[keep])
        K[:, :n, n:] = np.transpose(Ja, (0, 2, 1))
        K[:, n:, :n] = Ja
        step = _solve_batch(K, -np.concatenate([G[keep], val[keep]], axis=1))
        Y[act] += _clip_rows(step[:, :n], 0.25)
        lam[act] += step[:, n:]
        bad = act[~np.all(np.isfinite(Y[act]), axis=1) | ~np.all(np.isfinite(lam[act]), axis=1)]
        if bad.size:
            Y[bad] = Y0[bad]
            lam[bad] = 0.0
    val, _, _ = _constraint_system(p, Y, boundary, order=1)
    return Y, np.linalg.norm(val, axis=1), converged


# -- univariate case --------------------------------------------------------------------

def _univariate_roots(p: PolyTuple, tol: float) -> np.ndarray | None:
    """Real roots in [-1, 1] of every component; None when p vanishes identically."""
    raw = p.raw()
    scale = _scale(p)
    if np.all(np.abs(raw) <= 1e-15 * max(1.0, np.max(np.abs(raw)))):
        return None
    lead = np.flatnonzero(np.abs(raw[0]) > 0)
    if lead.size == 0:
        roots = np.array([])
    else:
        coeffs = raw[0, : lead[-1] + 1]
        r = np.polynomial.polynomial.polyroots(coeffs) if coeffs.size > 1 else np.array([])
        r = np.atleast_1d(r)
        r = np.real(r[np.abs(np.imag(r)) <= 1e-7 * (1.0 + np.abs(r))])
    roots = np.asarray(roots if lead.size == 0 else r, dtype=float)
    # polish
    for _ in range(5):
        val, jac = jacobian(p, roots[:, None])
        d = jac[:, 0, 0]
        ok = np.abs(d) > 1e-300
        roots = np.where(ok, roots - np.where(ok, val[:, 0] / np.where(ok, d, 1.0), 0.0), roots)
    roots = roots[np.abs(roots) <= 1.0 + 1e-12]
    roots = np.clip(roots, -1.0, 1.0)
    if roots.size:
        vals = np.linalg.norm(evaluate(p, roots[:, None]), axis=1)
        roots = roots[vals <= max(tol, 1e-7) * scale]
    roots = np.unique(np.round(roots, 12))
    return roots


# -- sampling ---------------------------------------------------------------------------------

def _disk_seeds(n: int, count: int, seed: int) -> np.ndarray:
    m = 1 << max(4, int(math.ceil(math.log2(max(2, 2 * count)))))
    pts = 2.0 * qmc.Sobol(d=n, scramble=True, seed=seed).random(m) - 1.0
    pts = pts[np.sum(pts * pts, axis=1) <= 1.0]
    return pts[:count]


def _sphere_seeds(n: int, count: int, seed: int) -> np.ndarray:
    if n == 2:
        t = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    g = np.random.default_rng(seed).normal(size=(count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _dedupe(P: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    if len(P) == 0:
        return P
    keys = np.round(P / tol).astype(np.int64)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return P[np.sort(idx)]


def farthest_point_subsample(P: np.ndarray, count: int, first: int = 0) -> np.ndarray:
    """Greedy farthest-point selection of ``count`` row indices of P."""
    m = len(P)
    count = min(count, m)
    chosen = np.empty(count, dtype=np.int64)
    dist = np.full(m, np.inf)
    cols = [np.ascontiguousarray(P[:, i]) for i in range(P.shape[1])]
    buf = np.empty(m)
    acc = np.empty(m)
    cur = first
    for i in range(count):
        chosen[i] = cur
        acc.fill(0.0)
        for col in cols:
            np.subtract(col, col[cur], out=buf)
            buf *= buf
            acc += buf
        np.minimum(dist, acc, out=dist)
        cur = int(np.argmax(dist))
    return chosen


def _max_gap(P: np.ndarray) -> float:
    if len(P) < 2:
        return 0.0
    d, _ = cKDTree(P).query(P, k=2)
    return float(np.max(d[:, 1]))


def _circle_roots(p: PolyTuple, tol: float, grid: int = 2048) -> np.ndarray:
    """Zeros of p on the unit circle (n = 2, c = 1) from sign changes on a fine
    angle grid, refined by safeguarded Newton in the angle."""
    th = 2.0 * np.pi * np.arange(grid + 1) / grid
    v = evaluate(p, np.column_stack([np.cos(th), np.sin(th)]))[:, 0]
    i = np.flatnonzero((np.sign(v[:-1]) * np.sign(v[1:]) <= 0) & (v[:-1] != 0) | (v[:-1] == 0))
    lo, hi = th[i], th[i + 1]
    flo = v[i]
    t = 0.5 * (lo + hi)
    for _ in range(60):
        val, jac = jacobian(p, np.column_stack([np.cos(t), np.sin(t)]))
        f = val[:, 0]
        df = -jac[:, 0, 0] * np.sin(t) + jac[:, 0, 1] * np.cos(t)
        left = np.sign(f) == np.sign(flo)
        lo = np.where(left, t, lo)
        flo = np.where(left, f, flo)
        hi = np.where(left, hi, t)
        newton = t - f / np.where(df != 0, df, np.inf)
        ok = (newton > lo) & (newton < hi)
        t = np.where(ok, newton, 0.5 * (lo + hi))
        if np.all(np.abs(f) <= tol * 1e-3):
            break
    pts = np.column_stack([np.cos(t), np.sin(t)])
    ok = np.abs(evaluate(p, pts)[:, 0]) <= tol
    return _dedupe(pts[ok], 1e-8)


def boundary_points(p: PolyTuple, cfg: SolverConfig | None = None, seeds: int = 256) -> np.ndarray:
    """Points of Z(p) on the unit sphere (empty if the slice is overdetermined)."""
    cfg = cfg or SolverConfig()
    if p.c + 1 > p.n:
        return np.zeros((0, p.n))
    tol = cfg.feas_tol * _scale(p)
    if p.n == 2:
        return _circle_roots(p, tol)
    S = _sphere_seeds(p.n, seeds * max(1, p.n - 1), cfg.seed + 1)
    Y, res = _gauss_newton(p, S, cfg.newton_iters, tol * 1e-2, boundary=True)
    ok = res <= tol
    return _dedupe(Y[ok] / np.linalg.norm(Y[ok], axis=1, keepdims=True), 1e-8)


def sample_variety(p: PolyTuple, count: int, cfg: SolverConfig | None = None) -> PointCloud:
    """``count`` points of Z(p) ∩ D^n spread out by farthest-point selection."""
    return _sample_variety(p, count, cfg or SolverConfig())[0]


def _sample_variety(p: PolyTuple, count: int, cfg: SolverConfig) -> tuple[PointCloud, np.ndarray]:
    n = p.n
    empty = np.zeros((0, n))
    if count <= 0:
        return PointCloud(n, empty, 0.0), empty
    if n == 1:
        roots = _univariate_roots(p, cfg.feas_tol)
        if roots is None:
            pts = np.linspace(-1.0, 1.0, count)[:, None]
            return PointCloud(1, pts, 2.0 / max(count - 1, 1)), empty
        if roots.size == 0:
            raise NoFeasiblePoint("no real root in [-1, 1]")
        pts = roots[np.arange(count) % roots.size][:, None]
        return PointCloud(1, pts, 0.0), empty
    tol = cfg.feas_tol * _scale(p)
    seeds = _disk_seeds(n, count * cfg.sample_oversample, cfg.seed)
    Y, res = _gauss_newton(p, seeds, cfg.newton_iters, tol * 1e-2)
    inside = (res <= tol) & (np.linalg.norm(Y, axis=1) <= 1.0)
    bnd = boundary_points(p, cfg)
    pool = _dedupe(np.concatenate([bnd, Y[inside]]))
    if len(pool) == 0:
        raise NoFeasiblePoint("Z(p) does not meet the closed unit disk")
    idx = farthest_point_subsample(pool, count)
    pts = pool[idx]
    if len(pts) < count:
        pts = pts[np.arange(count) % len(pts)]
    return PointCloud(n, pts, _max_gap(_dedupe(pts))), bnd


# -- projection ----------------------------------------------------------------------------------

@dataclass
class VarietyIndex:
    """Dense samples of Z(p) ∩ D^n with KD-trees, reused by projections."""

    p: PolyTuple
    samples: np.ndarray
    boundary: np.ndarray
    tree: cKDTree | None
    btree: cKDTree | None
    roots: np.ndarray | None = None  # n = 1 only; None means Z = D^1


_INDEX_CACHE: dict = {}


def variety_index(p: PolyTuple, cfg: SolverConfig | None = None, count: int | None = None) -> VarietyIndex:
    cfg = cfg or SolverConfig()
    count = count or cfg.seed_samples
    key = (p, count, cfg.feas_tol, cfg.newton_iters, cfg.sample_oversample, cfg.seed)
    hit = _INDEX_CACHE.get(key)
    if hit is not None:
        return hit
    if p.n == 1:
        roots = _univariate_roots(p, cfg.feas_tol)
        if roots is not None and roots.size == 0:
            raise NoFeasiblePoint("no real root in [-1, 1]")
        pts = np.linspace(-1, 1, 3)[:, None] if roots is None else roots[:, None]
        idx = VarietyIndex(p, pts, np.zeros((0, 1)), None, None, roots)
    else:
        cloud, bnd = _sample_variety(p, count, cfg)
        samples = _dedupe(cloud.points)
        idx = VarietyIndex(p, samples, bnd, cKDTree(samples), cKDTree(bnd) if len(bnd) else None)
    if len(_INDEX_CACHE) > 64:
        _INDEX_CACHE.clear()
    _INDEX_CACHE[key] = idx
    return idx


def _project_univariate(idx: VarietyIndex, X: np.ndarray):
    x = X[:, 0]
    if idx.roots is None:
        return X.copy(), np.zeros(len(X))
    diff = np.abs(x[:, None] - idx.roots[None, :])
    j = np.argmin(diff, axis=1)
    return idx.roots[j][:, None], diff[np.arange(len(x)), j]


def project_points(p: PolyTuple, X, cfg: SolverConfig | None = None, starts: int | None = None,
                   random_starts: int = 0, index: VarietyIndex | None = None):
    """Nearest points of Z(p) ∩ D^n for many query points at once.

    Returns (nearest (m, n), distance (m,), residual (m,), converged (m,)).
    """
    cfg = cfg or SolverConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != p.n:
        raise ShapeMismatch(f"points have dimension {X.shape[1]}, polynomial has n={p.n}")
    idx = index or variety_index(p, cfg)
    m, n = X.shape
    if n == 1:
        Y, dist = _project_univariate(idx, X)
        res = np.linalg.norm(evaluate(p, Y), axis=1) if m else np.zeros(0)
        return Y, dist, res, np.ones(m, dtype=bool)
    scale = _scale(p)
    feas = cfg.feas_tol * scale
    k = min(starts or cfg.bulk_starts, len(idx.samples))
    _, nn = idx.tree.query(X, k=k)
    nn = nn.reshape(m, k)
    seeds = [idx.samples[nn[:, s]] for s in range(k)]
    if random_starts:
        rng = np.random.default_rng(cfg.seed)
        for _ in range(random_starts):
            Z = X + 0.5 * rng.normal(size=X.shape)
            Z, _ = _gauss_newton(p, Z, 30, feas * 1e-2)
            seeds.append(Z)
    S = np.concatenate(seeds)
    Xr = np.tile(X, (len(seeds), 1))
    Y, res, conv = _kkt_newton(p, Xr, S, cfg.newton_iters, feas)
    norms = np.linalg.norm(Y, axis=1)
    good = conv & (norms <= 1.0 + DISK_TOL) & np.all(np.isfinite(Y), axis=1)
    dist = np.where(good, np.linalg.norm(Y - Xr, axis=1), np.inf).reshape(len(seeds), m)
    Y = Y.reshape(len(seeds), m, n)
    # the seed samples are feasible points themselves
    seed_dist = np.linalg.norm(S - Xr, axis=1).reshape(len(seeds), m)
    seed_dist[k:] = np.inf
    best_newton = np.argmin(dist, axis=0)
    best_seed = np.argmin(seed_dist, axis=0)
    cols = np.arange(m)
    nd = dist[best_newton, cols]
    sd = seed_dist[best_seed, cols]
    use_newton = nd <= sd
    nearest = np.where(use_newton[:, None], Y[best_newton, cols], S.reshape(len(seeds), m, n)[best_seed, cols])
    out_dist = np.minimum(nd, sd)
    converged = use_newton.copy()
    exited = ((norms > 1.0 + DISK_TOL) & conv).reshape(len(seeds), m).any(axis=0) | ~converged
    if idx.btree is not None and exited.any():
        E = np.flatnonzero(exited)
        kb = min(k, len(idx.boundary))
        _, bn = idx.btree.query(X[E], k=kb)
        bn = bn.reshape(len(E), kb)
        BS = np.concatenate([idx.boundary[bn[:, s]] for s in range(kb)])
        XE = np.tile(X[E], (kb, 1))
        YB, _, cb = _kkt_newton(p, XE, BS, cfg.newton_iters, feas, boundary=True)
        # boundary samples are feasible too
        cand = np.concatenate([np.where(cb[:, None], YB, BS), BS])
        cd = np.linalg.norm(cand - np.concatenate([XE, XE]), axis=1).reshape(2 * kb, len(E))
        jb = np.argmin(cd, axis=0)
        bd = cd[jb, np.arange(len(E))]
        better = bd < out_dist[E]
        sel = E[better]
        nearest[sel] = cand.reshape(2 * kb, len(E), n)[jb[better], np.flatnonzero(better)]
        out_dist[sel] = bd[better]
        converged[sel] = (jb[better] < kb) & cb.reshape(kb, len(E))[np.minimum(jb[better], kb - 1), np.flatnonzero(better)]
    res = np.linalg.norm(evaluate(p, nearest), axis=1)
    return nearest, out_dist, res, converged


def project_to_variety(p: PolyTuple, x, cfg: SolverConfig | None = None) -> ProjectionResult:
    """Nearest point of Z(p) ∩ D^n to x, from nearest-sample and random starts."""
    cfg = cfg or SolverConfig()
    x = np.asarray(x, dtype=float).reshape(1, -1)
    starts = cfg.nearest_starts
    Y, dist, res, conv = project_points(p, x, cfg, starts=starts, random_starts=cfg.random_starts)
    used = 1 if p.n == 1 else min(starts, len(variety_index(p, cfg).samples)) + cfg.random_starts
    return ProjectionResult(Y[0], float(dist[0]), float(res[0]), bool(conv[0]), used)


def distances_to_variety(p: PolyTuple, X, cfg: SolverConfig | None = None, chunk: int = 50_000) -> np.ndarray:
    """dist(x, Z(p) ∩ D^n) for every row of X, chunked for large clouds."""
    cfg = cfg or SolverConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    idx = variety_index(p, cfg)
    out = np.empty(len(X))
    for s in range(0, len(X), chunk):
        out[s:s + chunk] = project_points(p, X[s:s + chunk], cfg, index=idx)[1]
    return out


# -- Hausdorff distances ------------------------------------------------------------------------

def _as_cloud_array(A) -> np.ndarray:
    return A.points if isinstance(A, PointCloud) else np.atleast_2d(np.asarray(A, dtype=float))


def hausdorff_estimate(A, B) -> float:
    """Hausdorff distance between two finite point sets."""
    a, b = _as_cloud_array(A), _as_cloud_array(B)
    if len(a) == 0 or len(b) == 0:
        raise EmptyCloud("Hausdorff distance needs two nonempty clouds")
    if a.shape[1] != b.shape[1]:
        raise ShapeMismatch("clouds live in different dimensions")
    dab, _ = cKDTree(b).query(a)
    dba, _ = cKDTree(a).query(b)
    return float(max(dab.max(), dba.max()))


def variety_hausdorff(p: PolyTuple, q: PolyTuple, count: int = 2000, cfg: SolverConfig | None = None) -> float:
    """Hausdorff distance of Z(p) ∩ D^n and Z(q) ∩ D^n.

    Each side is sampled and projected exactly onto the other variety, so the
    error comes only from missing the maximizing sample, not from sample spacing.
    """
    cfg = cfg or SolverConfig()
    a = sample_variety(p, count, cfg).points
    b = sample_variety(q, count, cfg).points
    da = distances_to_variety(q, a, cfg)
    db = distances_to_variety(p, b, cfg)
    return float(max(da.max(), db.max()))


# -- reach -------------------------------------------------------------------------------------------

def tangent_bases(p: PolyTuple, X) -> np.ndarray:
    """Orthonormal bases (m, n, k) of the Jacobian kernels at the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _, jac = jacobian(p, X)
    _, _, Vt = np.linalg.svd(jac, full_matrices=True)
    return np.transpose(Vt[:, p.c:, :], (0, 2, 1))


def reach_estimate(cloud, tangents: np.ndarray, chunk: int = 1024) -> float:
    """Federer's formula inf |z1 - z2|^2 / (2 |proj_{N z1}(z1 - z2)|) over ordered pairs."""
    P = _as_cloud_array(cloud)
    if len(P) < 2:
        raise TooFewPoints("reach estimation needs at least two points")
    T = np.asarray(tangents, dtype=float)
    if T.ndim == 2:
        T = T[:, :, None]
    best = np.inf
    for s in range(0, len(P), chunk):
        z1 = P[s:s + chunk]
        V = z1[:, None, :] - P[None, :, :]  # (b, m, n)
        Tb = T[s:s + chunk]
        tang = np.einsum("bmn,bnk->bmk", V, Tb)
        normal = V - np.einsum("bmk,bnk->bmn", tang, Tb)
        nn = np.linalg.norm(normal, axis=2)
        vv = np.sum(V * V, axis=2)
        ok = nn >= 1e-12
        if ok.any():
            best = min(best, float(np.min(vv[ok] / (2.0 * nn[ok]))))
    return min(best, REACH_CAP)


# -- Crofton volume ------------------------------------------------------------------------------------

def unit_ball_volume(k: int) -> float:
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def _random_planes(rng: np.random.Generator, n: int, c: int, trials: int):
    """Random affine c-planes meeting D^n: orthonormal directions V (t, n, c) and an
    offset o (t, n) uniform in the unit disk of the orthogonal complement."""
    G = rng.normal(size=(trials, n, n))
    Q, R = np.linalg.qr(G)
    Q = Q * np.sign(np.diagonal(R, axis1=1, axis2=2))[:, None, :]
    V, W = Q[:, :, :c], Q[:, :, c:]
    k = n - c
    g = rng.normal(size=(trials, k))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = rng.random(trials) ** (1.0 / k)
    o = np.einsum("tnk,tk->tn", W, g * rad[:, None])
    return V, o


_CROFTON_CONSTANTS: dict = {}


def crofton_constant(n: int, k: int, trials: int = 1_000_000) -> float:
    """Normalization vol(D^k) / E[#(plane ∩ flat unit k-disk)], fixed on a flat disk."""
    key = (n, k)
    if key not in _CROFTON_CONSTANTS:
        if (n, k) == (2, 1):
            value = math.pi  # mean hit count of a diameter is 2/pi
        else:
            rng = np.random.default_rng(2024)
            c = n - k
            V, o = _random_planes(rng, n, c, trials)
            # solve o + V t in span(e_1..e_k): last c coordinates vanish
            A = V[:, k:, :]
            t = _solve_batch(A, -o[:, k:])
            y = o + np.einsum("tnc,tc->tn", V, t)
            hits = np.linalg.norm(y, axis=1) <= 1.0
            value = unit_ball_volume(k) / hits.mean()
        _CROFTON_CONSTANTS[key] = value
    return _CROFTON_CONSTANTS[key]


def _count_line_roots(p: PolyTuple, V: np.ndarray, o: np.ndarray) -> np.ndarray:
    """Real zeros of p restricted to each chord o + t v, |t| <= h."""
    trials = len(o)
    h = np.sqrt(np.clip(1.0 - np.sum(o * o, axis=1), 0.0, None))
    deg = max(p.d, 1)
    nodes = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))  # on [-1, 1]
    pts = o[:, None, :] + (h[:, None] * nodes[None, :])[:, :, None] * V[:, None, :, 0]
    vals = evaluate(p, pts.reshape(-1, p.n))[:, 0].reshape(trials, deg + 1)
    vander = np.polynomial.chebyshev.chebvander(nodes, deg)
    coef = np.linalg.solve(vander, vals.T).T
    counts = np.zeros(trials, dtype=np.int64)
    scale = np.max(np.abs(coef), axis=1)
    for i in range(trials):
        ci = coef[i]
        if scale[i] == 0.0:
            continue
        nz = np.flatnonzero(np.abs(ci) > 1e-13 * scale[i])
        if nz.size == 0 or nz[-1] == 0:
            continue
        r = np.polynomial.chebyshev.chebroots(ci[: nz[-1] + 1])
        real = np.real(r[np.abs(np.imag(r)) <= 1e-9])
        counts[i] = int(np.sum(np.abs(real) <= 1.0))
    return counts


def _count_plane_roots(p: PolyTuple, V: np.ndarray, o: np.ndarray, grid: int = 24) -> np.ndarray:
    """Isolated zeros of p on each c-disk slice, found by seeded Newton (c >= 2)."""
    c = V.shape[2]
    axis = np.linspace(-1, 1, grid)
    G = np.stack(np.meshgrid(*([axis] * c), indexing="ij"), -1).reshape(-1, c)
    G = G[np.sum(G * G, axis=1) <= 1.0]
    counts = np.zeros(len(o), dtype=np.int64)
    tol = 1e-10 * _scale(p)
    for i in range(len(o)):
        h = math.sqrt(max(0.0, 1.0 - float(o[i] @ o[i])))
        T = G * h
        for _ in range(40):
            Y = o[i] + T @ V[i].T
            val, jac = jacobian(p, Y)
            J = jac @ V[i]
            T = T - _clip_rows(np.einsum("mcd,md->mc", np.linalg.pinv(J), val), 0.2 * max(h, 1e-3))
        Y = o[i] + T @ V[i].T
        ok = (np.linalg.norm(evaluate(p, Y), axis=1) <= tol) & (np.linalg.norm(T, axis=1) <= h)
        counts[i] = len(_dedupe(T[ok], 1e-6))
    return counts


def crofton_volume_estimate(p: PolyTuple, k: int, trials: int = 10_000, rng_seed: int = 0) -> VolumeEstimate:
    """Monte Carlo k-volume of Z(p) ∩ D^n from intersection counts with random
    affine (n-k)-planes, together with the bound vol(D^k) * d^(n-k).

    Every plane meets Z(p) in at most d^(n-k) points, so the estimate never
    exceeds ``bezout_bound`` = constant * d^(n-k). That exceeds ``bound``
    whenever planes meeting D^n outnumber planes meeting a flat k-disk
    (for n=2, k=1: 2*pi vs 4), and curves such as circles of radius > 2/pi
    do exceed ``bound``."""
    if k != p.n - p.c:
        raise ShapeMismatch(f"k must equal n - c = {p.n - p.c}")
    rng = np.random.default_rng(rng_seed)
    V, o = _random_planes(rng, p.n, p.c, trials)
    counts = _count_line_roots(p, V, o) if p.c == 1 else _count_plane_roots(p, V, o)
    K = crofton_constant(p.n, k)
    vals = K * counts
    bound = unit_ball_volume(k) * float(p.d) ** p.c
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return VolumeEstimate(float(vals.mean()), bound, stderr, trials, K, K * float(p.d) ** p.c)
