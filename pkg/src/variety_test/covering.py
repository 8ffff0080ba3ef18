"""Finite nets of smooth degree-2d varieties and the hypersurface smoothing p^2 - t.

The theoretical net is a lattice in C^1 norm and far too large to enumerate, so
:func:`build_net` draws candidates from a low-discrepancy sequence on the unit
BW sphere, keeps the ones whose regularity margin clears ``alpha * eps^beta``
and reports an empirical covering radius against random degree-d probes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_CEILING

import numpy as np
from scipy.stats import norm as normal_dist
from scipy.stats import qmc

from .config import Config, Constants, NetConfig, SearchConfig, SolverConfig
from .discriminant import discriminant_margin
from .errors import BudgetExhausted, NoFeasiblePoint, NonPositiveT, NotHypersurface
from .geometry import hausdorff_estimate, variety_hausdorff, variety_index
from .poly import PolyTuple, basis_size, bw_norm, elevate, evaluate, multiply, normalize

log = logging.getLogger(__name__)

DISK_DIAMETER = 2.0


@dataclass
class CoverNet:
    n: int
    k: int
    d: int
    centers: list[PolyTuple]
    radius: float
    margin_floor: float
    params: dict
    margins: list[float] = field(default_factory=list)
    covering_radius: float | None = None
    seed: int = 0
    stats: dict = field(default_factory=dict)
    _indices: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.centers)

    def center_index(self, i: int, count: int, cfg: SolverConfig | None = None):
        """Dense samples + KD-tree of center i (kept on the net)."""
        key = (i, count)
        if key not in self._indices:
            self._indices[key] = variety_index(self.centers[i], cfg or SolverConfig(), count)
        return self._indices[key]


def net_size_bound(eps: float, a1: float, a2: float) -> int:
    """ceil(a1 * eps^-a2), computed exactly from the decimal expansions of the floats."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    log10 = math.log10(a1) - a2 * math.log10(eps)
    if log10 > 300:
        return 10 ** 301  # effectively unbounded
    value = Decimal(repr(float(a1))) * Decimal(repr(float(eps))) ** Decimal(repr(-float(a2)))
    return int(value.to_integral_value(rounding=ROUND_CEILING))


def smooth_approximation(p: PolyTuple, t: float) -> PolyTuple:
    """q_t = p^2 - t in the degree-2d BW basis."""
    if p.c != 1:
        raise NotHypersurface(f"smoothing needs a single equation, got c={p.c}")
    if not t > 0:
        raise NonPositiveT(f"t must be positive, got {t!r}")
    sq = multiply(p, p)
    coeffs = sq.coeffs.copy()
    coeffs[0, 0] -= t  # constant monomial comes first, with weight 1
    return PolyTuple(p.n, 1, 2 * p.d, coeffs)


def _sphere_sequence(dim: int, count: int, seed: int) -> np.ndarray:
    """Low-discrepancy points on the unit sphere of R^dim (Sobol -> Gaussian -> normalize)."""
    m = 1 << max(1, int(math.ceil(math.log2(max(2, count)))))
    u = qmc.Sobol(d=dim, scramble=True, seed=seed).random(m)[:count]
    g = normal_dist.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _meets_disk(p: PolyTuple, cfg: SolverConfig, count: int) -> bool:
    try:
        variety_index(p, cfg, count)
    except NoFeasiblePoint:
        return False
    return True


def _candidate(n: int, c: int, d: int, vec: np.ndarray, raw: bool) -> PolyTuple:
    if raw:
        return PolyTuple(n, c, 2 * d, vec.reshape(c, -1))
    return normalize(elevate(PolyTuple(n, c, d, vec.reshape(c, -1)), 2 * d))


def _candidate_kind(i: int, raw_fraction: float, product_fraction: float) -> str:
    """Deterministic interleaving of the three candidate families."""
    if math.floor((i + 1) * raw_fraction) > math.floor(i * raw_fraction):
        return "raw"
    if math.floor((i + 1) * product_fraction + 0.5) > math.floor(i * product_fraction + 0.5):
        return "product"
    return "embedded"


def _positive_factor(n: int, c: int, d: int, rng: np.random.Generator, grid: np.ndarray) -> PolyTuple:
    """Random degree-d tuple with every component positive on the disk.

    Multiplying by it keeps Z ∩ D^n but moves the tuple in coefficient space,
    which reaches well-conditioned centers the elevated family misses."""
    v = normalize(PolyTuple(n, c, d, rng.normal(size=(c, basis_size(n, d)))))
    vals = evaluate(v, grid)
    lift = -vals.min(axis=0) + rng.uniform(0.05, 1.5, size=c)
    coeffs = v.coeffs.copy()
    coeffs[:, 0] += lift
    return PolyTuple(n, c, d, coeffs)


def build_net(n: int, k: int, d: int, eps: float, params: Constants | None = None,
              budget: int | None = None, seed: int = 0, config: Config | None = None,
              probes: int | None = None) -> CoverNet:
    """Budgeted net of unit-norm degree-2d centers with margin >= alpha * eps^beta."""
    config = config or Config()
    params = params or config.constants
    ncfg: NetConfig = config.net
    scfg: SearchConfig = config.search
    solver: SolverConfig = config.solver
    budget = ncfg.budget if budget is None else budget
    if budget < 1:
        raise ValueError("budget must be at least 1")
    c = n - k
    a2 = params.resolved_a2(n, k, d)
    limit = min(budget, net_size_bound(eps, params.a1, a2))
    floor = params.alpha * eps ** params.beta
    if eps >= DISK_DIAMETER:
        # every nonempty subset of the disk is within eps of every other one: a single
        # smooth center covers, and the margin floor (sized for small eps) is dropped
        floor, limit = min(floor, scfg.tol), 1

    dim_d, dim_2d = c * basis_size(n, d), c * basis_size(n, 2 * d)
    pool_target = max(limit, min(ncfg.max_pool, int(math.ceil(ncfg.pool_factor * limit))))
    max_candidates = max(64, 8 * pool_target)
    embedded = _sphere_sequence(dim_d, max_candidates, seed)
    raw = _sphere_sequence(dim_2d, max_candidates, seed + 1)
    rng = np.random.default_rng(seed)
    dgrid = field_grid(n, 64 if n <= 2 else 24)
    pool, margins = [], []
    tried = smoothed = 0
    ie = ir = 0
    while len(pool) < pool_target and tried < max_candidates:
        kind = _candidate_kind(tried, ncfg.raw_fraction, ncfg.product_fraction)
        tried += 1
        if kind == "raw":
            cand = _candidate(n, c, d, raw[ir], True)
            ir += 1
        else:
            base = PolyTuple(n, c, d, embedded[ie].reshape(c, -1))
            ie += 1
            if kind == "product":
                base = multiply(base, _positive_factor(n, c, d, rng, dgrid))
                cand = normalize(base)
            else:
                cand = normalize(elevate(base, 2 * d))
        cert = discriminant_margin(cand, scfg)
        if cert.margin < floor and kind == "embedded" and c == 1 and d >= 1:
            # push a near-singular degree-d candidate off the discriminant
            for t in (eps * eps / 16.0, eps * eps / 4.0, eps * eps):
                alt = normalize(smooth_approximation(base, t))
                alt_cert = discriminant_margin(alt, scfg)
                if alt_cert.margin >= floor and _meets_disk(alt, solver, ncfg.probe_samples):
                    cand, cert = alt, alt_cert
                    smoothed += 1
                    break
        if cert.margin < floor:
            continue
        if not _meets_disk(cand, solver, ncfg.probe_samples):
            continue
        pool.append(cand)
        margins.append(cert.margin)
    if len(pool) > limit:
        grid = field_grid(n, ncfg.field_grid)
        fields = np.stack([distance_field(q, grid, solver, ncfg.probe_samples) for q in pool])
        keep = maximin_selection(fields, limit)
        centers = [pool[i] for i in keep]
        margins = [margins[i] for i in keep]
    else:
        centers = pool
    if not centers:
        raise BudgetExhausted(f"no candidate among {tried} cleared the margin floor {floor:.3g}")
    net = CoverNet(n, k, d, centers, float(eps), float(floor),
                   {"alpha": params.alpha, "beta": params.beta, "a1": params.a1, "a2": a2},
                   margins, None, seed,
                   {"candidates": tried, "certified": len(pool), "smoothed": smoothed, "limit": limit})
    nprobe = ncfg.probes if probes is None else probes
    if nprobe > 0:
        net.covering_radius = empirical_covering_radius(net, random_probes(n, k, d, nprobe, seed + 2, solver),
                                                        solver, ncfg.probe_samples)
    log.info("net: %d centers from %d candidates (floor %.3g, covering radius %s)",
             len(centers), tried, floor, net.covering_radius)
    return net


def field_grid(n: int, per_axis: int) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, per_axis)
    G = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    return G[np.sum(G * G, axis=1) <= 1.0 + 1e-12]


def distance_field(p: PolyTuple, grid: np.ndarray, cfg: SolverConfig, samples: int) -> np.ndarray:
    """Distances from grid points to sampled Z(p); for compact sets A, B of the disk
    dist_H(A, B) = sup |d_A - d_B|, so fields turn Hausdorff into a sup norm."""
    idx = variety_index(p, cfg, samples)
    if idx.tree is None:
        pts = idx.samples
        return np.min(np.abs(grid[:, None, 0] - pts[None, :, 0]), axis=1)
    return idx.tree.query(grid)[0]


def maximin_selection(fields: np.ndarray, count: int) -> list[int]:
    """Greedy farthest-point selection in the sup norm, starting from row 0."""
    chosen = [0]
    dist = np.max(np.abs(fields - fields[0]), axis=1)
    while len(chosen) < min(count, len(fields)):
        i = int(np.argmax(dist))
        chosen.append(i)
        dist = np.minimum(dist, np.max(np.abs(fields - fields[i]), axis=1))
    return chosen


def random_probes(n: int, k: int, d: int, count: int, seed: int, cfg: SolverConfig | None = None) -> list[PolyTuple]:
    """Random unit-norm degree-d tuples whose zero set meets the disk."""
    cfg = cfg or SolverConfig()
    rng = np.random.default_rng(seed)
    c = n - k
    out = []
    for _ in range(50 * count):
        if len(out) == count:
            break
        p = normalize(PolyTuple(n, c, d, rng.normal(size=(c, basis_size(n, d)))))
        if _meets_disk(p, cfg, 64):
            out.append(p)
    return out


def empirical_covering_radius(net: CoverNet, probes: list[PolyTuple], cfg: SolverConfig | None = None,
                              samples: int = 256) -> float:
    """max over probes of min over centers of the sampled Hausdorff distance."""
    cfg = cfg or SolverConfig()
    worst = 0.0
    center_pts = [net.center_index(i, samples, cfg).samples for i in range(len(net))]
    for q in probes:
        qp = variety_index(q, cfg, samples).samples
        best = min(hausdorff_estimate(qp, cp) for cp in center_pts)
        worst = max(worst, best)
    return float(worst)


def nearest_center(net: CoverNet, q: PolyTuple, cfg: SolverConfig | None = None, samples: int = 256) -> tuple[int, float]:
    cfg = cfg or SolverConfig()
    qp = variety_index(q, cfg, samples).samples
    dists = [hausdorff_estimate(qp, net.center_index(i, samples, cfg).samples) for i in range(len(net))]
    i = int(np.argmin(dists))
    return i, float(dists[i])


def check_center(center: PolyTuple, floor: float, cfg: Config | None = None) -> dict:
    """Independent re-check of the three center properties."""
    cfg = cfg or Config()
    margin = discriminant_margin(center, cfg.search).margin
    return {"unit_norm": abs(bw_norm(center) - 1.0) <= 1e-9,
            "margin_ok": margin >= floor,
            "margin": margin,
            "meets_disk": _meets_disk(center, cfg.solver, 64)}


def smoothing_sweep(p: PolyTuple, ts, count: int = 2000, cfg: Config | None = None) -> list[dict]:
    """Hausdorff distance and normalized margin of p^2 - t along a list of t."""
    cfg = cfg or Config()
    rows = []
    for t in ts:
        q = smooth_approximation(p, t)
        rows.append({"t": float(t),
                     "hausdorff": variety_hausdorff(p, q, count, cfg.solver),
                     "margin": discriminant_margin(normalize(q), cfg.search).margin})
    return rows


def fit_alpha_beta(rows: list[dict]) -> dict:
    """Fit margin = alpha * hausdorff^beta in log-log coordinates; alpha is lowered
    so that the fitted curve sits below every observation."""
    h = np.log([r["hausdorff"] for r in rows])
    m = np.log([r["margin"] for r in rows])
    beta, log_alpha = np.polyfit(h, m, 1)
    log_alpha = min(log_alpha, float(np.min(m - beta * h)))
    return {"alpha": float(np.exp(log_alpha)), "beta": float(beta)}
