"""Empirical fits of the constants whose existence is proven but whose values are
not explicit: a (margin vs. true distance), alpha/beta (smoothing margins),
a3 (reach vs. margin) and L (Lipschitz constant of the zero set)."""

from __future__ import annotations

import logging

import numpy as np

from .config import Config
from .covering import fit_alpha_beta, smoothing_sweep
from .discriminant import calibrate_a as _calibrate_a
from .discriminant import discriminant_margin
from .geometry import reach_estimate, sample_variety, tangent_bases
from .poly import PolyTuple, basis_size, bw_norm, from_monomials, make_poly, normalize
from .tester import lipschitz_probe

log = logging.getLogger(__name__)

SMOOTHING_TS = tuple(10.0 ** -e for e in range(1, 7))


def circle(r: float) -> PolyTuple:
    return make_poly(2, 1, 2, [(1, [2, 0], 1.0), (1, [0, 2], 1.0), (1, [0, 0], -r * r)])


def normalized_margin(p: PolyTuple, config: Config) -> float:
    """tau = margin(p) / |p|, the scale-free regularity margin."""
    return discriminant_margin(p, config.search).margin / bw_norm(p)


def calibrate_a(config: Config, samples: int = 20, seed: int = 0) -> dict:
    return _calibrate_a(1, 1, 2, samples, seed, config.search)


def calibrate_alpha_beta(config: Config, ts=SMOOTHING_TS) -> dict:
    p = from_monomials(1, 1, 2, {(1, (2,)): 1.0, (1, (1,)): -0.5})
    rows = smoothing_sweep(p, ts, 2000, config)
    fit = fit_alpha_beta(rows)
    fit["rows"] = rows
    return fit


def reach_ratios(radii, config: Config, count: int = 500) -> list[dict]:
    out = []
    for r in radii:
        p = circle(float(r))
        pts = sample_variety(p, count, config.solver).points
        reach = reach_estimate(pts, tangent_bases(p, pts))
        tau = normalized_margin(p, config)
        out.append({"radius": float(r), "reach": reach, "tau": tau, "ratio": reach / tau})
    return out


def calibrate_a3(config: Config, radii=np.linspace(0.1, 0.9, 9), safety: float = 0.9) -> dict:
    rows = reach_ratios(radii, config)
    return {"a3": safety * min(r["ratio"] for r in rows), "rows": rows}


def random_directions(n: int, c: int, d: int, count: int, seed: int) -> list[PolyTuple]:
    rng = np.random.default_rng(seed)
    return [normalize(PolyTuple(n, c, d, rng.normal(size=(c, basis_size(n, d))))) for _ in range(count)]


def calibrate_L(config: Config, directions: int = 20, step: float = 1e-3, seed: int = 0, count: int = 500) -> dict:
    """Largest observed ratio * tau on the circle of radius 1/2."""
    p = circle(0.5)
    tau = normalized_margin(p, config)
    vals = []
    for g in random_directions(2, 1, 2, directions, seed):
        row = lipschitz_probe(p, g, [step], config, count=count)[0]
        vals.append(row.ratio * tau)
    return {"L": float(max(vals)), "tau": tau, "values": vals}


def calibrate(config: Config, what: str = "all", quick: bool = False) -> dict:
    """Fit the requested constants and store them in ``config.constants``."""
    out = {}
    if what in ("a", "all"):
        out["a"] = calibrate_a(config, samples=5 if quick else 20)["a"]
        config.constants.a = out["a"]
    if what in ("alpha-beta", "all"):
        fit = calibrate_alpha_beta(config, SMOOTHING_TS[:3] if quick else SMOOTHING_TS)
        out["alpha"], out["beta"] = fit["alpha"], fit["beta"]
        config.constants.alpha, config.constants.beta = fit["alpha"], fit["beta"]
    if what in ("a3", "all"):
        out["a3"] = calibrate_a3(config, np.linspace(0.1, 0.9, 3 if quick else 9))["a3"]
        config.constants.a3 = out["a3"]
    if what in ("L", "all"):
        out["L"] = calibrate_L(config, directions=3 if quick else 20, count=200 if quick else 500)["L"]
        config.constants.L = out["L"]
    log.info("calibrated %s", out)
    return out
