"""Empirical risk, Hoeffding tails and sample-complexity planning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, ROUND_CEILING

import numpy as np

from .config import Constants, SolverConfig
from .errors import DeltaOutOfRange, EmptyCloud, EpsilonOutOfRange
from .geometry import PointCloud, distances_to_variety
from .poly import PolyTuple


@dataclass
class RiskReport:
    value: float
    per_point: np.ndarray
    poly_id: str

    def to_json_dict(self, include_points: bool = False) -> dict:
        out = {"value": float(self.value), "m": int(len(self.per_point)), "poly_id": self.poly_id}
        if include_points:
            out["per_point"] = [float(v) for v in self.per_point]
        return out


@dataclass
class SamplePlan:
    epsilon: float
    delta: float
    m: int
    constants: tuple[float, float, float]

    def to_json_dict(self) -> dict:
        c1, c2, c3 = self.constants
        return {"epsilon": self.epsilon, "delta": self.delta, "m": self.m,
                "constants": {"c1": c1, "c2": c2, "c3": c3}}


def _points(cloud) -> np.ndarray:
    return cloud.points if isinstance(cloud, PointCloud) else np.atleast_2d(np.asarray(cloud, dtype=float))


def empirical_risk(p: PolyTuple, cloud, cfg: SolverConfig | None = None) -> RiskReport:
    """Mean squared distance from the cloud to Z(p) ∩ D^n."""
    X = _points(cloud)
    if len(X) == 0:
        raise EmptyCloud("empirical risk of an empty cloud")
    d2 = np.clip(distances_to_variety(p, X, cfg) ** 2, 0.0, 4.0)
    return RiskReport(float(d2.mean()), d2, p.digest())


def hoeffding_tail(m: int, eps: float) -> float:
    """2 exp(-m eps^2 / 32)."""
    return 2.0 * math.exp(-m * eps * eps / 32.0)


def sample_complexity(eps: float, delta: float, constants: tuple[float, float, float] = (32.0, 1.0, 32.0),
                      c0: float = Constants.c0) -> SamplePlan:
    """Smallest m with m >= (c3 / eps^2) ln(c1 eps^-c2 / delta), and at least 1."""
    eps, delta = float(eps), float(delta)
    if not 0.0 < eps < c0:
        raise EpsilonOutOfRange(f"eps must lie in (0, {c0}), got {eps!r}")
    if not 0.0 < delta < 1.0:
        raise DeltaOutOfRange(f"delta must lie in (0, 1), got {delta!r}")
    c1, c2, c3 = (float(c) for c in constants)
    log_term = math.log(c1) - c2 * math.log(eps) - math.log(delta)
    value = Decimal(repr(c3 / (eps * eps))) * Decimal(repr(log_term))
    m = int(value.to_integral_value(rounding=ROUND_CEILING))
    return SamplePlan(float(eps), float(delta), max(1, m), (c1, c2, c3))
