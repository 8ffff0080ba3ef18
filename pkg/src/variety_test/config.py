"""Configuration: non-explicit constants, solver tolerances and grid sizes."""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import SchemaMismatch

CONFIG_ENV_VAR = "VARIETY_TEST_CONFIG"


def coefficient_dimension(n: int, k: int, d: int) -> int:
    """Dimension (n-k) * C(n+2d, 2d) of the degree-2d tuple space the net lives in."""
    return (n - k) * math.comb(n + 2 * d, 2 * d)


@dataclass
class Constants:
    """Constants whose existence is proven but whose values are not explicit.

    ``None`` for ``a2``/``c2`` means "the coefficient-space dimension for (n, k, d)";
    ``None`` for ``a3`` means ``1 / (2 a d^2)``.
    """

    a: float = 1.0
    a1: float = 1.0
    a2: float | None = None
    a3: float | None = None
    alpha: float = 1.0
    beta: float = 1.0
    c0: float = 0.5
    c1: float = 32.0
    c2: float | None = None
    c3: float = 32.0
    L: float = 1.0

    def resolved_a2(self, n: int, k: int, d: int) -> float:
        return float(coefficient_dimension(n, k, d)) if self.a2 is None else self.a2

    def resolved_c2(self, n: int, k: int, d: int) -> float:
        return float(coefficient_dimension(n, k, d)) if self.c2 is None else self.c2

    def resolved_a3(self, d: int) -> float:
        return 1.0 / (2.0 * self.a * d * d) if self.a3 is None else self.a3

    def sample_constants(self, n: int, k: int, d: int) -> tuple[float, float, float]:
        return (self.c1, self.resolved_c2(n, k, d), self.c3)


@dataclass
class SearchConfig:
    """Grid search + descent used for regularity margins."""

    interior_grid: int = 64  # points per axis of the disk grid
    boundary_grid: int = 256  # points on the boundary circle (n=2); scaled for n=3
    refine_starts: int = 10
    refine_iters: int = 50
    tol: float = 1e-8


@dataclass
class SolverConfig:
    """Nearest-point projection and variety sampling."""

    nearest_starts: int = 8
    random_starts: int = 8
    newton_iters: int = 100
    feas_tol: float = 1e-10
    dist_tol: float = 1e-6
    seed_samples: int = 1024  # variety samples used to seed projections
    bulk_starts: int = 3  # seeds per point when projecting whole clouds
    sample_oversample: int = 4
    seed: int = 0


@dataclass
class NetConfig:
    budget: int = 300
    raw_fraction: float = 0.25  # share of candidates drawn directly in degree 2d
    product_fraction: float = 0.25  # share of degree-d candidates times a factor positive on the disk
    pool_factor: float = 4.0  # certified candidates per kept center before greedy selection
    max_pool: int = 1200
    field_grid: int = 32  # grid points per axis for distance-field comparisons
    center_samples: int = 1024  # variety samples per center (distance fields)
    probes: int = 40
    probe_samples: int = 256


@dataclass
class TesterConfig:
    bins: int = 256  # histogram bins per axis for screened risks
    erm_iters: int = 30
    erm_points: int = 4000
    erm_candidates: int = 3
    lipschitz_samples: int = 2000


@dataclass
class Config:
    constants: Constants = field(default_factory=Constants)
    search: SearchConfig = field(default_factory=SearchConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    net: NetConfig = field(default_factory=NetConfig)
    tester: TesterConfig = field(default_factory=TesterConfig)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Config":
        sections = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = set(data) - set(sections)
        if unknown:
            raise SchemaMismatch(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for f in dataclasses.fields(cls):
            section_cls = type(getattr(cls(), f.name))
            raw = data.get(f.name, {})
            names = {g.name for g in dataclasses.fields(section_cls)}
            bad = set(raw) - names
            if bad:
                raise SchemaMismatch(f"unknown keys in [{f.name}]: {sorted(bad)}")
            kwargs[f.name] = section_cls(**raw)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for section in (self.constants, self.search, self.solver, self.net, self.tester):
            for f in dataclasses.fields(section):
                v = getattr(section, f.name)
                if v is None or f.name in ("seed",):
                    continue
                if f.name in ("raw_fraction", "product_fraction"):
                    if not 0.0 <= v <= 1.0:
                        raise SchemaMismatch(f"net.{f.name} must lie in [0, 1]")
                    continue
                if not (isinstance(v, (int, float)) and v > 0):
                    raise SchemaMismatch(f"{type(section).__name__}.{f.name} must be positive, got {v!r}")

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Config":
        return cls.from_dict(json.loads(Path(path).read_text()))


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Explicit path, else $VARIETY_TEST_CONFIG, else defaults."""
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        return Config.load(path)
    return Config()
