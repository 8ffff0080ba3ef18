"""Synthetic datasets and file formats (polynomial/net/decision JSON, cloud CSV)."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .covering import CoverNet
from .errors import NoFeasiblePoint, ParseError, SchemaMismatch
from .geometry import PointCloud, _gauss_newton, _univariate_roots, _scale
from .config import SolverConfig
from .poly import BASIS_NAME, PolyTuple, from_monomials, make_poly, to_json_dict
from .tester import Decision

SHAPES = ("circle", "segment", "cross", "point-pair", "uniform")


@dataclass
class SynthSpec:
    target: PolyTuple | str
    count: int
    noise_sigma: float = 0.0
    seed: int = 0
    radius: float = 0.5  # circle only
    n: int = 2  # uniform only

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be nonnegative")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if isinstance(self.target, str) and self.target not in SHAPES:
            raise ValueError(f"unknown shape {self.target!r}; choose from {SHAPES}")


def shape_poly(name: str, radius: float = 0.5) -> PolyTuple:
    """Defining polynomial of a named shape (the uniform shape has none)."""
    if name == "circle":
        return make_poly(2, 1, 2, [(1, [2, 0], 1.0), (1, [0, 2], 1.0), (1, [0, 0], -radius * radius)])
    if name == "segment":
        return make_poly(2, 1, 1, [(1, [0, 1], 1.0)])
    if name == "cross":
        return from_monomials(2, 1, 2, {(1, (2, 0)): 1.0, (1, (0, 2)): -1.0})
    if name == "point-pair":
        return from_monomials(1, 1, 2, {(1, (2,)): 1.0, (1, (1,)): -0.5})
    raise ValueError(f"shape {name!r} has no defining polynomial")


def _uniform_disk(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    g = rng.normal(size=(m, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.random(m)[:, None] ** (1.0 / n)


def _on_shape(rng: np.random.Generator, spec: SynthSpec, m: int) -> np.ndarray:
    name = spec.target
    if name == "circle":
        th = 2.0 * np.pi * rng.random(m)
        return spec.radius * np.column_stack([np.cos(th), np.sin(th)])
    if name == "segment":
        return np.column_stack([rng.uniform(-1.0, 1.0, m), np.zeros(m)])
    if name == "cross":
        t = rng.uniform(-1.0, 1.0, m)
        s = np.where(rng.random(m) < 0.5, 1.0, -1.0)
        return np.column_stack([t, s * t]) / math.sqrt(2.0)
    if name == "point-pair":
        return np.where(rng.random(m) < 0.5, 0.0, 0.5)[:, None]
    return _uniform_disk(rng, spec.n, m)


def _on_variety(rng: np.random.Generator, p: PolyTuple, m: int, cfg: SolverConfig) -> np.ndarray:
    """i.i.d. points of Z(p) ∩ D^n: uniform disk seeds pushed onto Z(p) by
    minimal-norm Gauss-Newton (the law is the pushforward of the uniform law)."""
    if p.n == 1:
        roots = _univariate_roots(p, cfg.feas_tol)
        if roots is None:
            return rng.uniform(-1.0, 1.0, (m, 1))
        if roots.size == 0:
            raise NoFeasiblePoint("no real root in [-1, 1]")
        return roots[rng.integers(0, roots.size, m)][:, None]
    tol = cfg.feas_tol * _scale(p)
    out, have = [], 0
    for _ in range(100):
        if have >= m:
            break
        batch = max(64, 2 * (m - have))
        Y, res = _gauss_newton(p, _uniform_disk(rng, p.n, batch), cfg.newton_iters, tol * 1e-2)
        ok = (res <= tol) & (np.linalg.norm(Y, axis=1) <= 1.0)
        out.append(Y[ok])
        have += int(ok.sum())
    if have == 0:
        raise NoFeasiblePoint("Z(p) does not meet the closed unit disk")
    if have < m:
        raise NoFeasiblePoint("could not draw enough points on Z(p) ∩ D^n")
    return np.concatenate(out)[:m]


def generate_dataset(spec: SynthSpec, cfg: SolverConfig | None = None) -> PointCloud:
    """Points on the target plus isotropic Gaussian noise, redrawn until inside D^n."""
    cfg = cfg or SolverConfig()
    rng = np.random.default_rng(spec.seed)
    n = spec.target.n if isinstance(spec.target, PolyTuple) else (1 if spec.target == "point-pair" else spec.n if spec.target == "uniform" else 2)

    def draw(m):
        if isinstance(spec.target, PolyTuple):
            return _on_variety(rng, spec.target, m, cfg)
        return _on_shape(rng, spec, m)

    X = draw(spec.count) if spec.count else np.zeros((0, n))
    if spec.noise_sigma > 0 and spec.count:
        Y = X + spec.noise_sigma * rng.normal(size=X.shape)
        bad = np.flatnonzero(np.linalg.norm(Y, axis=1) > 1.0)
        for _ in range(1000):
            if bad.size == 0:
                break
            Y[bad] = X[bad] + spec.noise_sigma * rng.normal(size=(bad.size, n))
            bad = bad[np.linalg.norm(Y[bad], axis=1) > 1.0]
        if bad.size:
            raise NoFeasiblePoint("noise keeps pushing points out of the disk")
        X = Y
    X = X / np.maximum(1.0, np.linalg.norm(X, axis=1, keepdims=True)) if len(X) else X
    return PointCloud(n, X)


# -- polynomial JSON --------------------------------------------------------------------------------

def poly_from_json_dict(obj: Any) -> PolyTuple:
    if not isinstance(obj, dict):
        raise SchemaMismatch("polynomial JSON must be an object")
    for key in ("n", "c", "d", "basis", "coeffs"):
        if key not in obj:
            raise SchemaMismatch(f"polynomial JSON is missing {key!r}")
    if obj["basis"] != BASIS_NAME:
        raise SchemaMismatch(f"unsupported basis {obj['basis']!r}, expected {BASIS_NAME!r}")
    for key in ("n", "c", "d"):
        if not isinstance(obj[key], int) or isinstance(obj[key], bool):
            raise ParseError("expected an integer", field=key)
    if not isinstance(obj["coeffs"], list):
        raise ParseError("expected a list", field="coeffs")
    entries = []
    for i, e in enumerate(obj["coeffs"]):
        where = f"coeffs[{i}]"
        if not isinstance(e, dict) or not {"eq", "alpha", "value"} <= set(e):
            raise SchemaMismatch(f"{where} needs eq, alpha and value")
        if not isinstance(e["eq"], int):
            raise ParseError("expected an integer", field=f"{where}.eq")
        if not isinstance(e["alpha"], list) or not all(isinstance(a, int) for a in e["alpha"]):
            raise ParseError("expected a list of integers", field=f"{where}.alpha")
        if not isinstance(e["value"], (int, float)) or isinstance(e["value"], bool):
            raise ParseError("expected a number", field=f"{where}.value")
        entries.append((e["eq"], e["alpha"], float(e["value"])))
    return make_poly(obj["n"], obj["c"], obj["d"], entries)


def _load_json(path: str | os.PathLike) -> Any:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc


def _dump_json(path: str | os.PathLike, obj: Any) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def save_poly(path, p: PolyTuple) -> None:
    _dump_json(path, to_json_dict(p))


def load_poly(path) -> PolyTuple:
    return poly_from_json_dict(_load_json(path))


# -- cloud CSV -------------------------------------------------------------------------------------

def cloud_to_csv(cloud: PointCloud) -> str:
    buf = io.StringIO()
    buf.write(",".join(f"x{i + 1}" for i in range(cloud.n)) + "\n")
    for row in cloud.points:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def save_cloud(path, cloud: PointCloud) -> None:
    Path(path).write_text(cloud_to_csv(cloud))


def load_cloud(path) -> PointCloud:
    with open(path, newline="") as fh:
        text = fh.read()
    return cloud_from_csv(text)


def cloud_from_csv(text: str) -> PointCloud:
    lines = text.splitlines()
    if not lines:
        raise SchemaMismatch("empty CSV: expected a header x1,...,xn")
    header = [h.strip() for h in lines[0].split(",")]
    n = len(header)
    if header != [f"x{i + 1}" for i in range(n)]:
        raise SchemaMismatch(f"CSV header must be x1,...,xn, got {lines[0]!r}")
    body = [ln for ln in lines[1:]]
    try:
        X = np.loadtxt(io.StringIO("\n".join(body)), delimiter=",", ndmin=2) if body else np.zeros((0, n))
    except ValueError:
        X = None
    if X is None or (len(X) and X.shape[1] != n) or len(X) != sum(1 for ln in body if ln.strip()):
        # slow path with diagnostics
        rows = []
        for lineno, row in enumerate(csv.reader(body), start=2):
            if not row:
                continue
            if len(row) != n:
                raise ParseError(f"expected {n} values, got {len(row)}", line=lineno)
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                bad = next(i for i, v in enumerate(row) if not _is_float(v))
                raise ParseError(f"not a number: {row[bad]!r}", line=lineno, field=header[bad]) from exc
        X = np.array(rows, dtype=float).reshape(-1, n)
    if len(X) and not np.all(np.isfinite(X)):
        raise ParseError("non-finite coordinate", line=2 + int(np.flatnonzero(~np.all(np.isfinite(X), axis=1))[0]))
    return PointCloud(n, X)


def _is_float(v: str) -> bool:
    try:
        float(v)
    except ValueError:
        return False
    return True


# -- nets and decisions ----------------------------------------------------------------------------------

def net_to_json_dict(net: CoverNet) -> dict:
    return {
        "n": net.n, "k": net.k, "d": net.d,
        "radius": net.radius, "margin_floor": net.margin_floor,
        "params": net.params, "margins": [float(m) for m in net.margins],
        "covering_radius": net.covering_radius, "seed": net.seed, "stats": net.stats,
        "centers": [to_json_dict(c) for c in net.centers],
    }


def net_from_json_dict(obj: Any) -> CoverNet:
    if not isinstance(obj, dict):
        raise SchemaMismatch("net JSON must be an object")
    for key in ("n", "k", "d", "radius", "margin_floor", "params", "centers"):
        if key not in obj:
            raise SchemaMismatch(f"net JSON is missing {key!r}")
    centers = [poly_from_json_dict(c) for c in obj["centers"]]
    return CoverNet(obj["n"], obj["k"], obj["d"], centers, obj["radius"], obj["margin_floor"],
                    obj["params"], list(obj.get("margins", [])), obj.get("covering_radius"),
                    obj.get("seed", 0), obj.get("stats", {}))


def save_net(path, net: CoverNet) -> None:
    _dump_json(path, net_to_json_dict(net))


def load_net(path) -> CoverNet:
    return net_from_json_dict(_load_json(path))


def decision_from_json_dict(obj: Any) -> Decision:
    if not isinstance(obj, dict):
        raise SchemaMismatch("decision JSON must be an object")
    for key in ("verdict", "certificate", "thresholds", "m_used", "mode"):
        if key not in obj:
            raise SchemaMismatch(f"decision JSON is missing {key!r}")
    cert = None if obj["certificate"] is None else poly_from_json_dict(obj["certificate"])
    return Decision(obj["verdict"], cert, obj.get("certificate_risk"), obj["thresholds"], obj["m_used"],
                    obj["mode"], obj.get("m_required", 0), obj.get("net_size", 0),
                    tuple(obj.get("min_risk_bounds", (math.nan, math.nan))), obj.get("stats", {}))


def save_decision(path, decision: Decision) -> None:
    _dump_json(path, decision.to_json_dict())


def load_decision(path) -> Decision:
    return decision_from_json_dict(_load_json(path))


def io_roundtrip(path, obj):
    """Write ``obj`` in its native format and read it back."""
    if isinstance(obj, PolyTuple):
        save_poly(path, obj)
        return load_poly(path)
    if isinstance(obj, PointCloud):
        save_cloud(path, obj)
        return load_cloud(path)
    if isinstance(obj, CoverNet):
        save_net(path, obj)
        return load_net(path)
    if isinstance(obj, Decision):
        save_decision(path, obj)
        return load_decision(path)
    raise TypeError(f"cannot serialize {type(obj).__name__}")
