"""Command-line shell: JSON on stdout, logs on stderr.

Exit codes: 0 success (or Accept), 3 Reject, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources

import numpy as np

from . import calibration
from .config import load_config
from .covering import build_net
from .data import (SHAPES, SynthSpec, cloud_to_csv, generate_dataset, load_cloud, load_net, load_poly,
                   net_to_json_dict, save_cloud, save_net)
from .discriminant import discriminant_margin
from .errors import InsufficientSamples, VarietyTestError
from .geometry import hausdorff_estimate, project_to_variety
from .risk import empirical_risk, sample_complexity
from .tester import REJECT, lipschitz_probe, test_hypothesis

log = logging.getLogger("variety_test")

EXIT_OK, EXIT_ERROR, EXIT_REJECT = 0, 2, 3


def load_schema(command: str) -> dict:
    """JSON schema of a subcommand's stdout document."""
    return json.loads(resources.files("variety_test").joinpath("schemas", f"{command}.json").read_text())


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def cmd_plan(args, cfg) -> int:
    c1, c2, c3 = cfg.constants.sample_constants(args.n, args.k, args.d)
    plan = sample_complexity(args.eps, args.delta,
                             (args.c1 if args.c1 is not None else c1,
                              args.c2 if args.c2 is not None else c2,
                              args.c3 if args.c3 is not None else c3), cfg.constants.c0)
    _emit(plan.to_json_dict())
    return EXIT_OK


def cmd_margin(args, cfg) -> int:
    if args.grid is not None:
        cfg.search.interior_grid = args.grid
    if args.refine is not None:
        cfg.search.refine_iters = args.refine
    cert = discriminant_margin(load_poly(args.poly), cfg.search, cfg.constants.a)
    _emit(cert.to_json_dict())
    return EXIT_OK


def cmd_dist(args, cfg) -> int:
    res = project_to_variety(load_poly(args.poly), np.array(args.point), cfg.solver)
    _emit({"distance": res.distance, "nearest": [float(v) for v in res.nearest], "residual": res.residual,
           "converged": res.converged, "starts_used": res.starts_used})
    return EXIT_OK


def cmd_risk(args, cfg) -> int:
    report = empirical_risk(load_poly(args.poly), load_cloud(args.data), cfg.solver)
    _emit(report.to_json_dict(include_points=args.per_point))
    return EXIT_OK


def cmd_net(args, cfg) -> int:
    net = build_net(args.n, args.k, args.d, args.eps, cfg.constants, args.budget, args.seed, cfg,
                    probes=args.probes)
    if args.out:
        save_net(args.out, net)
    summary = net_to_json_dict(net)
    summary.pop("centers")
    summary["size"] = len(net)
    summary["out"] = args.out
    _emit(summary)
    return EXIT_OK


def cmd_test(args, cfg) -> int:
    cloud = load_cloud(args.data)
    net = load_net(args.net) if args.net else None
    try:
        decision = test_hypothesis(cloud, args.n, args.k, args.d, args.eps, args.delta, net=net, mode=args.mode,
                                   seed=args.seed, config=cfg, budget=args.budget,
                                   check_samples=not args.no_sample_check)
    except InsufficientSamples as exc:
        log.error("%s", exc)
        _emit({"error": "InsufficientSamples", "message": str(exc), "have": exc.have, "required": exc.required})
        return EXIT_ERROR
    _emit(decision.to_json_dict())
    return EXIT_REJECT if decision.verdict == REJECT else EXIT_OK


def cmd_synth(args, cfg) -> int:
    target = load_poly(args.poly) if args.poly else args.shape
    if target is None:
        raise argparse.ArgumentTypeError("synth needs --shape or --poly")
    cloud = generate_dataset(SynthSpec(target, args.count, args.noise, args.seed, args.radius, args.dim), cfg.solver)
    if args.out:
        save_cloud(args.out, cloud)
        _emit({"out": args.out, "count": len(cloud), "n": cloud.n})
    else:
        sys.stdout.write(cloud_to_csv(cloud))
    return EXIT_OK


def cmd_hausdorff(args, cfg) -> int:
    _emit({"hausdorff": hausdorff_estimate(load_cloud(args.a), load_cloud(args.b))})
    return EXIT_OK


def cmd_probe(args, cfg) -> int:
    rows = lipschitz_probe(load_poly(args.poly), load_poly(args.direction), args.steps, cfg, count=args.samples)
    _emit({"rows": [{"step": r.step, "hausdorff": r.hausdorff,
                     "ratio": None if np.isnan(r.ratio) else r.ratio} for r in rows]})
    return EXIT_OK


def cmd_calibrate(args, cfg) -> int:
    fitted = calibration.calibrate(cfg, args.what, quick=args.quick)
    if args.out:
        cfg.save(args.out)
    _emit({"fitted": fitted, "out": args.out})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="variety-test", description="Test whether a point cloud lies near a "
                                 "real algebraic variety of given dimension and degree.")
    ap.add_argument("--config", help="config JSON (default: $VARIETY_TEST_CONFIG, else built-in defaults)")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="sample size for uniform risk deviation eps at confidence 1-delta")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--c3", type=float)
    p.add_argument("--n", type=int, default=2, help="ambient dimension (sets the default c2)")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--d", type=int, default=2)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("margin", help="regularity margin certificate of a polynomial tuple")
    p.add_argument("--poly", required=True)
    p.add_argument("--grid", type=int, help="interior grid points per axis")
    p.add_argument("--refine", type=int, help="descent iterations")
    p.set_defaults(func=cmd_margin)

    p = sub.add_parser("dist", help="distance from a point to Z(p) in the disk")
    p.add_argument("--poly", required=True)
    p.add_argument("--point", type=_floats, required=True)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("risk", help="empirical risk of a cloud against Z(p)")
    p.add_argument("--poly", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--per-point", action="store_true")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("net", help="build a budgeted net of smooth degree-2d varieties")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probes", type=int, help="probe varieties for the covering radius report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_net)

    p = sub.add_parser("test", help="accept/reject the variety hypothesis for a cloud")
    p.add_argument("--data", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--net")
    p.add_argument("--budget", type=int)
    p.add_argument("--mode", choices=("net", "erm"), default="net")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-sample-check", action="store_true",
                   help="skip the sample-size requirement (the guarantee no longer applies)")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("synth", help="synthetic cloud on a named shape or a polynomial's zero set")
    p.add_argument("--shape", choices=SHAPES)
    p.add_argument("--poly")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--radius", type=float, default=0.5)
    p.add_argument("--dim", type=int, default=2, help="dimension of the uniform shape")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("hausdorff", help="Hausdorff distance between two CSV clouds")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_hausdorff)

    p = sub.add_parser("probe", help="zero-set motion along p + s * direction")
    p.add_argument("--poly", required=True)
    p.add_argument("--direction", required=True)
    p.add_argument("--steps", type=_floats, default=[1e-1, 1e-2, 1e-3, 1e-4])
    p.add_argument("--samples", type=int)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("calibrate", help="fit a, alpha/beta, a3 and L and write them to a config")
    p.add_argument("--what", choices=("a", "alpha-beta", "a3", "L", "all"), default="all")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (VarietyTestError, OSError, ValueError, argparse.ArgumentTypeError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
