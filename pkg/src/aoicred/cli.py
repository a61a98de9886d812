"""Command-line front end.

Exit codes: 0 success, 2 configuration/usage error, 3 infeasible credibility
bound, 4 numerical failure, 5 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from aoicred import __version__, experiments, multi, single
from aoicred.model import (
    ASSchedule,
    ConvergenceError,
    InfeasibleError,
    ProcessSpec,
    RecoveryFunction,
    RRPolicy,
    ServiceDistribution,
    SystemConfig,
    ThresholdPolicy,
)
from aoicred.simulator import NOISE_KINDS, rr_slots, simulate_schedule

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4, 5
OUTPUT_ENV = "AOICRED_OUTPUT_DIR"

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_count = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "service": {
            "type": "object",
            "additionalProperties": False,
            "required": ["parameter"],
            "properties": {
                "kind": {"enum": ["exponential"]},
                "parameter": _pos,
                "parameter_is_rate": {"type": "boolean"},
            },
        },
        "processes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["rate", "alpha"],
                "properties": {
                    "rate": _pos,
                    "alpha": _nonneg,
                    "beta": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
        "tau": {"type": ["number", "null"]},
        "policy": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "xi": _nonneg,
                "m": {"type": "array", "minItems": 1, "items": _count},
                "wait_slot": {"type": "integer", "minimum": 0},
            },
        },
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epochs": _count,
                "seed": {"type": "integer", "minimum": 0},
                "noise": {"enum": list(NOISE_KINDS)},
                "estimator": {"enum": ["rao-blackwell", "raw"]},
            },
        },
        "optimize": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "xi_max": _nonneg,
                "grid": {"type": "integer", "minimum": 2},
                "m_max": _count,
                "cycles": _count,
                "method": {"enum": ["auto", "analytic", "simulate"]},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "betas": {"type": "array", "minItems": 1, "items": _num},
                "alphas": {"type": "array", "minItems": 1, "items": _nonneg},
                "cycles": _count,
                "eval_cycles": _count,
                "m_max": _count,
                "xi_max": _nonneg,
                "grid": {"type": "integer", "minimum": 2},
            },
        },
        "output_dir": {"type": "string"},
        "threads": _count,
        "seed": {"type": "integer", "minimum": 0},
    },
}


class ConfigError(ValueError):
    pass


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
    validate_config(doc)
    return doc


def validate_config(doc) -> None:
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from exc


def build_system(doc: dict) -> SystemConfig:
    if "processes" not in doc or "service" not in doc:
        raise ConfigError("config needs 'processes' and 'service'")
    svc_doc = doc["service"]
    svc = ServiceDistribution.exponential(svc_doc["parameter"], svc_doc.get("parameter_is_rate", False))
    procs = tuple(
        ProcessSpec(p["rate"], RecoveryFunction(p["alpha"]), p.get("beta", 1.0)) for p in doc["processes"]
    )
    return SystemConfig(procs, svc, doc.get("tau"))


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _run_manifest(args, doc: dict, command: str) -> dict:
    return {
        "command": command,
        "argv": [a for a in (getattr(args, "argv", None) or [])],
        "config": doc,
        "config_sha256": experiments.config_hash(doc),
        "seed": doc.get("simulation", {}).get("seed", doc.get("seed")),
        "version": __version__,
    }


def _emit(text: str, output: Optional[str], manifest: Optional[dict] = None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    if manifest is not None:
        path.with_name(path.name + ".manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )


def _effective(doc: dict, args) -> dict:
    """Apply command-line overrides on top of the config (flags win)."""
    doc = json.loads(json.dumps(doc))
    sim = doc.setdefault("simulation", {})
    for flag, key in (("epochs", "epochs"), ("seed", "seed"), ("noise", "noise")):
        val = getattr(args, flag, None)
        if val is not None:
            sim[key] = val
    pol = doc.setdefault("policy", {})
    if getattr(args, "xi", None) is not None:
        pol["xi"] = args.xi
    if getattr(args, "m", None) is not None:
        pol["m"] = args.m
    if getattr(args, "tau", None) is not None:
        doc["tau"] = args.tau
    if getattr(args, "beta", None) is not None:
        for p in doc.get("processes", []):
            p["beta"] = args.beta
    opt = doc.setdefault("optimize", {})
    for key in ("xi_max", "grid", "m_max", "method"):
        val = getattr(args, key, None)
        if val is not None:
            opt[key] = val
    if getattr(args, "threads", None) is not None:
        doc["threads"] = args.threads
    validate_config(doc)
    return doc


def cmd_solve_single(args) -> int:
    doc = _effective(load_config(args.config), args)
    cfg = build_system(doc)
    if cfg.K != 1:
        raise ConfigError(f"solve-single needs exactly one process, got {cfg.K}")
    tau = doc.get("tau")
    if tau is not None:
        sol = single.solve_single(cfg, tau)
        mode = "credibility-constrained"
    else:
        sol = single.solve_weighted(cfg)
        mode = "weighted"
    out = {"mode": mode, "solution": sol.to_dict()}
    if args.emit_curve:
        hi = max(4.0 * sol.xi_star, 4.0 * cfg.service.mean, 1.0)
        out["curve"] = single.threshold_curve(cfg, np.linspace(0.0, hi, args.curve_points), sol.beta or 1.0)
    out["manifest"] = _run_manifest(args, doc, "solve-single")
    _emit(json.dumps(out, indent=2) + "\n", args.output)
    return EXIT_OK


def _metric_rows(res, betas, estimator) -> list[list]:
    rows = []
    for k in range(len(res.traces)):
        for name, est in (("aoi", res.aoi(k)), ("err", res.err(k, estimator))):
            rows.append([k + 1, name, est.value, est.stderr, est.value - est.halfwidth, est.value + est.halfwidth, est.n])
    rep = res.report(betas, estimator)
    hw = rep.objective_halfwidth
    rows.append(["all", "objective", rep.objective, hw / 1.959963984540054, rep.objective - hw, rep.objective + hw, ""])
    return rows


def cmd_simulate(args) -> int:
    doc = _effective(load_config(args.config), args)
    cfg = build_system(doc)
    sim = doc.get("simulation", {})
    pol = doc.get("policy", {})
    n = sim.get("epochs", 100_000)
    seed = sim.get("seed", 0)
    noise = sim.get("noise", "gaussian")
    estimator = sim.get("estimator", "rao-blackwell")
    if args.policy == "single":
        if cfg.K != 1:
            raise ConfigError("--policy single needs exactly one process")
        slots, xi = (0,), ThresholdPolicy(pol.get("xi", 0.0)).xi
    elif args.policy == "rr":
        p = RRPolicy(pol.get("xi", 0.0), pol.get("wait_slot", 0))
        slots, xi = rr_slots(cfg.K, p.wait_slot), p.xi
    else:
        sched = ASSchedule(pol.get("m", [1] * cfg.K))
        if len(sched.m) != cfg.K:
            raise ConfigError("policy.m must have one entry per process")
        slots, xi = sched.slots(), 0.0
    res = simulate_schedule(cfg, slots, xi, n, seed, noise)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["process", "metric", "estimate", "stderr", "ci95_low", "ci95_high", "n"])
    for row in _metric_rows(res, [p.beta for p in cfg.processes], estimator):
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    if args.trace:
        Path(args.trace).parent.mkdir(parents=True, exist_ok=True)
        res.write_trace(args.trace)
    _emit(buf.getvalue(), args.output, _run_manifest(args, doc, f"simulate --policy {args.policy}"))
    return EXIT_OK


def _opt_settings(doc: dict) -> tuple[dict, int, int]:
    opt = doc.get("optimize", {})
    sim = doc.get("simulation", {})
    cycles = opt.get("cycles", sim.get("epochs", multi.DEFAULT_CYCLES))
    return opt, cycles, sim.get("seed", 0)


def cmd_optimize_rr(args) -> int:
    doc = _effective(load_config(args.config), args)
    cfg = build_system(doc)
    opt, cycles, seed = _opt_settings(doc)
    xi_max = opt.get("xi_max", 10.0 * cfg.K * cfg.service.mean)
    policy, rep = multi.rr_optimize(
        cfg, xi_max, grid=opt.get("grid", 41), cycles=cycles, seed=seed, method=opt.get("method", "auto")
    )
    out = {"policy": {"xi": policy.xi}, "report": rep.to_dict(), "manifest": _run_manifest(args, doc, "optimize-rr")}
    _emit(json.dumps(out, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_optimize_as(args) -> int:
    doc = _effective(load_config(args.config), args)
    cfg = build_system(doc)
    opt, cycles, seed = _opt_settings(doc)
    sched, rep = multi.as_optimize(
        cfg, m_max=opt.get("m_max", 32), cycles=cycles, seed=seed, method=opt.get("method", "auto")
    )
    out = {"schedule": {"m": list(sched.m)}, "report": rep.to_dict(), "manifest": _run_manifest(args, doc, "optimize-as")}
    _emit(json.dumps(out, indent=2) + "\n", args.output)
    return EXIT_OK


def build_sweep(doc: dict, fig: str, args) -> experiments.SweepSpec:
    sweep = doc.get("sweep", {})
    kw = {}
    for key in ("cycles", "eval_cycles", "m_max", "xi_max", "grid"):
        if key in sweep:
            kw[key] = sweep[key]
    if "betas" in sweep:
        kw["betas"] = tuple(sweep["betas"])
    if "alphas" in sweep:
        kw["alphas"] = tuple(sweep["alphas"])
    seed = args.seed if args.seed is not None else doc.get("seed", doc.get("simulation", {}).get("seed", 0))
    kw["seed"] = seed
    kw["threads"] = args.threads or doc.get("threads", 1)
    svc = doc.get("service")
    if svc is not None and fig in ("4", "5"):
        kw["service_parameter"] = svc["parameter"]
        kw["service_parameter_is_rate"] = svc.get("parameter_is_rate", False)
    if args.service_is_rate:
        kw["service_parameter_is_rate"] = True
    factory = {"3": experiments.fig3_spec, "4": experiments.fig4_spec, "5": experiments.fig5_spec}[fig]
    spec = factory(**kw)
    if "processes" in doc:
        if "service" not in doc:
            raise ConfigError("a custom process list needs a 'service' entry")
        from dataclasses import replace

        spec = replace(spec, base=build_system(doc))
    return spec


def cmd_experiment(args) -> int:
    doc = load_config(args.config)
    spec = build_sweep(doc, args.fig, args)
    outdir = args.output_dir or doc.get("output_dir") or os.environ.get(OUTPUT_ENV) or "results"
    paths = experiments.run_experiment(spec, Path(outdir), figure=not args.no_figure)
    for key in ("csv", "manifest", "figure"):
        if key in paths:
            print(f"{key}: {paths[key]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoicred", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=_positive_int, default=None, help="cap on worker processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-single", help="optimal threshold for one process")
    p.add_argument("config")
    p.add_argument("--tau", type=float, help="credibility bound (switches to the constrained form)")
    p.add_argument("--beta", type=float, help="weight for the weighted form")
    p.add_argument("--emit-curve", action="store_true", help="include a (xi, aoi, err) diagnostic curve")
    p.add_argument("--curve-points", type=_positive_int, default=201)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_solve_single)

    p = sub.add_parser("simulate", help="Monte Carlo metrics with confidence intervals (CSV)")
    p.add_argument("config")
    p.add_argument("--policy", choices=["single", "rr", "as"], default="single")
    p.add_argument("--epochs", type=_positive_int, help="epochs (single) or cycles (rr/as)")
    p.add_argument("--seed", type=int)
    p.add_argument("--xi", type=float)
    p.add_argument("--m", type=_positive_int, nargs="+")
    p.add_argument("--noise", choices=NOISE_KINDS)
    p.add_argument("--trace", help="write the per-delivery epoch trace CSV here")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize-rr", help="best round-robin threshold")
    p.add_argument("config")
    p.add_argument("--xi-max", dest="xi_max", type=float)
    p.add_argument("--grid", type=_positive_int)
    p.add_argument("--epochs", type=_positive_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["auto", "analytic", "simulate"])
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_optimize_rr)

    p = sub.add_parser("optimize-as", help="best asymmetric trial counts")
    p.add_argument("config")
    p.add_argument("--m-max", dest="m_max", type=_positive_int)
    p.add_argument("--epochs", type=_positive_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["auto", "analytic", "simulate"])
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_optimize_as)

    p = sub.add_parser("experiment", help="reproduce a trade-off figure as CSV + manifest + PNG")
    p.add_argument("config", nargs="?")
    p.add_argument("--fig", choices=["3", "4", "5"], required=True)
    p.add_argument("--output-dir", help=f"defaults to ${OUTPUT_ENV} or ./results")
    p.add_argument("--seed", type=int)
    p.add_argument("--service-is-rate", action="store_true", help="read the figure's service parameter as a rate")
    p.add_argument("--no-figure", action="store_true")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
