"""Sweeps behind the three trade-off figures, written as CSV plus a JSON manifest.

* fig3: single process, weighted optimum per (beta, alpha) plus the zero-wait point.
* fig4: two processes, best round-robin threshold vs best asymmetric schedule per (beta, alpha1).
* fig5: best asymmetric trial counts per alpha1.

Rows are computed point by point with per-point seeds derived from the
master seed, so output is independent of ``threads``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from aoicred import multi, single
from aoicred.model import (
    ProcessSpec,
    RecoveryFunction,
    ServiceDistribution,
    SystemConfig,
)

KINDS = ("fig3", "fig4", "fig5", "custom")

FIG3_HEADER = ("policy", "beta", "alpha", "xi", "aoi", "err")
FIG4_HEADER = (
    "beta", "alpha1", "policy", "xi", "m1", "m2",
    "sum_aoi", "sum_err", "objective", "objective_halfwidth",
)
FIG5_HEADER = ("alpha1", "m1", "m2", "objective")

FIG5_ALPHA1 = (0.1, 0.3, 0.5, 0.6, 0.7, 0.8, 0.9)
FIG5_REFERENCE = {"m1": (1, 1, 1, 9, 15, 18, 20), "m2": (4, 3, 1, 1, 1, 1, 1)}


def default_betas(n: int = 25) -> tuple[float, ...]:
    """``n`` log-spaced weights in (0.01, 1]."""
    return tuple(float(b) for b in np.geomspace(0.01, 1.0, n + 1)[1:])


def point_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(index,)).generate_state(1)[0])


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    base: SystemConfig
    betas: tuple[float, ...] = field(default_factory=default_betas)
    alphas: tuple[float, ...] = (0.5, 1.0, 2.0)
    cycles: int = 50_000
    eval_cycles: int = 200_000
    seed: int = 0
    output: Optional[Path] = None
    m_max: int = 32
    xi_max: Optional[float] = None
    grid: int = 21
    threads: int = 1
    service_parameter: float = 1.0
    service_parameter_is_rate: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.alphas or (self.kind != "fig5" and not self.betas):
            raise ValueError("sweep grids must be non-empty")
        if any(not 0 < b <= 1 for b in self.betas):
            raise ValueError("beta values must lie in (0, 1]")

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "betas": list(self.betas),
            "alphas": list(self.alphas),
            "cycles": self.cycles,
            "eval_cycles": self.eval_cycles,
            "seed": self.seed,
            "m_max": self.m_max,
            "xi_max": self.xi_max,
            "grid": self.grid,
            "service_parameter": self.service_parameter,
            "service_parameter_is_rate": self.service_parameter_is_rate,
            "processes": [
                {"rate": p.rate, "alpha": p.recovery.alpha, "beta": p.beta} for p in self.base.processes
            ],
            "service_mean": self.base.service.mean,
        }


def fig3_spec(**kw) -> SweepSpec:
    base = SystemConfig.single(rate=9.0, alpha=1.0, service_mean=1.0)
    return SweepSpec("fig3", base, **kw)


def fig4_spec(service_parameter: float = 1.5, service_parameter_is_rate: bool = False, **kw) -> SweepSpec:
    svc = ServiceDistribution.exponential(service_parameter, service_parameter_is_rate)
    base = SystemConfig.multi([6.0, 6.0], [1.0, 50.0], svc)
    kw.setdefault("alphas", (0.1, 0.5, 2.0, 10.0, 50.0))
    return SweepSpec(
        "fig4", base, service_parameter=service_parameter,
        service_parameter_is_rate=service_parameter_is_rate, **kw,
    )


def fig5_spec(service_parameter: float = 50.0, service_parameter_is_rate: bool = False, **kw) -> SweepSpec:
    svc = ServiceDistribution.exponential(service_parameter, service_parameter_is_rate)
    base = SystemConfig.multi([90.0, 90.0], [0.5, 0.5], svc, beta=0.5)
    kw.setdefault("alphas", FIG5_ALPHA1)
    kw.setdefault("betas", (0.5,))
    return SweepSpec(
        "fig5", base, service_parameter=service_parameter,
        service_parameter_is_rate=service_parameter_is_rate, **kw,
    )


def _with_alpha(cfg: SystemConfig, k: int, alpha: float, beta: Optional[float] = None) -> SystemConfig:
    procs = []
    for j, p in enumerate(cfg.processes):
        rec = RecoveryFunction(alpha) if j == k else p.recovery
        procs.append(ProcessSpec(p.rate, rec, p.beta if beta is None else beta))
    return replace(cfg, processes=tuple(procs))


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- fig3 -------------------------------------------------------------------

def _fig3_alpha(args) -> list[dict]:
    spec, alpha = args
    cfg = _with_alpha(spec.base, 0, alpha)
    rows = []
    for beta in spec.betas:
        sol = single.solve_weighted(cfg, beta)
        rows.append(
            {"policy": "threshold", "beta": beta, "alpha": alpha, "xi": sol.xi_star, "aoi": sol.aoi, "err": sol.err}
        )
    rows.append(
        {
            "policy": "zero_wait", "beta": None, "alpha": alpha, "xi": 0.0,
            "aoi": single.aoi_of_threshold(cfg, 0.0), "err": single.error_of_threshold(cfg, 0.0),
        }
    )
    return rows


def run_fig3(spec: SweepSpec) -> list[dict]:
    if spec.base.K != 1:
        raise ValueError("fig3 sweeps a single process")
    chunks = _map(_fig3_alpha, [(spec, a) for a in spec.alphas], spec.threads)
    rows = [r for chunk in chunks for r in chunk]
    return sorted(rows, key=lambda r: (r["alpha"], r["policy"] == "zero_wait", r["beta"] or 0.0))


# --- fig4 -------------------------------------------------------------------

def _xi_max(spec: SweepSpec) -> float:
    if spec.xi_max is not None:
        return spec.xi_max
    return 10.0 * spec.base.K * spec.base.service.mean


def _fig4_alpha(args) -> list[dict]:
    spec, index, alpha1 = args
    seed = point_seed(spec.seed, index)
    eval_seed = point_seed(spec.seed, 10_000 + index)
    memo: dict = {}
    rows = []
    for beta in spec.betas:
        cfg = _with_alpha(spec.base, 0, alpha1, beta)
        rr_policy, _ = multi.rr_optimize(
            cfg, _xi_max(spec), grid=spec.grid, cycles=spec.cycles, seed=seed, memo=memo
        )
        sched, _ = multi.as_optimize(cfg, m_max=spec.m_max, cycles=spec.cycles, seed=seed)
        # fresh seed for the reported metrics so the selection step does not bias them
        rr_rep = multi.rr_metrics(cfg, rr_policy, spec.eval_cycles, eval_seed)
        as_rep = multi.as_metrics(cfg, sched, spec.eval_cycles, eval_seed)
        for name, rep, xi, m in (
            ("RR", rr_rep, rr_policy.xi, (None, None)),
            ("AS", as_rep, 0.0, sched.m[:2]),
        ):
            rows.append(
                {
                    "beta": beta, "alpha1": alpha1, "policy": name, "xi": xi, "m1": m[0], "m2": m[1],
                    "sum_aoi": rep.sum_aoi, "sum_err": rep.sum_err,
                    "objective": beta * rep.sum_aoi + (1 - beta) * rep.sum_err,
                    "objective_halfwidth": rep.objective_halfwidth,
                }
            )
    return rows


def run_fig4(spec: SweepSpec) -> list[dict]:
    if spec.base.K < 2:
        raise ValueError("fig4 needs at least two processes")
    items = [(spec, i, a) for i, a in enumerate(spec.alphas)]
    chunks = _map(_fig4_alpha, items, spec.threads)
    rows = [r for chunk in chunks for r in chunk]
    return sorted(rows, key=lambda r: (r["alpha1"], r["beta"], r["policy"]))


# --- fig5 -------------------------------------------------------------------

def _fig5_alpha(args) -> dict:
    spec, index, alpha1 = args
    cfg = _with_alpha(spec.base, 0, alpha1)
    sched, rep = multi.as_optimize(cfg, m_max=spec.m_max, cycles=spec.cycles, seed=point_seed(spec.seed, index))
    return {"alpha1": alpha1, "m1": sched.m[0], "m2": sched.m[1], "objective": rep.objective}


def run_fig5(spec: SweepSpec) -> list[dict]:
    if spec.base.K != 2:
        raise ValueError("fig5 sweeps two processes")
    items = [(spec, i, a) for i, a in enumerate(spec.alphas)]
    return sorted(_map(_fig5_alpha, items, spec.threads), key=lambda r: r["alpha1"])


# --- output -----------------------------------------------------------------

RUNNERS = {"fig3": (run_fig3, FIG3_HEADER), "fig4": (run_fig4, FIG4_HEADER), "fig5": (run_fig5, FIG5_HEADER)}


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows: Sequence[dict], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in header])
    return buf.getvalue()


def config_hash(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def manifest(spec: SweepSpec, csv_name: str, extra: Optional[dict] = None) -> dict:
    from aoicred import __version__

    doc = spec.describe()
    out = {
        "experiment": spec.kind,
        "csv": csv_name,
        "config": doc,
        "config_sha256": config_hash(doc),
        "seed": spec.seed,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    if extra:
        out.update(extra)
    return out


def resolve_kind(spec: SweepSpec) -> str:
    if spec.kind != "custom":
        return spec.kind
    return "fig3" if spec.base.K == 1 else "fig4"


def run_experiment(spec: SweepSpec, outdir: Optional[Path] = None, figure: bool = True) -> dict:
    """Run a sweep and write ``<kind>.csv``, ``<kind>.manifest.json`` (and a PNG) into ``outdir``."""
    kind = resolve_kind(spec)
    runner, header = RUNNERS[kind]
    rows = runner(spec)
    outdir = Path(outdir or spec.output or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{spec.kind}.csv"
    csv_path.write_text(rows_to_csv(rows, header))
    paths = {"csv": csv_path}
    extra = {}
    if figure:
        from aoicred import plotting

        fig_path = outdir / f"{spec.kind}.png"
        plotting.render(kind, rows, fig_path)
        paths["figure"] = fig_path
        extra["figure"] = fig_path.name
    man_path = outdir / f"{spec.kind}.manifest.json"
    man_path.write_text(json.dumps(manifest(spec, csv_path.name, extra), indent=2, sort_keys=True) + "\n")
    paths["manifest"] = man_path
    paths["rows"] = rows
    return paths


__all__ = [
    "FIG5_ALPHA1",
    "FIG5_REFERENCE",
    "SweepSpec",
    "default_betas",
    "fig3_spec",
    "fig4_spec",
    "fig5_spec",
    "manifest",
    "point_seed",
    "rows_to_csv",
    "run_experiment",
    "run_fig3",
    "run_fig4",
    "run_fig5",
]

