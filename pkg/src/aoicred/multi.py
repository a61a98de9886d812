"""Multi-process policies: round-robin with one threshold wait per cycle, and
asymmetric bursts with zero waiting.

Simulation (``aoicred.simulator``) is the general-purpose evaluator. Two
exact shortcuts exist and are used where they apply:

* K = 1 round-robin is the single-process threshold policy, so it uses the
  closed forms in ``aoicred.single``.
* Asymmetric bursts have no waiting, so every epoch is a sum of independent
  inter-arrival and service times. The starting age of an epoch is the
  previous service of the same process, which is independent of that epoch.
  AoI is then ``mu_Y + E[sum L^2] / (2 E[sum L])`` over one cycle's epochs.
  With exponential-decay recovery the error reduces to products of Laplace
  transforms.
"""

from __future__ import annotations

import itertools
from dataclasses import replace
from typing import Optional

import numpy as np

from aoicred import single
from aoicred.model import ASSchedule, MetricReport, RRPolicy, SystemConfig
from aoicred.numerics import golden_section
from aoicred.simulator import rr_slots, simulate_as, simulate_rr, simulate_schedule

DEFAULT_CYCLES = 100_000
TIE_RTOL = 1e-12


def _betas(cfg: SystemConfig) -> list[float]:
    return [p.beta for p in cfg.processes]


def _as_closed_form_ok(cfg: SystemConfig) -> bool:
    return cfg.service.kind == "exponential" and all(p.recovery.kind == "exponential" for p in cfg.processes)


def as_metrics_analytic(cfg: SystemConfig, sched: ASSchedule) -> MetricReport:
    if len(sched.m) != cfg.K:
        raise ValueError("schedule length differs from process count")
    if not _as_closed_form_ok(cfg):
        raise ValueError("closed-form AS metrics need exponential service and recovery")
    svc = cfg.service
    mu, var_y = svc.mean, svc.variance
    m = sched.m
    aois, errs = [], []
    for k, proc in enumerate(cfg.processes):
        ix = 1.0 / proc.rate
        others = [s for s in range(cfg.K) if s != k]
        own_mean = ix + mu
        own_sq = 2 * ix * ix + 2 * mu * ix + svc.second_moment
        # burst-opening epoch also spans every other process's burst
        open_mean = own_mean + sum(m[s] * (1.0 / cfg.processes[s].rate + mu) for s in others)
        open_var = ix * ix + var_y + sum(m[s] * (1.0 / cfg.processes[s].rate ** 2 + var_y) for s in others)
        sum_l = (m[k] - 1) * own_mean + open_mean
        sum_l2 = (m[k] - 1) * own_sq + open_var + open_mean**2
        aois.append(mu + 0.5 * sum_l2 / sum_l)

        a = proc.recovery.alpha
        inner = svc.laplace(a)
        opening = inner
        for s in others:
            lam = cfg.processes[s].rate
            opening *= (inner * lam / (lam + a)) ** m[s]
        errs.append(((m[k] - 1) * inner + opening) / m[k])
    return MetricReport(aois, errs, _betas(cfg), mode="analytic", extra={"m": list(m)})


def _rr_single_analytic(cfg: SystemConfig, policy: RRPolicy) -> MetricReport:
    return MetricReport(
        [single.aoi_of_threshold(cfg, policy.xi)],
        [single.error_of_threshold(cfg, policy.xi)],
        _betas(cfg),
        mode="analytic",
    )


def rr_metrics(
    cfg: SystemConfig,
    policy: RRPolicy,
    cycles: int = DEFAULT_CYCLES,
    seed: int = 0,
    method: str = "simulate",
    noise: str = "gaussian",
) -> MetricReport:
    """Per-process metrics under round-robin with threshold ``policy.xi``.

    ``method="analytic"`` is available for K = 1 only. ``"auto"`` picks it
    there and simulates otherwise.
    """
    if method == "auto":
        method = "analytic" if cfg.K == 1 else "simulate"
    if method == "analytic":
        if cfg.K != 1:
            raise ValueError("analytic round-robin metrics exist for K=1 only")
        return _rr_single_analytic(cfg, policy)
    if method != "simulate":
        raise ValueError(f"unknown method {method!r}")
    return simulate_rr(cfg, policy, cycles, seed, noise)


def as_metrics(
    cfg: SystemConfig,
    sched: ASSchedule,
    cycles: int = DEFAULT_CYCLES,
    seed: int = 0,
    method: str = "simulate",
    noise: str = "gaussian",
) -> MetricReport:
    if method == "auto":
        method = "analytic" if _as_closed_form_ok(cfg) else "simulate"
    if method == "analytic":
        return as_metrics_analytic(cfg, sched)
    if method != "simulate":
        raise ValueError(f"unknown method {method!r}")
    return simulate_as(cfg, sched, cycles, seed, noise)


def rr_optimize(
    cfg: SystemConfig,
    xi_max: float,
    grid: int = 41,
    cycles: int = DEFAULT_CYCLES,
    seed: int = 0,
    method: str = "auto",
    xtol: Optional[float] = None,
    memo: Optional[dict] = None,
) -> tuple[RRPolicy, MetricReport]:
    """Best round-robin threshold on ``[0, xi_max]``: grid scan, then golden-section.

    Simulated candidates share ``seed``. Common random numbers make the
    comparison paired and the argmin reproducible.

    ``memo`` may carry simulations across calls that differ only in the
    (equal) weights, e.g. the points of a beta sweep.
    """
    if not cfg.equal_betas:
        raise ValueError("rr_optimize supports equal beta_k only; the wait location matters otherwise")
    if xi_max < 0 or grid < 2:
        raise ValueError("need xi_max >= 0 and at least two grid points")
    if method == "auto":
        method = "analytic" if cfg.K == 1 else "simulate"
    if xtol is None:
        xtol = 1e-8 if method == "analytic" else max(xi_max, 1e-9) * 1e-3

    cache = {} if memo is None else memo
    betas = _betas(cfg)

    def report(xi: float) -> MetricReport:
        key = (xi, cycles, seed, method)
        if key not in cache:
            cache[key] = rr_metrics(cfg, RRPolicy(xi), cycles, seed, method)
        rep = cache[key]
        if list(rep.betas) == betas:
            return rep
        if rep.mode == "analytic":
            return replace(rep, betas=tuple(betas))
        # conservative: half-width of a weighted sum <= weighted sum of half-widths
        hw = sum(b * ha + (1 - b) * he for b, ha, he in zip(betas, rep.aoi_halfwidth, rep.err_halfwidth))
        return replace(rep, betas=tuple(betas), objective_halfwidth=hw)

    obj = lambda xi: report(xi).objective
    xs = np.linspace(0.0, xi_max, grid)
    vals = [obj(float(x)) for x in xs]
    j = int(np.argmin(vals))
    best_x, best_v = float(xs[j]), vals[j]
    if xi_max > 0:
        a, b = float(xs[max(j - 1, 0)]), float(xs[min(j + 1, grid - 1)])
        x, v = golden_section(obj, a, b, xtol=xtol)
        if v < best_v:
            best_x, best_v = x, v
    return RRPolicy(best_x), report(best_x)


def as_optimize(
    cfg: SystemConfig,
    m_max: int = 32,
    cycles: int = 20_000,
    seed: int = 0,
    method: str = "auto",
) -> tuple[ASSchedule, MetricReport]:
    """Best trial-count vector in ``{1..m_max}^K``.

    K = 2 with ``m_max <= 32`` is searched exhaustively. Anything larger uses
    coordinate descent from ``(1, ..., 1)``. Ties go to the lexicographically
    smallest vector.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    if method == "auto":
        method = "analytic" if _as_closed_form_ok(cfg) else "simulate"

    cache: dict[tuple[int, ...], MetricReport] = {}

    def report(m: tuple[int, ...]) -> MetricReport:
        if m not in cache:
            cache[m] = as_metrics(cfg, ASSchedule(m), cycles, seed, method)
        return cache[m]

    def better(m, best):
        v, bv = report(m).objective, report(best).objective
        if v < bv - TIE_RTOL * abs(bv):
            return True
        return abs(v - bv) <= TIE_RTOL * abs(bv) and m < best

    K = cfg.K
    if K == 1 or (K == 2 and m_max <= 32):
        best = (1,) * K
        for m in itertools.product(range(1, m_max + 1), repeat=K):
            if better(m, best):
                best = m
        return ASSchedule(best), report(best)

    best = (1,) * K
    for _ in range(100):
        changed = False
        for k in range(K):
            for v in range(1, m_max + 1):
                cand = best[:k] + (v,) + best[k + 1 :]
                if better(cand, best):
                    best, changed = cand, True
        if not changed:
            return ASSchedule(best), report(best)
    raise RuntimeError("coordinate descent did not settle")


def rr_wait_location_sums(
    cfg: SystemConfig, xi: float, cycles: int = DEFAULT_CYCLES, seed: int = 0
) -> list[tuple[float, float]]:
    """(sum AoI, sum error) with the wait placed before each process's slot in turn."""
    out = []
    for j in range(cfg.K):
        res = simulate_schedule(cfg, rr_slots(cfg.K, j), xi, cycles, seed)
        out.append(
            (sum(res.aoi(k).value for k in range(cfg.K)), sum(res.err(k).value for k in range(cfg.K)))
        )
    return out


def objective_gap_ci(a: MetricReport, b: MetricReport) -> tuple[float, float]:
    """``a.objective - b.objective`` with a conservative 95% half-width (sum of both)."""
    hw = (a.objective_halfwidth or 0.0) + (b.objective_halfwidth or 0.0)
    return a.objective - b.objective, hw


def zero_wait_report(cfg: SystemConfig, cycles: int = DEFAULT_CYCLES, seed: int = 0) -> MetricReport:
    return rr_metrics(cfg, RRPolicy(0.0), cycles, seed, "auto" if cfg.K == 1 else "simulate")


__all__ = [
    "as_metrics",
    "as_metrics_analytic",
    "as_optimize",
    "objective_gap_ci",
    "rr_metrics",
    "rr_optimize",
    "rr_wait_location_sums",
    "zero_wait_report",
]

