"""Seeded Monte Carlo engine for cyclic status-update schedules.

A cycle is a fixed sequence of slots, each naming the process that samples
and transmits in it. A threshold wait ``[xi - sum of last cycle's services]^+``
precedes the first slot of every cycle. Single-process threshold waiting,
round-robin, and asymmetric bursts are all instances of this:

* single process:  slots ``(0,)``
* round-robin:     slots ``(0, 1, ..., K-1)``, rotated so the wait sits before ``wait_slot``
* asymmetric:      slots ``(0,)*m1 + (1,)*m2 + ...`` with ``xi = 0``

A sensor wakes at the start of its slot (plus the wait, for the first slot),
its sample arrives ``X ~ exp(rate)`` later and is delivered ``Y`` after that.
The received stamp is the true stamp plus zero-mean noise whose variance is
``h(wake - previous stamp)``.

Random streams
--------------
Every draw comes from ``SeedSequence(seed, spawn_key=(k, purpose))`` for
process ``k``. Purposes are 0 = inter-arrival X, 1 = service Y,
2 = stamp noise, 3 = service times of the fictitious cycle before time zero.
Adding a process therefore leaves existing streams untouched. The streams
are consumed in slot order, so two schedules that visit process ``k``
equally often see identical draws.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from aoicred.model import (
    ASSchedule,
    MetricReport,
    RRPolicy,
    SystemConfig,
    ThresholdPolicy,
)

X_STREAM, Y_STREAM, NOISE_STREAM, INIT_STREAM = 0, 1, 2, 3
NOISE_KINDS = ("gaussian", "uniform", "none")
Z95 = 1.959963984540054
TRACE_COLUMNS = ("process", "i", "S", "S_prime", "D", "Y", "X", "W", "L", "start_age")


def stream(seed: int, process: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(process, purpose)))


@dataclass(frozen=True)
class SimEstimate:
    value: float
    stderr: float
    n: int
    seed: int
    kind: str = "ratio"

    @property
    def halfwidth(self) -> float:
        return Z95 * self.stderr

    def contains(self, x: float, sigmas: float = 3.0) -> bool:
        return abs(self.value - x) <= sigmas * self.stderr


@dataclass(frozen=True)
class EpochRecord:
    process: int
    i: int
    S: float
    S_prime: float
    D: float
    Y: float
    X: float
    W: float
    L: float
    start_age: float


@dataclass
class ProcessTrace:
    """Per-delivery arrays for one process, burn-in already dropped.

    ``gap`` is the sleep-plus-busy interval that sets the stamp variance and
    ``var`` is that variance.
    """

    process: int
    cycle: np.ndarray
    S: np.ndarray
    S_prime: np.ndarray
    D: np.ndarray
    Y: np.ndarray
    X: np.ndarray
    W: np.ndarray
    L: np.ndarray
    start_age: np.ndarray
    gap: np.ndarray
    var: np.ndarray

    def __len__(self):
        return len(self.S)

    def records(self) -> Iterator[EpochRecord]:
        for j in range(len(self)):
            yield EpochRecord(
                self.process, j, float(self.S[j]), float(self.S_prime[j]), float(self.D[j]),
                float(self.Y[j]), float(self.X[j]), float(self.W[j]), float(self.L[j]),
                float(self.start_age[j]),
            )


@dataclass
class SimulationResult:
    traces: list[ProcessTrace]
    cycles: int
    seed: int
    batches: int

    def _batch_sums(self, k: int, values: np.ndarray) -> np.ndarray:
        tr = self.traces[k]
        edges = np.linspace(0, self.cycles, self.batches + 1)
        idx = np.clip(np.searchsorted(edges, tr.cycle, side="right") - 1, 0, self.batches - 1)
        return np.bincount(idx, weights=values, minlength=self.batches)

    def _ratio(self, k: int, num: np.ndarray, den: np.ndarray, kind: str) -> SimEstimate:
        bn, bd = self._batch_sums(k, num), self._batch_sums(k, den)
        value = num.sum() / den.sum()
        return SimEstimate(float(value), _batch_stderr(bn / bd), len(num), self.seed, kind)

    def aoi(self, k: int = 0) -> SimEstimate:
        tr = self.traces[k]
        area = tr.start_age * tr.L + 0.5 * tr.L**2
        return self._ratio(k, area, tr.L, "ratio")

    def err(self, k: int = 0, estimator: str = "rao-blackwell") -> SimEstimate:
        tr = self.traces[k]
        if estimator == "rao-blackwell":
            vals = tr.var
        elif estimator == "raw":
            vals = (tr.S - tr.S_prime) ** 2
        else:
            raise ValueError(f"unknown estimator {estimator!r}")
        return self._ratio(k, vals, np.ones_like(vals), estimator)

    def stamp_bias(self, k: int = 0) -> SimEstimate:
        tr = self.traces[k]
        return self._ratio(k, tr.S - tr.S_prime, np.ones(len(tr)), "mean")

    def objective_stderr(self, betas: Sequence[float], estimator: str = "rao-blackwell") -> float:
        per_batch = np.zeros(self.batches)
        for k, b in enumerate(betas):
            tr = self.traces[k]
            area = tr.start_age * tr.L + 0.5 * tr.L**2
            aoi_b = self._batch_sums(k, area) / self._batch_sums(k, tr.L)
            e = tr.var if estimator == "rao-blackwell" else (tr.S - tr.S_prime) ** 2
            err_b = self._batch_sums(k, e) / self._batch_sums(k, np.ones(len(tr)))
            per_batch += b * aoi_b + (1 - b) * err_b
        return _batch_stderr(per_batch)

    def report(self, betas: Sequence[float], estimator: str = "rao-blackwell") -> MetricReport:
        aois = [self.aoi(k) for k in range(len(self.traces))]
        errs = [self.err(k, estimator) for k in range(len(self.traces))]
        return MetricReport(
            aoi=[a.value for a in aois],
            err=[e.value for e in errs],
            betas=betas,
            mode="simulated",
            aoi_halfwidth=tuple(a.halfwidth for a in aois),
            err_halfwidth=tuple(e.halfwidth for e in errs),
            objective_halfwidth=Z95 * self.objective_stderr(betas, estimator),
            n_epochs=tuple(len(t) for t in self.traces),
            extra={"aoi_stderr": [a.stderr for a in aois], "err_stderr": [e.stderr for e in errs]},
        )

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for tr in self.traces:
                for r in tr.records():
                    w.writerow([r.process, r.i] + [repr(getattr(r, c)) for c in TRACE_COLUMNS[2:]])


def _batch_stderr(batch_values: np.ndarray) -> float:
    n = len(batch_values)
    return float(np.std(batch_values, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")


def _default_batches(cycles: int) -> int:
    return int(max(2, min(100, cycles // 100)))


def simulate_schedule(
    cfg: SystemConfig,
    slots: Sequence[int],
    xi: float,
    cycles: int,
    seed: int = 0,
    noise: str = "gaussian",
    batches: Optional[int] = None,
) -> SimulationResult:
    """Run ``cycles`` repetitions of ``slots`` after one burn-in cycle."""
    slots = np.asarray(slots, dtype=np.int64)
    K = cfg.K
    if cycles < 1:
        raise ValueError("cycles must be positive")
    if xi < 0:
        raise ValueError("threshold must be nonnegative")
    if noise not in NOISE_KINDS:
        raise ValueError(f"noise must be one of {NOISE_KINDS}")
    if slots.size == 0 or slots.min() < 0 or slots.max() >= K:
        raise ValueError("slots must name processes 0..K-1")
    counts = np.bincount(slots, minlength=K)
    if np.any(counts == 0):
        raise ValueError("every process needs at least one slot per cycle")

    n_slots = len(slots)
    total = cycles + 1
    flat_proc = np.tile(slots, total)
    X = np.empty(total * n_slots)
    Y = np.empty(total * n_slots)
    init_sum = 0.0
    for k in range(K):
        pos = flat_proc == k
        n_k = total * counts[k]
        X[pos] = stream(seed, k, X_STREAM).exponential(1.0 / cfg.processes[k].rate, n_k)
        Y[pos] = cfg.service.sample(stream(seed, k, Y_STREAM), n_k)
        init_sum += float(np.sum(cfg.service.sample(stream(seed, k, INIT_STREAM), counts[k])))

    cycle_service = Y.reshape(total, n_slots).sum(axis=1)
    prev = np.concatenate(([init_sum], cycle_service[:-1]))
    wait_per_cycle = np.maximum(xi - prev, 0.0) if xi > 0 else np.zeros(total)
    W = np.zeros(total * n_slots)
    W[::n_slots] = wait_per_cycle

    D = np.cumsum(W + X + Y)
    S = D - Y
    wake = S - X
    cycle_of = np.repeat(np.arange(total) - 1, n_slots)

    traces = []
    for k in range(K):
        pos = np.flatnonzero(flat_proc == k)
        Sk, Dk, Yk = S[pos], D[pos], Y[pos]
        gap = wake[pos][1:] - Sk[:-1]
        var = cfg.processes[k].recovery(gap)
        if noise == "none":
            var = np.zeros_like(var)
        z_rng = stream(seed, k, NOISE_STREAM)
        if noise == "uniform":
            z = z_rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), len(gap))
        else:
            z = z_rng.standard_normal(len(gap))
        Sp = Sk[1:] + np.sqrt(var) * z
        # drop the first two deliveries: the second lacks a noisy predecessor stamp
        start_age = Yk[1:-1] + Sk[1:-1] - Sp[:-1]
        keep = slice(2, None)
        cyc = cycle_of[pos][keep]
        first_real = np.searchsorted(cyc, 0)
        sel = slice(first_real, None)
        traces.append(
            ProcessTrace(
                process=k,
                cycle=cyc[sel],
                S=Sk[keep][sel],
                S_prime=Sp[1:][sel],
                D=Dk[keep][sel],
                Y=Yk[keep][sel],
                X=X[pos][keep][sel],
                W=W[pos][keep][sel],
                L=np.diff(Dk)[1:][sel],
                start_age=start_age[sel],
                gap=gap[1:][sel],
                var=var[1:][sel],
            )
        )
    return SimulationResult(traces, cycles, seed, batches or _default_batches(cycles))


def simulate_single(
    cfg: SystemConfig,
    policy: ThresholdPolicy,
    epochs: int,
    seed: int = 0,
    noise: str = "gaussian",
    estimator: str = "rao-blackwell",
) -> tuple[SimEstimate, SimEstimate]:
    """AoI and error estimates for one process under a threshold wait."""
    if cfg.K != 1:
        raise ValueError("simulate_single needs exactly one process")
    if epochs < 1:
        raise ValueError("epochs must be positive")
    res = simulate_schedule(cfg, (0,), policy.xi, epochs, seed, noise)
    return res.aoi(0), res.err(0, estimator)


def rr_slots(K: int, wait_slot: int = 0) -> tuple[int, ...]:
    if not 0 <= wait_slot < K:
        raise ValueError("wait_slot out of range")
    order = list(range(K))
    return tuple(order[wait_slot:] + order[:wait_slot])


def simulate_rr(
    cfg: SystemConfig, policy: RRPolicy, cycles: int, seed: int = 0, noise: str = "gaussian",
    estimator: str = "rao-blackwell",
) -> MetricReport:
    res = simulate_schedule(cfg, rr_slots(cfg.K, policy.wait_slot), policy.xi, cycles, seed, noise)
    return res.report([p.beta for p in cfg.processes], estimator)


def simulate_as(
    cfg: SystemConfig, sched: ASSchedule, cycles: int, seed: int = 0, noise: str = "gaussian",
    estimator: str = "rao-blackwell",
) -> MetricReport:
    if len(sched.m) != cfg.K:
        raise ValueError("schedule length differs from process count")
    res = simulate_schedule(cfg, sched.slots(), 0.0, cycles, seed, noise)
    return res.report([p.beta for p in cfg.processes], estimator)
