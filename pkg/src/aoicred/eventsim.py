"""Event-list simulator used only to cross-check ``aoicred.simulator``.

Deliberately shares no code with the vectorized engine: a heap of timed
events, Python's ``random`` module, and AoI taken as the area under the
destination's sawtooth ``t - S'`` between deliveries instead of the
per-epoch ``a L + L^2/2`` decomposition.
"""

from __future__ import annotations

import heapq
import math
import random
from typing import Sequence

import numpy as np

from aoicred.model import MetricReport, SystemConfig

WAKE, ARRIVE, DELIVER = 0, 1, 2
Z95 = 1.959963984540054


def event_simulate(
    cfg: SystemConfig,
    slots: Sequence[int],
    xi: float,
    cycles: int,
    seed: int = 0,
    batches: int = 50,
    warmup_cycles: int = 2,
) -> MetricReport:
    rnd = random.Random(seed)
    K = cfg.K
    mu = cfg.service.mean
    slots = list(slots)
    n = len(slots)

    last_S = [None] * K
    last_Sp = [None] * K
    last_D = [None] * K
    wake_at = [0.0] * K
    # per-batch accumulators: area, time, squared error, count
    acc = np.zeros((K, batches, 4))

    cycle, pos, cycle_service = 0, 0, 0.0
    events = [(0.0, 0, WAKE, slots[0])]
    seq = 1
    total_cycles = cycles + warmup_cycles
    while events:
        t, _, kind, k = heapq.heappop(events)
        if kind == WAKE:
            wake_at[k] = t
            heapq.heappush(events, (t + rnd.expovariate(cfg.processes[k].rate), seq, ARRIVE, k))
        elif kind == ARRIVE:
            S = t
            if last_S[k] is None:
                Sp = S
                var = 0.0
            else:
                var = float(cfg.processes[k].recovery(wake_at[k] - last_S[k]))
                Sp = S + math.sqrt(var) * rnd.gauss(0.0, 1.0)
            y = rnd.expovariate(1.0 / mu)
            cycle_service += y
            heapq.heappush(events, (t + y, seq, DELIVER, k))
            pending = (S, Sp, var)
        else:
            S, Sp, var = pending
            if last_D[k] is not None and cycle >= warmup_cycles:
                b = min((cycle - warmup_cycles) * batches // cycles, batches - 1)
                # area under t - S'_prev from the previous delivery to this one
                acc[k, b, 0] += 0.5 * ((t - last_Sp[k]) ** 2 - (last_D[k] - last_Sp[k]) ** 2)
                acc[k, b, 1] += t - last_D[k]
                acc[k, b, 2] += (S - Sp) ** 2
                acc[k, b, 3] += 1
            last_S[k], last_Sp[k], last_D[k] = S, Sp, t
            pos += 1
            wait = 0.0
            if pos == n:
                pos = 0
                cycle += 1
                if cycle == total_cycles:
                    break
                wait = max(xi - cycle_service, 0.0)
                cycle_service = 0.0
            heapq.heappush(events, (t + wait, seq, WAKE, slots[pos]))
        seq += 1

    aoi, err, aoi_hw, err_hw = [], [], [], []
    for k in range(K):
        area, time, sq, cnt = acc[k].T
        aoi.append(area.sum() / time.sum())
        err.append(sq.sum() / cnt.sum())
        aoi_hw.append(Z95 * np.std(area / time, ddof=1) / math.sqrt(batches))
        err_hw.append(Z95 * np.std(sq / cnt, ddof=1) / math.sqrt(batches))
    betas = [p.beta for p in cfg.processes]
    per_batch = sum(
        b * acc[k, :, 0] / acc[k, :, 1] + (1 - b) * acc[k, :, 2] / acc[k, :, 3]
        for k, b in enumerate(betas)
    )
    return MetricReport(
        aoi=aoi,
        err=err,
        betas=betas,
        mode="simulated",
        aoi_halfwidth=tuple(aoi_hw),
        err_halfwidth=tuple(err_hw),
        objective_halfwidth=Z95 * float(np.std(per_batch, ddof=1)) / math.sqrt(batches),
        n_epochs=tuple(int(acc[k, :, 3].sum()) for k in range(K)),
        extra={"simulator": "event-list"},
    )
