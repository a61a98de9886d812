"""Model primitives: service law, recovery function, process/system configuration.

Everything here is immutable. Samplers take a caller-owned
``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class InfeasibleError(ValueError):
    """A credibility bound that no waiting policy can meet."""


class ConvergenceError(RuntimeError):
    """A numerical search failed to bracket or converge."""


@dataclass(frozen=True)
class ServiceDistribution:
    """Channel busy-time law ``Y``.

    Only the exponential kind ships. Anything implementing ``mean``,
    ``second_moment``, ``pdf``, ``cdf``, ``sample`` and ``laplace`` can stand
    in for it.
    """

    mean: float
    kind: str = "exponential"

    def __post_init__(self):
        if self.kind != "exponential":
            raise ValueError(f"unsupported service kind {self.kind!r}")
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise ValueError("service mean must be positive and finite")

    @classmethod
    def exponential(cls, parameter: float, parameter_is_rate: bool = False) -> "ServiceDistribution":
        """Build from a figure-style parameter that may be a mean or a rate."""
        if parameter <= 0:
            raise ValueError("service parameter must be positive")
        return cls(mean=1.0 / parameter if parameter_is_rate else float(parameter))

    @property
    def second_moment(self) -> float:
        return 2.0 * self.mean**2

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y >= 0, np.exp(-np.maximum(y, 0) / self.mean) / self.mean, 0.0)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y >= 0, -np.expm1(-np.maximum(y, 0) / self.mean), 0.0)

    def laplace(self, s: float) -> float:
        """``E[exp(-s Y)]`` for ``s >= 0``."""
        return 1.0 / (1.0 + s * self.mean)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.exponential(self.mean, size)


@dataclass(frozen=True)
class RecoveryFunction:
    """Time-stamp error variance as a function of the inter-sampling gap.

    ``h(x) = exp(-alpha x)``: non-increasing and convex, ``h(0) = 1``.
    """

    alpha: float
    kind: str = "exponential"

    def __post_init__(self):
        if self.kind != "exponential":
            raise ValueError(f"unsupported recovery kind {self.kind!r}")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError("recovery rate must be a finite nonnegative number")

    def __call__(self, x):
        return np.exp(-self.alpha * np.asarray(x, dtype=float))

    def derivative(self, x):
        return -self.alpha * np.exp(-self.alpha * np.asarray(x, dtype=float))

    @property
    def floor(self) -> float:
        """``lim h(x)`` as ``x -> inf``; credibility bounds at or below it are unattainable."""
        return 0.0 if self.alpha > 0 else 1.0


@dataclass(frozen=True)
class ProcessSpec:
    rate: float
    recovery: RecoveryFunction
    beta: float = 1.0

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError("sampling rate must be positive and finite")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")


@dataclass(frozen=True)
class SystemConfig:
    processes: tuple[ProcessSpec, ...]
    service: ServiceDistribution
    credibility_bound: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "processes", tuple(self.processes))
        if not self.processes:
            raise ValueError("at least one process is required")
        if self.credibility_bound is not None and self.credibility_bound < 0:
            raise ValueError("credibility bound must be nonnegative")

    @classmethod
    def single(
        cls,
        rate: float,
        alpha: float,
        service_mean: float = 1.0,
        beta: float = 1.0,
        tau: Optional[float] = None,
    ) -> "SystemConfig":
        return cls(
            (ProcessSpec(rate, RecoveryFunction(alpha), beta),),
            ServiceDistribution(service_mean),
            tau,
        )

    @classmethod
    def multi(
        cls,
        rates: Sequence[float],
        alphas: Sequence[float],
        service: ServiceDistribution,
        beta: float | Sequence[float] = 1.0,
    ) -> "SystemConfig":
        if len(rates) != len(alphas):
            raise ValueError("rates and alphas differ in length")
        betas = [beta] * len(rates) if np.isscalar(beta) else list(beta)
        return cls(
            tuple(ProcessSpec(r, RecoveryFunction(a), b) for r, a, b in zip(rates, alphas, betas)),
            service,
        )

    @property
    def K(self) -> int:
        return len(self.processes)

    @property
    def equal_betas(self) -> bool:
        return len({p.beta for p in self.processes}) == 1


@dataclass(frozen=True)
class ThresholdPolicy:
    """Wait ``[xi - y]^+`` after a service of length ``y``; ``xi = 0`` is zero-wait."""

    xi: float = 0.0

    def __post_init__(self):
        if not self.xi >= 0:
            raise ValueError("threshold must be nonnegative")

    def wait(self, y):
        return np.maximum(self.xi - np.asarray(y, dtype=float), 0.0)


@dataclass(frozen=True)
class RRPolicy:
    """Round-robin with one threshold wait per cycle.

    The wait ``[xi - sum of the previous cycle's services]^+`` precedes the slot
    of process ``wait_slot`` (0-based; the analysed policy uses 0).
    """

    xi: float = 0.0
    wait_slot: int = 0

    def __post_init__(self):
        if not self.xi >= 0:
            raise ValueError("threshold must be nonnegative")
        if self.wait_slot < 0:
            raise ValueError("wait_slot must be nonnegative")


@dataclass(frozen=True)
class ASSchedule:
    """Asymmetric schedule: process ``k`` gets ``m[k]`` back-to-back trials per cycle, no waiting."""

    m: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        if not self.m or any(v < 1 for v in self.m):
            raise ValueError("trial counts must all be >= 1")

    def slots(self) -> tuple[int, ...]:
        return tuple(k for k, mk in enumerate(self.m) for _ in range(mk))


@dataclass(frozen=True)
class MetricReport:
    """Per-process (AoI, error) pairs and the weighted sum objective.

    Half-widths are 95% normal confidence half-widths and stay ``None`` for
    analytic reports.
    """

    aoi: tuple[float, ...]
    err: tuple[float, ...]
    betas: tuple[float, ...]
    mode: str = "analytic"
    aoi_halfwidth: Optional[tuple[float, ...]] = None
    err_halfwidth: Optional[tuple[float, ...]] = None
    objective_halfwidth: Optional[float] = None
    n_epochs: Optional[tuple[int, ...]] = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("aoi", "err", "betas"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not len(self.aoi) == len(self.err) == len(self.betas):
            raise ValueError("per-process vectors differ in length")
        if self.mode not in ("analytic", "simulated"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def objective(self) -> float:
        return float(sum(b * a + (1.0 - b) * e for a, e, b in zip(self.aoi, self.err, self.betas)))

    @property
    def sum_aoi(self) -> float:
        return float(sum(self.aoi))

    @property
    def sum_err(self) -> float:
        return float(sum(self.err))

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "aoi": list(self.aoi),
            "err": list(self.err),
            "betas": list(self.betas),
            "objective": self.objective,
        }
        if self.mode == "simulated":
            out["aoi_halfwidth"] = list(self.aoi_halfwidth)
            out["err_halfwidth"] = list(self.err_halfwidth)
            out["objective_halfwidth"] = self.objective_halfwidth
            out["n_epochs"] = list(self.n_epochs)
        return out


def h_eval(rf: RecoveryFunction, x: float) -> float:
    if x < 0:
        raise ValueError("h is defined for nonnegative gaps only")
    return float(rf(x))


def H_gamma(rf: RecoveryFunction, gamma: float, x: float) -> float:
    """``x + gamma * h'(x)``; strictly increasing in ``x`` because ``h`` is convex."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return float(x + gamma * rf.derivative(x))


def H_gamma_inverse(rf: RecoveryFunction, gamma: float, target: float, xtol: float = 1e-10) -> float:
    """Unique ``x >= 0`` with ``H_gamma(x) = target``, clamped to 0 below ``H_gamma(0)``."""
    from aoicred.numerics import bisect_increasing, grow_bracket

    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if target <= H_gamma(rf, gamma, 0.0):
        return 0.0
    if gamma == 0:
        return float(target)
    f = lambda x: H_gamma(rf, gamma, x)
    hi = grow_bracket(lambda x: f(x) >= target)
    return bisect_increasing(f, target, 0.0 if hi == 1.0 else hi / 2.0, hi, xtol=xtol)
