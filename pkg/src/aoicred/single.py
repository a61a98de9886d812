"""Single-process threshold solver.

The long-term AoI of a stationary waiting policy ``w(Y_prev)`` is the ratio

    (E[Y_prev L] + E[L^2] / 2) / E[L],    L = w(Y_prev) + X + Y,

and the error is ``E[h(Y_prev + w(Y_prev))]``. With ``w(y) = [xi - y]^+``
both reduce to three moments of the wait, available in closed form for
exponential service and by quadrature otherwise.

Two solution paths are provided. ``solve_single`` handles the
credibility-constrained form by a Dinkelbach root search on ``theta``.
``solve_weighted`` handles the weighted form by a line search on ``xi``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from aoicred.model import ConvergenceError, InfeasibleError, SystemConfig
from aoicred.numerics import bisect_increasing, grid_then_golden, grow_bracket

QUAD_TOL = 1e-10


@dataclass(frozen=True)
class SingleSolution:
    theta_star: float
    xi_star: float
    gamma_active: bool
    aoi: float
    err: float
    objective: float
    beta: Optional[float] = None
    tau: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _single(cfg: SystemConfig):
    if cfg.K != 1:
        raise ValueError(f"single-process routine called with K={cfg.K}")
    return cfg.processes[0]


def _closed_form_ok(cfg: SystemConfig, method: str) -> bool:
    if method not in ("auto", "closed", "quad"):
        raise ValueError(f"unknown method {method!r}")
    closed = cfg.service.kind == "exponential"
    if method == "closed" and not closed:
        raise ValueError("closed form needs exponential service")
    return closed and method != "quad"


def wait_moments(cfg: SystemConfig, xi: float, method: str = "auto") -> tuple[float, float, float]:
    """``(E[w], E[w^2], E[Y w])`` for ``w(y) = [xi - y]^+``."""
    if xi < 0:
        raise ValueError("threshold must be nonnegative")
    svc = cfg.service
    if xi == 0:
        return 0.0, 0.0, 0.0
    if _closed_form_ok(cfg, method):
        mu = svc.mean
        tail = math.exp(-xi / mu)
        ew = xi - mu + mu * tail
        ew2 = xi * xi - 2 * mu * xi + 2 * mu * mu * (1 - tail)
        eyw = xi * mu - 2 * mu * mu + tail * (mu * xi + 2 * mu * mu)
        # cancellation guard for xi << mu
        if xi < 1e-3 * mu:
            ew, ew2, eyw = (
                _quad(lambda y: (xi - y) * svc.pdf(y), xi),
                _quad(lambda y: (xi - y) ** 2 * svc.pdf(y), xi),
                _quad(lambda y: y * (xi - y) * svc.pdf(y), xi),
            )
        return ew, ew2, eyw
    return (
        _quad(lambda y: (xi - y) * svc.pdf(y), xi),
        _quad(lambda y: (xi - y) ** 2 * svc.pdf(y), xi),
        _quad(lambda y: y * (xi - y) * svc.pdf(y), xi),
    )


def _quad(f, xi: float) -> float:
    val, _ = integrate.quad(lambda y: float(f(y)), 0.0, xi, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    return val


def _epoch_moments(cfg: SystemConfig, xi: float, method: str) -> tuple[float, float]:
    """Numerator and denominator of the AoI ratio; the numerator minus ``theta`` times the denominator is the Dinkelbach objective."""
    proc = _single(cfg)
    mu, mu2 = cfg.service.mean, cfg.service.second_moment
    ix = 1.0 / proc.rate
    ew, ew2, eyw = wait_moments(cfg, xi, method)
    c = ix + mu
    num = eyw + mu * c + 0.5 * (ew2 + 2 * ew * c + 2 * ix * ix + 2 * mu * ix + mu2)
    return num, ew + c


def aoi_of_threshold(cfg: SystemConfig, xi: float, method: str = "auto") -> float:
    if xi < 0:
        raise ValueError("threshold must be nonnegative")
    num, den = _epoch_moments(cfg, xi, method)
    return num / den


def error_of_threshold(cfg: SystemConfig, xi: float, method: str = "auto") -> float:
    """``E[h(max(Y, xi))]``: the waiting policy stretches every gap to at least ``xi``."""
    if xi < 0:
        raise ValueError("threshold must be nonnegative")
    proc = _single(cfg)
    h, svc = proc.recovery, cfg.service
    if h.alpha == 0:
        return 1.0
    if _closed_form_ok(cfg, method):
        a, mu = h.alpha, svc.mean
        return math.exp(-a * xi) * -math.expm1(-xi / mu) + math.exp(-(a + 1 / mu) * xi) / (1 + a * mu)
    below = float(h(xi) * svc.cdf(xi))
    tail, _ = integrate.quad(
        lambda y: float(h(y) * svc.pdf(y)), xi, np.inf, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200
    )
    return below + tail


def solve_threshold_for_credibility(cfg: SystemConfig, tau: float) -> float:
    """Smallest ``xi >= 0`` whose long-term error is at most ``tau``."""
    h = _single(cfg).recovery
    if tau <= 0 or tau <= h.floor:
        raise InfeasibleError(
            f"credibility bound {tau:g} is not attainable; the error only tends to {h.floor:g}"
        )
    err = lambda xi: error_of_threshold(cfg, xi)
    if err(0.0) <= tau:
        return 0.0
    hi = grow_bracket(lambda xi: err(xi) <= tau)
    lo = 0.0 if hi == 1.0 else hi / 2.0
    # error is non-increasing, so bisect on its negation
    return bisect_increasing(lambda xi: -err(xi), -tau, lo, hi, xtol=1e-10, ftol=1e-9)


def dinkelbach_p(cfg: SystemConfig, tau: Optional[float], theta: float) -> tuple[float, float]:
    """Value of the parametric problem at ``theta`` and the threshold attaining it.

    Without an active constraint the minimizer is ``xi = theta - 1/lambda - mu``.
    If that violates the credibility bound the constraint holds with equality,
    so the threshold comes from the bound instead.
    """
    proc = _single(cfg)
    xi = max(0.0, theta - 1.0 / proc.rate - cfg.service.mean)
    if tau is not None and math.isfinite(tau) and error_of_threshold(cfg, xi) > tau:
        xi = solve_threshold_for_credibility(cfg, tau)
    num, den = _epoch_moments(cfg, xi, "auto")
    return num - theta * den, xi


def solve_single(cfg: SystemConfig, tau: Optional[float] = None) -> SingleSolution:
    """Minimize AoI subject to ``error <= tau`` (``tau=None`` uses the config's bound)."""
    proc = _single(cfg)
    if tau is None:
        tau = cfg.credibility_bound
    if tau is not None and math.isfinite(tau):
        # fail fast on unattainable bounds
        solve_threshold_for_credibility(cfg, tau)
    else:
        tau = None

    p = lambda th: dinkelbach_p(cfg, tau, th)[0]
    lo = cfg.service.mean
    if p(lo) < 0:
        lo = 0.0
    hi = aoi_of_threshold(cfg, 0.0)
    for _ in range(200):
        if p(hi) < 0:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket the optimal AoI")

    theta = hi
    for _ in range(500):
        theta = 0.5 * (lo + hi)
        val = p(theta)
        if abs(val) <= 1e-8 * (1 + theta) or hi - lo <= 1e-10:
            break
        if val > 0:
            lo = theta
        else:
            hi = theta
    else:
        raise ConvergenceError("Dinkelbach bisection did not converge")

    _, xi = dinkelbach_p(cfg, tau, theta)
    xi0 = max(0.0, theta - 1.0 / proc.rate - cfg.service.mean)
    active = tau is not None and error_of_threshold(cfg, xi0) > tau
    aoi = aoi_of_threshold(cfg, xi)
    return SingleSolution(
        theta_star=theta,
        xi_star=xi,
        gamma_active=active,
        aoi=aoi,
        err=error_of_threshold(cfg, xi),
        objective=aoi,
        beta=None,
        tau=tau,
    )


def solve_weighted(cfg: SystemConfig, beta: Optional[float] = None) -> SingleSolution:
    """Minimize ``AoI + (1-beta)/beta * error`` over the threshold by line search."""
    proc = _single(cfg)
    if beta is None:
        beta = proc.beta
    if beta == 0:
        raise ValueError(
            "beta=0 is degenerate: the error is driven to "
            f"{proc.recovery.floor:g} only as the wait grows without bound"
        )
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")

    c = (1.0 - beta) / beta
    obj = lambda xi: aoi_of_threshold(cfg, xi) + c * error_of_threshold(cfg, xi)
    base = obj(0.0)
    # AoI is quasi-convex in xi and the error term is nonnegative, so nothing past
    # a point whose AoI already exceeds obj(0) can beat it
    hi = grow_bracket(lambda x: aoi_of_threshold(cfg, x) > base)
    xi, val = grid_then_golden(obj, 0.0, hi, points=256, xtol=1e-8)
    if base <= val:
        xi, val = 0.0, base

    aoi = aoi_of_threshold(cfg, xi)
    theta_unc = xi + 1.0 / proc.rate + cfg.service.mean
    return SingleSolution(
        theta_star=aoi,
        xi_star=xi,
        gamma_active=bool(c > 0 and abs(aoi - theta_unc) > 1e-6 and xi > 0),
        aoi=aoi,
        err=error_of_threshold(cfg, xi),
        objective=val,
        beta=beta,
        tau=None,
    )


def threshold_curve(cfg: SystemConfig, xis, beta: float = 1.0) -> list[dict]:
    """Diagnostic (xi, aoi, err, objective) samples."""
    c = (1.0 - beta) / beta
    rows = []
    for xi in xis:
        a, e = aoi_of_threshold(cfg, float(xi)), error_of_threshold(cfg, float(xi))
        rows.append({"xi": float(xi), "aoi": a, "err": e, "objective": a + c * e})
    return rows
