"""Bracketed scalar search routines shared by the solvers."""

from __future__ import annotations

import math
from typing import Callable

from aoicred.model import ConvergenceError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def grow_bracket(pred: Callable[[float], bool], start: float = 1.0, limit: float = 1e12) -> float:
    """Double ``start`` until ``pred`` holds; raise if ``limit`` is passed."""
    x = start
    while not pred(x):
        x *= 2.0
        if x > limit:
            raise ConvergenceError(f"no bracket found below {limit:g}")
    return x


def bisect_increasing(
    f: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    xtol: float = 1e-10,
    ftol: float = 0.0,
    max_iter: int = 500,
) -> float:
    """Root of ``f(x) = target`` for non-decreasing ``f`` on ``[lo, hi]``.

    Returns the upper end of the final bracket, i.e. a point with ``f >= target``.
    """
    for _ in range(max_iter):
        if hi - lo <= xtol:
            return hi
        mid = 0.5 * (lo + hi)
        val = f(mid)
        if ftol and abs(val - target) <= ftol and val >= target:
            return mid
        if val < target:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError("bisection did not converge")


def golden_section(
    f: Callable[[float], float], a: float, b: float, xtol: float = 1e-8, max_iter: int = 500
) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    else:
        raise ConvergenceError("golden-section search did not converge")
    return (c, fc) if fc <= fd else (d, fd)


def grid_then_golden(
    f: Callable[[float], float], lo: float, hi: float, points: int = 256, xtol: float = 1e-8
) -> tuple[float, float]:
    """Coarse grid scan on ``[lo, hi]`` followed by golden-section refinement.

    The grid guards against non-unimodal objectives; refinement happens on the
    two cells around the best grid point.
    """
    step = (hi - lo) / (points - 1)
    xs = [lo + j * step for j in range(points)]
    vals = [f(x) for x in xs]
    j = min(range(points), key=vals.__getitem__)
    a = xs[max(j - 1, 0)]
    b = xs[min(j + 1, points - 1)]
    x, fx = golden_section(f, a, b, xtol=xtol)
    if vals[j] < fx:
        return xs[j], vals[j]
    return x, fx
