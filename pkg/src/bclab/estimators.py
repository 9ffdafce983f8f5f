"""Local dimension estimates and the liminf n^beta d(T^n x, y) observable."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation, NoDataError
from .systems import Point, System, as_point, ball_measure, distance_blocks
from .targets import dyadic_checkpoints
from .waiting import exponent_scan, tail_window

TAIL_FRACTION = 0.25


@dataclass(frozen=True)
class DimensionEstimate:
    y: Point
    method: str
    d_lower_proxy: float
    d_upper_proxy: float
    samples: tuple[tuple[float, float], ...]
    censored: int = 0


def _proxies(stats: Sequence[float]) -> tuple[float, float]:
    tail = tail_window(stats, TAIL_FRACTION)
    return min(tail), max(tail)


def _check_radii(radii: Sequence[float]) -> list[float]:
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ContractViolation("radii must be strictly decreasing")
    return radii


def dimension_from_measure(system: System, y, radii: Sequence[float]) -> DimensionEstimate:
    """Statistic log mu(B(y, r)) / log r per radius; tail min/max as the proxies."""
    radii = _check_radii(radii)
    if len(radii) < 4:
        raise ContractViolation("need at least 4 radii")
    if any(not 0 < r < 0.5 for r in radii):
        raise ContractViolation("radii must lie in (0, 1/2)")
    y = as_point(y)
    samples = tuple((r, math.log(ball_measure(system, y, r)) / math.log(r)) for r in radii)
    lo, hi = _proxies([s for _, s in samples])
    return DimensionEstimate(y, "measure-slope", lo, hi, samples)


def dimension_from_waiting(system: System, x, y, radii: Sequence[float], horizon: int) -> DimensionEstimate:
    """Statistic log tau_{B(y, r)}(x) / -log r; censored and full-measure entries are dropped."""
    scan = exponent_scan(system, x, y, _check_radii(radii), horizon)
    samples = tuple((e.r, math.log(e.tau) / -math.log(e.r)) for e in scan.usable())
    if not samples:
        raise NoDataError("every radius was censored or covered the whole space")
    lo, hi = _proxies([s for _, s in samples])
    return DimensionEstimate(scan.y, "waiting-time", lo, hi, samples, censored=scan.censored)


@dataclass(frozen=True)
class RecurrenceQuantity:
    x: Point
    y: Point | None
    beta: float
    running_min: tuple[tuple[int, float], ...]
    argmin: int

    @property
    def final(self) -> float:
        return self.running_min[-1][1]


def recurrence_liminf(system: System, x, beta: float, N: int, y=None) -> RecurrenceQuantity:
    """min over n <= N of n^beta d(T^n x, target), target y or (when absent) x itself."""
    if not beta > 0:
        raise ContractViolation("beta must be > 0")
    if N < 1:
        raise ContractViolation("N must be >= 1")
    x = as_point(x)
    target = x if y is None else as_point(y)
    checkpoints = dyadic_checkpoints(N) if N > 1 else [1]
    best, best_n = math.inf, 0
    rows = []
    ci = 0
    n0 = 1
    for d in distance_blocks(system, x, target, N):
        n = np.arange(n0, n0 + d.size, dtype=np.float64)
        vals = n**beta * d
        stop = n0 + d.size
        lo = 0
        while ci < len(checkpoints) and checkpoints[ci] < stop:
            hi = checkpoints[ci] - n0 + 1
            if hi > lo:
                i = lo + int(np.argmin(vals[lo:hi]))
                if vals[i] < best:
                    best, best_n = float(vals[i]), n0 + i
            rows.append((checkpoints[ci], best))
            lo = hi
            ci += 1
        if lo < d.size:
            i = lo + int(np.argmin(vals[lo:]))
            if vals[i] < best:
                best, best_n = float(vals[i]), n0 + i
        n0 = stop
    return RecurrenceQuantity(x, None if y is None else target, beta, tuple(rows), best_n)
