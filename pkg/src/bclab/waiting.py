"""First-entry (waiting) times into balls and their scaling exponents."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ContractViolation, NoDataError
from .systems import Point, System, as_point, ball_measure, distance_blocks


@dataclass(frozen=True)
class Exceeded:
    """Censored waiting time: no entry within ``horizon`` steps."""

    horizon: int

    def __str__(self):
        return f"exceeded:{self.horizon}"


Tau = Union[int, Exceeded]


def exponent_of(tau: Tau, mu_ball: float) -> float | None:
    """log(tau) / -log(mu); 0 for full-measure balls; None when censored."""
    if isinstance(tau, Exceeded):
        return None
    if mu_ball >= 1.0:
        return 0.0
    return math.log(tau) / -math.log(mu_ball)


@dataclass(frozen=True)
class WaitingTimeRecord:
    x: Point
    y: Point
    r: float
    tau: Tau
    mu_ball: float

    @property
    def exponent(self) -> float | None:
        return exponent_of(self.tau, self.mu_ball)

    @property
    def resolved(self) -> bool:
        return not isinstance(self.tau, Exceeded)


@dataclass(frozen=True)
class ExponentScan:
    x: Point
    y: Point
    entries: tuple[WaitingTimeRecord, ...]
    horizon: int

    @property
    def radii(self) -> list[float]:
        return [e.r for e in self.entries]

    @property
    def taus(self) -> list[Tau]:
        return [e.tau for e in self.entries]

    def usable(self) -> list[WaitingTimeRecord]:
        """Resolved entries with a proper (measure < 1) ball."""
        return [e for e in self.entries if e.resolved and e.mu_ball < 1.0]

    @property
    def censored(self) -> int:
        return sum(not e.resolved for e in self.entries)


def waiting_time(system: System, x, y, r: float, horizon: int) -> Tau:
    """Least n in [1, horizon] with d(T^n x, y) <= r, else Exceeded(horizon)."""
    if not r > 0:
        raise ContractViolation("radius must be positive")
    if horizon < 1:
        raise ContractViolation("horizon must be >= 1")
    n0 = 1
    for d in distance_blocks(system, x, y, horizon):
        hit = np.flatnonzero(d <= r)
        if hit.size:
            return n0 + int(hit[0])
        n0 += d.size
    return Exceeded(horizon)


def exponent_scan(system: System, x, y, radii: Sequence[float], horizon: int) -> ExponentScan:
    """Waiting times for a strictly decreasing list of radii from one orbit pass."""
    radii = [float(r) for r in radii]
    if not radii:
        raise ContractViolation("radii list is empty")
    if any(not r > 0 for r in radii):
        raise ContractViolation("radii must be positive")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ContractViolation("radii must be strictly decreasing")
    if horizon < 1:
        raise ContractViolation("horizon must be >= 1")
    x, y = as_point(x), as_point(y)
    taus: list[Tau] = [Exceeded(horizon)] * len(radii)
    i = 0  # largest unresolved radius
    n0 = 1
    for d in distance_blocks(system, x, y, horizon):
        pos = 0
        while i < len(radii):
            hit = np.flatnonzero(d[pos:] <= radii[i])
            if not hit.size:
                break
            pos += int(hit[0])
            dn = d[pos]
            # nested balls: this entry resolves every radius it lies within
            while i < len(radii) and dn <= radii[i]:
                taus[i] = n0 + pos
                i += 1
            pos += 1
        if i == len(radii):
            break
        n0 += d.size
    entries = tuple(
        WaitingTimeRecord(x, y, r, t, ball_measure(system, y, r)) for r, t in zip(radii, taus)
    )
    return ExponentScan(x, y, entries, horizon)


def prop1_bound(n: int, mu_Bn: float, epsilon: float) -> float:
    """1 - (1 + epsilon) log n / -log mu(B_n): the eventual lower bound for the exponent."""
    if n < 1:
        raise ContractViolation("n must be >= 1")
    if not 0 < mu_Bn < 1:
        raise ContractViolation("mu(B_n) must lie in (0, 1)")
    if not epsilon > 0:
        raise ContractViolation("epsilon must be > 0")
    return 1.0 - (1.0 + epsilon) * math.log(n) / -math.log(mu_Bn)


def halving_radii(system: System, n_max: int) -> list[float]:
    """Radii with mu(B_n) = 2^-n for n = 1..n_max on a torus of the system's dimension."""
    d = system.dim
    return [0.5 * 2.0 ** (-n / d) for n in range(1, n_max + 1)]


@dataclass(frozen=True)
class Prop1Entry:
    n: int
    mu_ball: float
    exponent: float
    bound: float

    @property
    def violated(self) -> bool:
        return self.exponent < self.bound


def prop1_entries(scan: ExponentScan, epsilon: float = 1.0) -> list[Prop1Entry]:
    """Resolved scan entries (indexed n = 1, 2, ...) against the finite-n bound."""
    out = []
    for n, e in enumerate(scan.entries, start=1):
        if e.resolved and e.mu_ball < 1.0:
            out.append(Prop1Entry(n, e.mu_ball, e.exponent, prop1_bound(n, e.mu_ball, epsilon)))
    return out


def tail_window(values: Sequence[float], tail_fraction: float) -> list[float]:
    """The final ``ceil(tail_fraction * len)`` values (at least one)."""
    if not 0 < tail_fraction < 1:
        raise ContractViolation("tail_fraction must lie in (0, 1)")
    k = max(1, math.ceil(tail_fraction * len(values)))
    return list(values[-k:])


def tail_liminf_limsup(scan: ExponentScan, tail_fraction: float = 0.25) -> tuple[float, float]:
    """min and max of the exponent over the smallest-radius tail of usable entries."""
    usable = scan.usable()
    if not usable:
        raise NoDataError("no resolved entries with a proper ball")
    if len(usable) < 4:
        raise ContractViolation(f"need at least 4 resolved entries, have {len(usable)}")
    tail = tail_window([e.exponent for e in usable], tail_fraction)
    return min(tail), max(tail)


def tail_exponent(scan: ExponentScan, tail_fraction: float = 0.25) -> float:
    """Median exponent over the tail window: the per-trial headline statistic."""
    usable = scan.usable()
    if not usable:
        raise NoDataError("no resolved entries with a proper ball")
    return float(np.median(tail_window([e.exponent for e in usable], tail_fraction)))
