"""Shrinking targets B(y, r_n) and their radius schedules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ContractViolation
from .systems import BLOCK, Point, System, as_point, ball_measures

MONOTONE_PROBE = 10**4


class RadiusSchedule:
    """r_n for n >= 1.  Subclasses provide ``log_radii``; radii follow from it."""

    def log_radii(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def radii(self, n: np.ndarray) -> np.ndarray:
        return np.exp(self.log_radii(np.asarray(n, dtype=np.float64)))

    def radius_at(self, n: int) -> float:
        return radius_at(self, n)

    def config(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLaw(RadiusSchedule):
    K: float
    beta: float

    def __post_init__(self):
        if not self.K > 0:
            raise ContractViolation("K must be > 0")
        if not self.beta > 0:
            raise ContractViolation("beta must be > 0")

    def log_radii(self, n):
        return math.log(self.K) - self.beta * np.log(n)

    def radii(self, n):
        return self.K * np.asarray(n, dtype=np.float64) ** (-self.beta)

    def config(self):
        return f"powerlaw K={self.K!r} beta={self.beta!r}"


@dataclass(frozen=True)
class Geometric(RadiusSchedule):
    r0: float
    lam: float

    def __post_init__(self):
        if not self.r0 > 0:
            raise ContractViolation("r0 must be > 0")
        if not 0 < self.lam < 1:
            raise ContractViolation("lambda must be in (0,1)")

    def log_radii(self, n):
        return math.log(self.r0) + np.asarray(n, dtype=np.float64) * math.log(self.lam)

    def config(self):
        return f"geometric r0={self.r0!r} lambda={self.lam!r}"


@dataclass(frozen=True)
class Explicit(RadiusSchedule):
    values: tuple[float, ...]
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ContractViolation("explicit schedule is empty")
        if any(not v > 0 for v in vals):
            raise ContractViolation("radii must be > 0")
        head = np.asarray(vals[:MONOTONE_PROBE])
        if np.any(np.diff(head) > 0):
            raise ContractViolation("explicit radii must be non-increasing")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def radii(self, n):
        idx = np.asarray(n, dtype=np.int64)
        if idx.size and (idx.min() < 1 or idx.max() > len(self.values)):
            raise IndexError(f"explicit schedule has {len(self.values)} radii")
        return np.asarray(self.values)[idx - 1]

    def log_radii(self, n):
        return np.log(self.radii(n))

    def config(self):
        if self.source:
            return f"explicit file={self.source}"
        return "explicit values=" + ",".join(repr(v) for v in self.values)


def _power(n, K, beta):
    return math.log(K) - beta * np.log(n)


def _logpower(n, K, beta, gamma):
    return math.log(K) - beta * np.log(n) + gamma * np.log(np.log(n + math.e))


# name -> (log f^{-1}(n), parameter names)
INVERSE_F_CATALOG: dict[str, tuple[Callable, tuple[str, ...]]] = {
    "power": (_power, ("K", "beta")),
    "logpower": (_logpower, ("K", "beta", "gamma")),
}


@dataclass(frozen=True)
class InverseF(RadiusSchedule):
    """r_n = f^{-1}(n) for an f^{-1} drawn from ``INVERSE_F_CATALOG``.

    ``power``: K n^-beta.  ``logpower``: K n^-beta log(n + e)^gamma.
    """

    name: str
    params: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if self.name not in INVERSE_F_CATALOG:
            raise ContractViolation(f"unknown inverse-f {self.name!r}; catalog: {sorted(INVERSE_F_CATALOG)}")
        params = dict(self.params)
        _, names = INVERSE_F_CATALOG[self.name]
        missing = [p for p in names if p not in params]
        if missing:
            raise ContractViolation(f"inverse-f {self.name} needs {', '.join(missing)}")
        if not params["K"] > 0:
            raise ContractViolation("K must be > 0")
        object.__setattr__(self, "params", tuple((p, float(params[p])) for p in names))
        probe = self.log_radii(np.arange(1, MONOTONE_PROBE + 1, dtype=np.float64))
        if np.any(np.diff(probe) > 0):
            raise ContractViolation(f"inverse-f {self.name} is not decreasing on the first {MONOTONE_PROBE} indices")

    def log_radii(self, n):
        fn, _ = INVERSE_F_CATALOG[self.name]
        return fn(np.asarray(n, dtype=np.float64), **dict(self.params))

    def config(self):
        return f"inversef name={self.name} " + " ".join(f"{k}={v!r}" for k, v in self.params)


def radius_at(schedule: RadiusSchedule, n: int) -> float:
    if n < 1:
        raise ContractViolation("schedules start at n = 1")
    return float(schedule.radii(np.array([n]))[0])


@dataclass(frozen=True)
class TargetSequence:
    center: Point
    schedule: RadiusSchedule

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        n_check = MONOTONE_PROBE
        if isinstance(self.schedule, Explicit):
            n_check = min(n_check, len(self.schedule))
        r = self.schedule.radii(np.arange(1, n_check + 1))
        if np.any(np.diff(r) > 0):
            raise ContractViolation("target balls must be nested (radii non-increasing)")


def dyadic_checkpoints(N: int) -> list[int]:
    """2, 4, 8, ... up to N, with N appended when it is not a power of two."""
    out = []
    c = 2
    while c <= N:
        out.append(c)
        c *= 2
    if not out or out[-1] != N:
        out.append(N)
    return out


def classify_growth(checkpoints, sums) -> str:
    """bounded / logarithmic / power from the last two dyadic increments of the partial sums."""
    pairs = [(c, s) for c, s in zip(checkpoints, sums) if c & (c - 1) == 0]
    incs = [b[1] - a[1] for a, b in zip(pairs, pairs[1:])]
    if len(incs) < 2:
        first, last = sums[0], sums[-1]
        return "power" if last >= 0.95 * checkpoints[-1] * first / checkpoints[0] else "logarithmic"
    prev, last = incs[-2], incs[-1]
    if prev <= 0:
        return "bounded"
    ratio = last / prev
    if ratio > 1.05:
        return "power"
    if ratio >= 0.95:
        return "logarithmic"
    return "bounded"


@dataclass(frozen=True)
class MeasureSeries:
    checkpoints: tuple[int, ...]
    sums: tuple[float, ...]
    growth: str

    @property
    def total(self) -> float:
        return self.sums[-1]


def measure_series(system: System, target: TargetSequence, N: int) -> MeasureSeries:
    """Partial sums of mu(B(y, r_n)) reported at dyadic checkpoints."""
    if N < 1:
        raise ContractViolation("N must be >= 1")
    cps = dyadic_checkpoints(N) if N > 1 else [1]
    sums = []
    total = 0.0
    ci = 0
    start = 1
    while start <= N:
        stop = min(start + BLOCK, N + 1)
        n = np.arange(start, stop)
        mu = ball_measures(system, target.center, target.schedule.radii(n))
        partial = total + np.cumsum(mu)
        while ci < len(cps) and cps[ci] < stop:
            sums.append(float(partial[cps[ci] - start]))
            ci += 1
        total = float(partial[-1])
        start = stop
    return MeasureSeries(tuple(cps), tuple(sums), classify_growth(cps, sums))


@dataclass(frozen=True)
class MSTCheck:
    estimate: float
    threshold: float
    satisfied: bool
    trivial: bool


def mst_condition(schedule: RadiusSchedule, d_lower: float, n_probe: int) -> MSTCheck:
    """Top-decade proxy for limsup log r_n / (-log n), compared with 1 / d_lower."""
    if n_probe < 100:
        raise ContractViolation("n_probe must be >= 100")
    if not d_lower > 0:
        raise ContractViolation("d_lower must be > 0")
    n = np.arange(math.ceil(n_probe / 10), n_probe + 1, dtype=np.float64)
    logs = schedule.log_radii(n)
    ratio = logs / -np.log(n)
    threshold = 1.0 / d_lower
    if np.any(logs >= 0):
        return MSTCheck(float(ratio.max()), threshold, True, True)
    est = float(ratio.max())
    return MSTCheck(est, threshold, est < threshold, False)


def _num(text: str) -> float:
    return float(Fraction(text.strip()))


def parse_schedule(text: str, base_dir: Path | None = None) -> RadiusSchedule:
    """``powerlaw K=.. beta=..``, ``geometric r0=.. lambda=..``, ``explicit file=..``,
    ``explicit values=a,b,..`` or ``inversef name=.. <params>``."""
    head, _, rest = text.strip().partition(" ")
    kv = dict(tok.split("=", 1) for tok in rest.split())
    if head == "powerlaw":
        return PowerLaw(_num(kv["K"]), _num(kv["beta"]))
    if head == "geometric":
        return Geometric(_num(kv["r0"]), _num(kv["lambda"]))
    if head == "explicit":
        if "file" in kv:
            path = Path(kv["file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            values = [_num(line) for line in path.read_text().splitlines() if line.strip()]
            return Explicit(tuple(values), source=kv["file"])
        return Explicit(tuple(_num(v) for v in kv["values"].split(",")))
    if head == "inversef":
        name = kv.pop("name")
        return InverseF(name, tuple((k, _num(v)) for k, v in kv.items()))
    raise ValueError(f"unknown schedule form {head!r}")
