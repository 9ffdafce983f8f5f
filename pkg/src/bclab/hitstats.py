"""The hit count S_N(x) along a shrinking target and the signatures built on it."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation
from .seeding import trial_rng
from .systems import System, as_point, ball_measures, distance_blocks, random_point
from .targets import RadiusSchedule, TargetSequence, dyadic_checkpoints

HIT_CAP = 10**5
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class HitStats:
    N: int
    S_N: int
    sum_mu: float
    hit_times: tuple[int, ...]
    overflow: int
    last_hit: int
    max_gap: int

    @property
    def ratio(self) -> float:
        return self.S_N / self.sum_mu if self.sum_mu > 0 else 0.0

    @property
    def max_gap_ratio(self) -> float:
        return self.max_gap / self.N


def hit_stats(system: System, x, target: TargetSequence, N: int, cap: int = HIT_CAP) -> list[HitStats]:
    """Snapshots of S_N, sum of mu(A_n) and gap data at N = 2, 4, 8, ... (and N itself).

    Gaps use 0 and the checkpoint as sentinels.
    """
    if N < 1:
        raise ContractViolation("N must be >= 1")
    x = as_point(x)
    y = target.center
    checkpoints = dyadic_checkpoints(N) if N > 1 else [1]
    out: list[HitStats] = []
    hits: list[int] = []
    S = 0
    sum_mu = 0.0
    last_hit = 0
    inner_gap = 0  # largest gap between consecutive hits, counting 0 as a hit
    ci = 0
    n0 = 1
    for d in distance_blocks(system, x, y, N):
        n = np.arange(n0, n0 + d.size)
        r = target.schedule.radii(n)
        mu_cum = sum_mu + np.cumsum(ball_measures(system, y, r))
        block_hits = n[d <= r]
        stop = n0 + d.size
        while True:
            upto = checkpoints[ci] if ci < len(checkpoints) and checkpoints[ci] < stop else stop - 1
            take = block_hits[block_hits <= upto]
            block_hits = block_hits[take.size :]
            if take.size:
                gaps = np.diff(np.concatenate(([last_hit], take)))
                inner_gap = max(inner_gap, int(gaps.max()))
                last_hit = int(take[-1])
                S += int(take.size)
                room = cap - len(hits)
                if room > 0:
                    hits.extend(int(t) for t in take[:room])
            if ci < len(checkpoints) and checkpoints[ci] < stop:
                c = checkpoints[ci]
                out.append(
                    HitStats(
                        N=c,
                        S_N=S,
                        sum_mu=float(mu_cum[c - n0]),
                        hit_times=tuple(hits),
                        overflow=S - len(hits),
                        last_hit=last_hit,
                        max_gap=max(inner_gap, c - last_hit),
                    )
                )
                ci += 1
            else:
                break
        sum_mu = float(mu_cum[-1])
        n0 = stop
    return out


@dataclass(frozen=True)
class BCVerdict:
    hits_in_every_dyadic_window: bool
    last_hit: int
    max_gap_ratio: float


def bc_proxy(checkpoints: Sequence[HitStats], k0: int = 4) -> BCVerdict:
    """Finite stand-in for 'infinitely many hits': a hit in every window (2^k, 2^(k+1)], k >= k0."""
    if not checkpoints:
        raise ContractViolation("no checkpoints")
    by_n = {c.N: c.S_N for c in checkpoints}
    final = checkpoints[-1]
    ok = True
    k = k0
    while 2**k < final.N:
        lo, hi = 2**k, min(2 ** (k + 1), final.N)
        if by_n[hi] <= by_n[lo]:
            ok = False
            break
        k += 1
    return BCVerdict(ok, final.last_hit, final.max_gap_ratio)


def quantiles(values: Sequence[float], qs=QUANTILES) -> dict[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return {q: float(np.quantile(arr, q)) for q in qs}


@dataclass(frozen=True)
class StallRecord:
    gap_ratios_a: tuple[float, ...]
    gap_ratios_b: tuple[float, ...]
    quantiles_a: dict
    quantiles_b: dict

    @property
    def median_ratio(self) -> float:
        """median max_gap_ratio of system b over that of system a."""
        a = self.quantiles_a[0.5]
        return self.quantiles_b[0.5] / a if a > 0 else float("inf")


def trial_gap_ratio(system: System, schedule: RadiusSchedule, N: int, master_seed: int, index: int) -> float:
    rng = trial_rng(master_seed, index)
    x = random_point(system, rng)
    y = random_point(system, rng)
    stats = hit_stats(system, x, TargetSequence(y, schedule), N)
    return stats[-1].max_gap_ratio


def stall_signature(system_a: System, system_b: System, schedule: RadiusSchedule, N: int, seeds: int, master_seed: int = 0) -> StallRecord:
    """max_gap_ratio quantiles of two systems under one schedule and shared trial seeds."""
    if system_a.dim != system_b.dim or system_a.metric != system_b.metric:
        raise ContractViolation("both systems must live on the same space")
    a = tuple(trial_gap_ratio(system_a, schedule, N, master_seed, i) for i in range(seeds))
    b = tuple(trial_gap_ratio(system_b, schedule, N, master_seed, i) for i in range(seeds))
    return StallRecord(a, b, quantiles(a), quantiles(b))
