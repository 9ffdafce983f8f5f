"""Interval exchange transformations and the gap profile of their breakpoints.

Permutation convention: ``permutation[i] = j`` (1-based) sends the i-th
subinterval, counted left to right, to the j-th slot of the image.  The
2-IET with lengths ``(1 - a, a)`` and permutation ``(2, 1)`` is the
rotation ``x -> x + a mod 1``.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ContractViolation

SUM_TOL = 1e-12
DEDUP_TOL = 1e-14
GAP_VALUE_TOL = 1e-9
_BELOW_ONE = math.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class IETSpec:
    lengths: tuple[float, ...]
    permutation: tuple[int, ...]
    lefts: tuple[float, ...] = field(init=False, repr=False, compare=False)
    image_lefts: tuple[float, ...] = field(init=False, repr=False, compare=False)
    translations: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.lengths)
        perm = tuple(int(p) for p in self.permutation)
        m = len(lengths)
        if m == 0:
            raise ContractViolation("an IET needs at least one subinterval")
        if any(not v > 0 for v in lengths):
            raise ContractViolation("lengths must be positive")
        total = math.fsum(lengths)
        if abs(total - 1.0) > SUM_TOL:
            raise ContractViolation(f"lengths must sum to 1 (got {total!r})")
        if sorted(perm) != list(range(1, m + 1)):
            raise ContractViolation(f"permutation {perm} is not a bijection of 1..{m}")
        lengths = tuple(v / total for v in lengths)
        lefts = tuple(math.fsum(lengths[:i]) for i in range(m))
        order = sorted(range(m), key=lambda i: perm[i])
        image_lefts = [0.0] * m
        acc = []
        for i in order:
            image_lefts[i] = math.fsum(acc)
            acc.append(lengths[i])
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "permutation", perm)
        object.__setattr__(self, "lefts", lefts)
        object.__setattr__(self, "image_lefts", tuple(image_lefts))
        object.__setattr__(self, "translations", tuple(b - a for a, b in zip(lefts, image_lefts)))
        # slot order for the inverse map
        object.__setattr__(self, "_slot_lefts", tuple(image_lefts[i] for i in order))
        object.__setattr__(self, "_slot_ids", tuple(order))

    @property
    def m(self) -> int:
        return len(self.lengths)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Interior discontinuities of T (the set D_1)."""
        return self.lefts[1:]

    def config(self) -> str:
        lengths = ",".join(repr(v) for v in self.lengths)
        perm = ",".join(str(p) for p in self.permutation)
        return f"iet lengths={lengths} perm={perm}"

    def images_tile(self) -> bool:
        """Image intervals, sorted by slot, abut each other and cover [0, 1)."""
        order = self._slot_ids
        end = 0.0
        for i in order:
            if abs(self.image_lefts[i] - end) > 1e-15:
                return False
            end = self.image_lefts[i] + self.lengths[i]
        return abs(end - 1.0) <= 1e-12


def rotation_iet(alpha: float) -> IETSpec:
    """Rotation by ``alpha`` written as a 2-IET."""
    alpha = float(alpha)
    return IETSpec((1.0 - alpha, alpha), (2, 1))


def random_iet(rng: np.random.Generator, m: int) -> IETSpec:
    """Lengths uniform on the simplex, reversal permutation (m m-1 ... 1)."""
    lengths = rng.dirichlet(np.ones(m))
    return IETSpec(tuple(lengths), tuple(range(m, 0, -1)))


def _clip(y: float) -> float:
    if y >= 1.0:
        return _BELOW_ONE
    return max(y, 0.0)


def iet_apply(spec: IETSpec, x: float) -> float:
    """Translate ``x`` by the shift of its subinterval [left, right)."""
    i = bisect.bisect_right(spec.lefts, x) - 1
    return _clip(x + spec.translations[i])


def iet_inverse(spec: IETSpec, x: float) -> float:
    j = bisect.bisect_right(spec._slot_lefts, x) - 1
    i = spec._slot_ids[j]
    return _clip(x - spec.translations[i])


def iet_apply_array(spec: IETSpec, x: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(np.asarray(spec.lefts), x, side="right") - 1
    y = x + np.asarray(spec.translations)[idx]
    return np.clip(y, 0.0, _BELOW_ONE)


def iet_inverse_array(spec: IETSpec, x: np.ndarray) -> np.ndarray:
    j = np.searchsorted(np.asarray(spec._slot_lefts), x, side="right") - 1
    ids = np.asarray(spec._slot_ids)[j]
    y = x - np.asarray(spec.translations)[ids]
    return np.clip(y, 0.0, _BELOW_ONE)


class DiscontinuitySet(NamedTuple):
    points: np.ndarray
    complete: bool
    collapsed: bool


def _pullback_levels(spec: IETSpec, n: int):
    """Yield T^{-k}(D_1) for k = 0 .. n-1."""
    level = np.asarray(spec.breakpoints, dtype=np.float64)
    for _ in range(n):
        yield level
        level = iet_inverse_array(spec, level)


def _dedup(points: np.ndarray) -> tuple[np.ndarray, bool]:
    """Sort, merge coincident points and drop any that landed on the ends 0 or 1."""
    if points.size == 0:
        return points, False
    pts = np.sort(points)
    keep = np.concatenate(([True], np.diff(pts) > DEDUP_TOL))
    keep &= (pts > DEDUP_TOL) & (pts < 1.0 - DEDUP_TOL)
    return pts[keep], not keep.all()


def discontinuity_set(spec: IETSpec, n: int, limit: int = 10**7) -> DiscontinuitySet:
    """D_n: union over 0 <= k < n of T^{-k}(D_1), sorted and deduplicated."""
    if n < 1:
        raise ContractViolation("n must be >= 1")
    chunks = []
    total = 0
    complete = True
    for level in _pullback_levels(spec, n):
        if total + level.size > limit:
            complete = False
            break
        chunks.append(level)
        total += level.size
    pts, collapsed = _dedup(np.concatenate(chunks) if chunks else np.empty(0))
    return DiscontinuitySet(pts, complete, collapsed)


def _gaps_with_ends(points: np.ndarray) -> np.ndarray:
    return np.diff(np.concatenate(([0.0], points, [1.0])))


def min_gap(spec: IETSpec, n: int) -> float:
    """delta(n): minimum distance between consecutive points of D_n together with 0 and 1."""
    ds = discontinuity_set(spec, n)
    return float(_gaps_with_ends(ds.points).min())


def distinct_gap_values(points: np.ndarray, tol: float = GAP_VALUE_TOL) -> int:
    gaps = np.sort(_gaps_with_ends(np.sort(points)))
    return 1 + int(np.count_nonzero(np.diff(gaps) > tol))


class _GapTracker:
    """Sorted point set on [0, 1] (ends included) with a running minimum gap."""

    def __init__(self):
        self.points = [0.0, 1.0]
        self.delta = 1.0
        self.pair = (0.0, 1.0)
        self.collapsed = False

    def add(self, x: float):
        pts = self.points
        i = bisect.bisect_left(pts, x)
        left, right = pts[i - 1], pts[i]
        if x - left <= DEDUP_TOL or right - x <= DEDUP_TOL:
            self.collapsed = True
            return
        pts.insert(i, x)
        if x - left < self.delta:
            self.delta, self.pair = x - left, (left, x)
        if right - x < self.delta:
            self.delta, self.pair = right - x, (x, right)


@dataclass
class GapProfile:
    n: np.ndarray
    delta: np.ndarray
    pairs: list
    collapsed: bool = False

    @property
    def scaled(self) -> np.ndarray:
        return self.n * self.delta

    def rows(self):
        for n, d, s in zip(self.n, self.delta, self.scaled):
            yield int(n), float(d), float(s)


def gap_profile(spec: IETSpec, n_max: int) -> GapProfile:
    """delta(n) for every n = 1..n_max in one incremental pass."""
    if n_max < 1:
        raise ContractViolation("n_max must be >= 1")
    tracker = _GapTracker()
    deltas = np.empty(n_max)
    pairs = []
    for k, level in enumerate(_pullback_levels(spec, n_max)):
        for x in level:
            tracker.add(float(x))
        deltas[k] = tracker.delta
        pairs.append(tracker.pair)
    return GapProfile(np.arange(1, n_max + 1), deltas, pairs, tracker.collapsed)


def three_distance_check(spec: IETSpec, n_max: int, tol: float = GAP_VALUE_TOL) -> tuple[bool, int]:
    """Whether D_n with 0 and 1 has at most three distinct gap lengths for all n <= n_max.

    Returns the verdict and the largest distinct-gap count seen.
    """
    pts: list[float] = []
    worst = 0
    for level in _pullback_levels(spec, n_max):
        for x in level:
            bisect.insort(pts, float(x))
        worst = max(worst, distinct_gap_values(np.asarray(pts), tol))
    return worst <= 3, worst


@dataclass(frozen=True)
class PTildeReport:
    best: float
    best_n: int
    achievers: tuple[int, ...]
    tail_best: float
    tail_n: int
    degenerate: bool


def p_tilde_scan(spec: IETSpec, n_max: int, profile: GapProfile | None = None) -> PTildeReport:
    """Finite-horizon evidence for delta(n_k) >= C / n_k along some sequence n_k."""
    if n_max < 10:
        raise ContractViolation("n_max must be >= 10")
    if profile is None:
        profile = gap_profile(spec, n_max)
    scaled = profile.scaled[:n_max]
    order = np.argsort(-scaled, kind="stable")
    top = tuple(int(i) + 1 for i in order[:10])
    lo = math.ceil(n_max / 10) - 1
    tail_i = lo + int(np.argmax(scaled[lo:]))
    return PTildeReport(
        best=float(scaled[order[0]]),
        best_n=int(order[0]) + 1,
        achievers=top,
        tail_best=float(scaled[tail_i]),
        tail_n=tail_i + 1,
        degenerate=profile.collapsed,
    )


def matched_scales(profile: GapProfile, ns: Sequence[int]) -> list[float]:
    """delta(n) at the given indices, used as the ball radii of the bound check."""
    return [float(profile.delta[n - 1]) for n in ns]


@dataclass(frozen=True)
class BoundCheck:
    fraction: float
    within: int
    checked: int
    exceeded: int


def iet_waiting_bound_check(spec: IETSpec, C: float, pairs, rho_list, horizon: int) -> BoundCheck:
    """Fraction of (pair, rho) with tau_{B(y, rho)}(x) <= 4 / (C rho)."""
    from .systems import IntervalExchange, Point
    from .waiting import Exceeded, waiting_time

    if C <= 0:
        raise ContractViolation("C must be positive")
    system = IntervalExchange(spec)
    within = checked = exceeded = 0
    for x, y in pairs:
        for rho in rho_list:
            tau = waiting_time(system, Point((x,)), Point((y,)), rho, horizon)
            checked += 1
            if isinstance(tau, Exceeded):
                exceeded += 1
            elif tau <= 4.0 / (C * rho):
                within += 1
    return BoundCheck(within / checked if checked else 0.0, within, checked, exceeded)

