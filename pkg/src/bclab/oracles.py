"""Slow, independent reference computations.

Nothing here shares code paths with the fast engines: orbits are stepped one
point at a time in exact arithmetic where possible, continued fractions come
from textbook Euclid, gaps from sorting every point.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable

from .systems import (
    CircleRotation,
    ExpandingMap,
    IntervalExchange,
    Point,
    System,
    ToralAutomorphism,
    TorusRotation,
)

_LATTICE = 1 << 64


def _circle(a: float, b: float) -> float:
    t = abs(a - b) % 1.0
    return min(t, 1.0 - t)


def _expansion_value(point: Point, digits: int) -> Fraction:
    """Exact value of the first ``digits`` base-k digits of a digit-stream point."""
    stream = point.expansion
    k = stream.base
    num, count = 0, 0
    for block in stream.blocks():
        for d in block:
            num = num * k + int(d)
            count += 1
            if count == digits:
                return Fraction(num, k**digits)
    raise AssertionError("unreachable")


def expanding_orbit(k: int, x: Point, n: int) -> list[float]:
    """T^1 x .. T^n x for x -> kx mod 1 by exact rational iteration."""
    # 64 spare digits keep every visited value exact to well below float resolution
    v = _expansion_value(x, n + 64) if x.expansion is not None else Fraction(x.coords[0])
    out = []
    for _ in range(n):
        v = (k * v) % 1
        out.append(float(v))
    return out


def _lattice_orbit_rotation(alphas: Iterable[int], x: Point, n: int) -> list[tuple[float, ...]]:
    pos = [int(c * 2.0**64) for c in x.coords]
    out = []
    for _ in range(n):
        pos = [(p + a) % _LATTICE for p, a in zip(pos, alphas)]
        out.append(tuple((p >> 11) * 2.0**-53 for p in pos))
    return out


def _lattice_orbit_matrix(M, x: Point, n: int) -> list[tuple[float, ...]]:
    (a, b), (c, d) = M
    u, v = (int(t * 2.0**64) for t in x.coords)
    out = []
    for _ in range(n):
        u, v = (a * u + b * v) % _LATTICE, (c * u + d * v) % _LATTICE
        out.append(((u >> 11) * 2.0**-53, (v >> 11) * 2.0**-53))
    return out


def _iet_point(spec, x: float) -> float:
    for i, (left, length) in enumerate(zip(spec.lefts, spec.lengths)):
        if left <= x < left + length or i == spec.m - 1:
            target = spec.permutation[i]
            slot = sum(spec.lengths[j] for j in range(spec.m) if spec.permutation[j] < target)
            return min(max(x - left + slot, 0.0), math.nextafter(1.0, 0.0))
    raise AssertionError("unreachable")


def naive_orbit(system: System, x: Point, n: int) -> list[tuple[float, ...]]:
    """T^1 x .. T^n x, one point at a time."""
    from . import diophantine

    if isinstance(system, ExpandingMap):
        return [(v,) for v in expanding_orbit(system.k, x, n)]
    if isinstance(system, (CircleRotation, TorusRotation)):
        lat = [diophantine.scaled_floor(a) % _LATTICE for a in system.alphas]
        return _lattice_orbit_rotation(lat, x, n)
    if isinstance(system, ToralAutomorphism):
        return _lattice_orbit_matrix(system.matrix, x, n)
    if isinstance(system, IntervalExchange):
        out, v = [], x.coords[0]
        for _ in range(n):
            v = _iet_point(system.spec, v)
            out.append((v,))
        return out
    raise TypeError(f"no oracle for {type(system).__name__}")


def naive_distance(system: System, a: tuple[float, ...], b: tuple[float, ...]) -> float:
    if isinstance(system, IntervalExchange):
        return abs(a[0] - b[0])
    return max(_circle(s, t) for s, t in zip(a, b))


def naive_waiting_time(system: System, x: Point, y: Point, r: float, horizon: int) -> int | None:
    """Least n >= 1 with d(T^n x, y) <= r by a plain loop; None when no entry by ``horizon``."""
    for n, p in enumerate(naive_orbit(system, x, horizon), start=1):
        if naive_distance(system, p, y.coords) <= r:
            return n
    return None


def euclid_cf(p: int, q: int) -> tuple[int, list[int]]:
    """Integer part and partial quotients of p/q (q > 0)."""
    a0, rem = divmod(p, q)
    quotients = []
    p, q = q, rem
    while q:
        a, rem = divmod(p, q)
        quotients.append(a)
        p, q = q, rem
    return a0, quotients


def fibonacci_convergents(k: int) -> list[tuple[int, int]]:
    """Convergents F_{i}/F_{i+1} of the golden mean conjugate (-1 + sqrt 5)/2."""
    f = [0, 1]
    while len(f) < k + 3:
        f.append(f[-1] + f[-2])
    return [(f[i], f[i + 1]) for i in range(1, k + 1)]


def brute_norm(alpha: Fraction, Q: int) -> Fraction:
    t = (Q * alpha) % 1
    return min(t, 1 - t)


def brute_constant_type(alpha: Fraction, Q_max: int) -> tuple[float, int]:
    """min over Q <= Q_max of Q * ||Q alpha|| for a rational alpha, with its first argmin."""
    best, arg = None, 0
    for Q in range(1, Q_max + 1):
        c = Q * brute_norm(alpha, Q)
        if best is None or c < best:
            best, arg = c, Q
    return float(best), arg


def rotation_gaps(alpha: float, n: int) -> list[float]:
    """Gaps of {0, 1, and the points 1 - j*alpha mod 1, j = 1..n}, sorted."""
    pts = sorted({0.0, 1.0} | {(1.0 - j * alpha) % 1.0 for j in range(1, n + 1)})
    return [b - a for a, b in zip(pts, pts[1:])]


def brute_discontinuities(spec, n: int) -> list[float]:
    """Breakpoints of T^1..T^n found by walking every breakpoint backwards one preimage at a time."""
    pts = set(spec.breakpoints)
    frontier = list(spec.breakpoints)
    for _ in range(n - 1):
        nxt = []
        for p in frontier:
            for i in range(spec.m):
                lo = spec.image_lefts[i]
                if lo <= p < lo + spec.lengths[i]:
                    pre = p - spec.translations[i]
                    if pre > 0:
                        nxt.append(pre)
                    break
        frontier = nxt
        pts.update(nxt)
    return sorted(pts)


def count_distinct(values: Iterable[float], tol: float = 1e-9) -> int:
    """Number of clusters of ``values`` whose members differ by more than ``tol``."""
    count, last = 0, None
    for v in sorted(values):
        if last is None or v - last > tol:
            count += 1
            last = v
    return count
