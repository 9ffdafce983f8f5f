"""Measure-preserving maps on the torus and the unit interval.

Every system preserves Lebesgue (Haar) measure.  Orbits are produced in
blocks of float coordinates by :meth:`System.blocks`; the iteration behind
each block is exact:

* rotations and toral automorphisms act on the lattice ``2**-64 Z^d``
  with wrap-around ``uint64`` arithmetic, so rotations are evaluated as
  ``x0 + n * alpha`` and automorphisms as ``M^n x0`` with no drift;
* the expanding map ``x -> k x mod 1`` is the shift on base-``k`` digits, so
  orbits are read off a digit expansion.  A point may carry a
  :class:`DigitStream` (an infinite seeded expansion) so that a random
  point keeps generic dynamics beyond the 53 bits of its float image;
* interval exchanges are iterated in floating point (translations only, no
  error amplification).
"""
from __future__ import annotations

import bisect
import functools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from . import diophantine
from .diophantine import QuadraticSurd, RotationValue
from .errors import ContractViolation
from .iet import IETSpec, iet_apply, iet_apply_array, iet_inverse, iet_inverse_array

BLOCK = 1 << 15
DIGIT_BLOCK = 4096
_LATTICE = 1 << 64
_F53 = 2.0**-53
_BELOW_ONE = math.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class DigitStream:
    """Seeded i.i.d. base-``base`` digits; ``offset`` digits already shifted out."""

    seed: int
    base: int
    offset: int = 0

    def blocks(self) -> Iterator[np.ndarray]:
        rng = np.random.Generator(np.random.Philox(key=self.seed))
        skip = self.offset
        while True:
            block = rng.integers(0, self.base, size=DIGIT_BLOCK, dtype=np.int64)
            if skip >= DIGIT_BLOCK:
                skip -= DIGIT_BLOCK
                continue
            yield block[skip:]
            skip = 0

    def shifted(self, n: int = 1) -> "DigitStream":
        return DigitStream(self.seed, self.base, self.offset + n)


@dataclass(frozen=True)
class Point:
    coords: tuple[float, ...]
    expansion: DigitStream | None = None

    def __post_init__(self):
        coords = tuple(float(c) for c in np.atleast_1d(self.coords))
        if not coords:
            raise ContractViolation("a point needs at least one coordinate")
        for c in coords:
            if not 0.0 <= c < 1.0:
                raise ContractViolation(f"coordinate {c!r} outside [0, 1)")
        object.__setattr__(self, "coords", coords)

    @property
    def d(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)


def as_point(x) -> Point:
    if isinstance(x, Point):
        return x
    return Point(tuple(np.atleast_1d(np.asarray(x, dtype=np.float64))))


def _to_lattice(coords) -> np.ndarray:
    # float * 2**64 is exact; values stay below 2**64
    return (np.asarray(coords, dtype=np.float64) * 2.0**64).astype(np.uint64)


def _from_lattice(v: np.ndarray) -> np.ndarray:
    return (v >> np.uint64(11)).astype(np.float64) * _F53


class System:
    """Base class; concrete kinds below."""

    kind: str = ""
    metric: str = "torus"

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def invertible(self) -> bool:
        return True

    def step(self, x: Point) -> Point:
        return Point(tuple(self.step_array(np.asarray([x.coords]))[0]))

    def step_array(self, X: np.ndarray) -> np.ndarray:
        """Apply T row-wise to an (M, d) coordinate array (float formula)."""
        raise NotImplementedError

    def inverse(self, x: Point) -> Point:
        return Point(tuple(self.inverse_array(np.asarray([x.coords]))[0]))

    def inverse_array(self, X: np.ndarray) -> np.ndarray:
        raise ContractViolation(f"{self.kind} is not invertible")

    def blocks(self, x0: Point, block: int = BLOCK) -> Iterator[np.ndarray]:
        """Infinite stream of (block, d) arrays holding T^n x0 for n = 1, 2, ..."""
        raise NotImplementedError

    def config(self) -> dict[str, str]:
        raise NotImplementedError


class _Rotation(System):
    alphas: tuple

    @property
    def dim(self) -> int:
        return len(self.alphas)

    def _float_alpha(self) -> np.ndarray:
        return np.array([float(a) for a in self.alphas])

    def _lattice_alpha(self) -> np.ndarray:
        return np.array([diophantine.scaled_floor(a) % _LATTICE for a in self.alphas], dtype=np.uint64)

    def step_array(self, X):
        return np.mod(np.asarray(X, dtype=np.float64) + self._float_alpha(), 1.0)

    def inverse_array(self, X):
        return np.mod(np.asarray(X, dtype=np.float64) - self._float_alpha(), 1.0)

    def step(self, x):
        x = as_point(x)
        _check_dim(self, x)
        pos = _to_lattice(x.coords) + self._lattice_alpha()
        return Point(tuple(_from_lattice(pos)))

    def inverse(self, x):
        x = as_point(x)
        _check_dim(self, x)
        pos = _to_lattice(x.coords) - self._lattice_alpha()
        return Point(tuple(_from_lattice(pos)))

    def blocks(self, x0, block=BLOCK):
        X = _to_lattice(x0.coords)
        A = self._lattice_alpha()
        n = np.arange(1, block + 1, dtype=np.uint64)
        start = np.uint64(0)
        while True:
            pos = X + (n + start)[:, None] * A
            yield _from_lattice(pos)
            start += np.uint64(block)


def _check_alpha(a):
    v = float(a)
    if not 0.0 < v < 1.0:
        raise ContractViolation(f"rotation number {v!r} must lie in (0, 1)")


@dataclass(frozen=True)
class CircleRotation(_Rotation):
    alpha: RotationValue
    kind = "rotation"

    def __post_init__(self):
        if isinstance(self.alpha, str):
            object.__setattr__(self, "alpha", diophantine.parse_rotation_value(self.alpha))
        _check_alpha(self.alpha)

    @property
    def alphas(self):
        return (self.alpha,)

    def config(self):
        return {"kind": self.kind, "alpha": diophantine.format_rotation_value(self.alpha)}


@dataclass(frozen=True)
class TorusRotation(_Rotation):
    alpha: tuple
    kind = "torus-rotation"

    def __post_init__(self):
        vals = tuple(diophantine.parse_rotation_value(a) if isinstance(a, str) else a for a in self.alpha)
        if not vals:
            raise ContractViolation("torus rotation needs at least one coordinate")
        for a in vals:
            _check_alpha(a)
        object.__setattr__(self, "alpha", vals)

    @property
    def alphas(self):
        return self.alpha

    def config(self):
        return {"kind": self.kind, "alpha": ",".join(diophantine.format_rotation_value(a) for a in self.alpha)}


def _window_length(k: int) -> int:
    L = 1
    while k**L < 2**56:
        L += 1
    return L


def _fraction_digit_blocks(x: Fraction, k: int) -> Iterator[np.ndarray]:
    num, den = x.numerator, x.denominator
    zeros = np.zeros(DIGIT_BLOCK, dtype=np.int64)
    while True:
        if num == 0:
            yield zeros
            continue
        out = np.empty(DIGIT_BLOCK, dtype=np.int64)
        for i in range(DIGIT_BLOCK):
            num *= k
            out[i], num = divmod(num, den)
        yield out


def _digits_value(digits: np.ndarray, k: int) -> float:
    W = 0
    for d in digits:
        W = W * k + int(d)
    v = W / k ** len(digits)
    return min(v, _BELOW_ONE)


@dataclass(frozen=True)
class ExpandingMap(System):
    k: int
    kind = "expanding"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ContractViolation("expanding map needs an integer k >= 2")
        object.__setattr__(self, "k", int(self.k))

    @property
    def dim(self):
        return 1

    @property
    def invertible(self):
        return False

    @property
    def window(self) -> int:
        return _window_length(self.k)

    def step_array(self, X):
        return np.mod(self.k * np.asarray(X, dtype=np.float64), 1.0)

    def step(self, x):
        x = as_point(x)
        _check_dim(self, x)
        if x.expansion is not None:
            return point_from_stream(x.expansion.shifted())
        return Point((math.fmod(self.k * x.coords[0], 1.0),))

    def _digit_blocks(self, x0: Point) -> Iterator[np.ndarray]:
        if x0.expansion is not None:
            if x0.expansion.base != self.k:
                raise ContractViolation("digit stream base differs from the map's k")
            return x0.expansion.blocks()
        return _fraction_digit_blocks(Fraction(x0.coords[0]), self.k)

    def blocks(self, x0, block=BLOCK):
        k, L = self.k, self.window
        scale = float(k**L)
        big = k**L >= 2**63
        source = self._digit_blocks(x0)
        buf = np.empty(0, dtype=np.int64)
        pos = 1  # buf[0] holds digit number `pos` (1-based digits after the point)
        n0 = 1
        while True:
            need = (n0 - pos) + block + L
            while buf.size < need:
                buf = np.concatenate((buf, next(source)))
            off = n0 - pos
            seg = buf[off : off + block + L]
            W = np.zeros(block, dtype=object if big else np.int64)
            for j in range(L):
                W = W * k + seg[j + 1 : j + 1 + block]
            # T^n x = 0.d_{n+1} d_{n+2} ...; seg[0] is digit n0
            vals = np.asarray(W / scale if not big else [float(w) / scale for w in W], dtype=np.float64)
            yield np.minimum(vals, _BELOW_ONE)[:, None]
            n0 += block
            drop = n0 - pos
            buf = buf[drop:]
            pos = n0

    def config(self):
        return {"kind": self.kind, "k": str(self.k)}


def point_from_stream(stream: DigitStream) -> Point:
    """Point whose exact value is the stream's expansion; coords hold its float image."""
    k = stream.base
    L = _window_length(k)
    first = next(stream.blocks())
    while first.size < L:
        first = np.concatenate((first, next(stream.shifted(first.size).blocks())))
    return Point((_digits_value(first[:L], k),), expansion=stream)


def _int_matrix(M) -> tuple[tuple[int, int], tuple[int, int]]:
    rows = tuple(tuple(int(v) for v in row) for row in M)
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ContractViolation("toral automorphism needs a 2x2 integer matrix")
    for row, orig in zip(rows, M):
        for v, o in zip(row, orig):
            if v != o:
                raise ContractViolation("matrix entries must be integers")
    return rows


@functools.lru_cache(maxsize=8)
def _power_table(M: tuple, block: int) -> tuple[np.ndarray, ...]:
    """Entries of M^j mod 2**64 for j = 1..block."""
    (a, b), (c, d) = M
    out = np.empty((4, block), dtype=np.uint64)
    p, q, r, s = a % _LATTICE, b % _LATTICE, c % _LATTICE, d % _LATTICE
    for j in range(block):
        out[:, j] = (p, q, r, s)
        p, q, r, s = (
            (a * p + b * r) % _LATTICE,
            (a * q + b * s) % _LATTICE,
            (c * p + d * r) % _LATTICE,
            (c * q + d * s) % _LATTICE,
        )
    return tuple(out)


@dataclass(frozen=True)
class ToralAutomorphism(System):
    matrix: tuple
    kind = "automorphism"

    def __post_init__(self):
        M = _int_matrix(self.matrix)
        (a, b), (c, d) = M
        det = a * d - b * c
        if abs(det) != 1:
            raise ContractViolation(f"determinant {det} is not +-1")
        tr = a + d
        # eigenvalues on the unit circle iff |tr| <= 2 (det 1) or tr == 0 (det -1)
        if (det == 1 and abs(tr) <= 2) or (det == -1 and tr == 0):
            raise ContractViolation(f"matrix {M} is not hyperbolic")
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self):
        return 2

    def _np(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.float64)

    def step_array(self, X):
        return np.mod(np.asarray(X, dtype=np.float64) @ self._np().T, 1.0)

    def inverse_array(self, X):
        (a, b), (c, d) = self.matrix
        det = a * d - b * c
        inv = np.array([[d, -b], [-c, a]], dtype=np.float64) * det
        return np.mod(np.asarray(X, dtype=np.float64) @ inv.T, 1.0)

    def _lattice_apply(self, M, x: Point) -> Point:
        X = [int(v) for v in _to_lattice(x.coords)]
        out = [(M[i][0] * X[0] + M[i][1] * X[1]) % _LATTICE for i in range(2)]
        return Point(tuple(_from_lattice(np.array(out, dtype=np.uint64))))

    def step(self, x):
        x = as_point(x)
        _check_dim(self, x)
        return self._lattice_apply(self.matrix, x)

    def inverse(self, x):
        x = as_point(x)
        _check_dim(self, x)
        (a, b), (c, d) = self.matrix
        det = a * d - b * c
        return self._lattice_apply(((d * det, -b * det), (-c * det, a * det)), x)

    def blocks(self, x0, block=BLOCK):
        P00, P01, P10, P11 = _power_table(self.matrix, block)
        u, v = _to_lattice(x0.coords)
        while True:
            a = P00 * u + P01 * v
            b = P10 * u + P11 * v
            yield _from_lattice(np.stack((a, b), axis=1))
            u, v = a[-1], b[-1]

    def config(self):
        (a, b), (c, d) = self.matrix
        return {"kind": self.kind, "matrix": f"{a},{b},{c},{d}"}


CAT_MAP = ((2, 1), (1, 1))


@dataclass(frozen=True)
class IntervalExchange(System):
    spec: IETSpec
    kind = "iet"
    metric = "interval"

    @property
    def dim(self):
        return 1

    def step_array(self, X):
        X = np.asarray(X, dtype=np.float64)
        return iet_apply_array(self.spec, X.ravel()).reshape(X.shape)

    def inverse_array(self, X):
        X = np.asarray(X, dtype=np.float64)
        return iet_inverse_array(self.spec, X.ravel()).reshape(X.shape)

    def step(self, x):
        x = as_point(x)
        _check_dim(self, x)
        return Point((iet_apply(self.spec, x.coords[0]),))

    def inverse(self, x):
        x = as_point(x)
        _check_dim(self, x)
        return Point((iet_inverse(self.spec, x.coords[0]),))

    def blocks(self, x0, block=BLOCK):
        spec = self.spec
        lefts, shifts = list(spec.lefts), list(spec.translations)
        x = x0.coords[0]
        while True:
            out = np.empty(block)
            for i in range(block):
                x = x + shifts[bisect.bisect_right(lefts, x) - 1]
                if x >= 1.0:
                    x = _BELOW_ONE
                elif x < 0.0:
                    x = 0.0
                out[i] = x
            yield out[:, None]

    def config(self):
        lengths = ",".join(repr(v) for v in self.spec.lengths)
        perm = ",".join(str(p) for p in self.spec.permutation)
        return {"kind": self.kind, "lengths": lengths, "perm": perm}


def _check_dim(system: System, x: Point):
    if x.d != system.dim:
        raise ContractViolation(f"point has dimension {x.d}, system {system.kind} has {system.dim}")


# --- module-level operations -------------------------------------------------


def step(system: System, x) -> Point:
    """T(x), reduced into [0, 1)."""
    x = as_point(x)
    _check_dim(system, x)
    return system.step(x)


def inverse(system: System, x) -> Point:
    x = as_point(x)
    _check_dim(system, x)
    return system.inverse(x)


def orbit_blocks(system: System, x0, n_max: int | None = None, block: int = BLOCK) -> Iterator[np.ndarray]:
    """Blocks of T^n x0 for n = 1..n_max (unbounded when n_max is None)."""
    x0 = as_point(x0)
    _check_dim(system, x0)
    remaining = n_max
    for chunk in system.blocks(x0, block):
        if remaining is not None:
            if remaining <= 0:
                return
            if chunk.shape[0] > remaining:
                chunk = chunk[:remaining]
            remaining -= chunk.shape[0]
        yield chunk


def orbit(system: System, x0, n: int) -> np.ndarray:
    """(n, d) array of T x0, ..., T^n x0."""
    parts = list(orbit_blocks(system, x0, n, block=min(BLOCK, max(n, 1))))
    if not parts:
        return np.empty((0, system.dim))
    return np.concatenate(parts)


def orbit_fold(system: System, x0, n_max: int, visitor: Callable[[int, Point], object]) -> tuple[Point, int]:
    """Feed (n, T^n x0) to ``visitor`` for n = 1..n_max; a ``False`` return stops the walk.

    Returns the last point visited (x0 when nothing was visited) and the number of steps taken.
    """
    if n_max < 0:
        raise ContractViolation("n_max must be >= 0")
    x0 = as_point(x0)
    _check_dim(system, x0)
    last, steps = x0, 0
    for chunk in orbit_blocks(system, x0, n_max, block=min(BLOCK, max(n_max, 1))):
        for row in chunk:
            steps += 1
            last = Point(tuple(row))
            if visitor(steps, last) is False:
                break
        else:
            continue
        break
    if x0.expansion is not None and steps:
        last = point_from_stream(x0.expansion.shifted(steps))
    return last, steps


def distances_to(system: System, X: np.ndarray, y: Point) -> np.ndarray:
    """Distance from each row of X to y."""
    diff = np.abs(X - np.asarray(y.coords))
    if system.metric == "interval":
        return diff[:, 0]
    diff = np.minimum(diff, 1.0 - diff)
    return diff.max(axis=1) if diff.shape[1] > 1 else diff[:, 0]


def distance_blocks(system: System, x0, y, n_max: int | None = None, block: int = BLOCK) -> Iterator[np.ndarray]:
    """Blocks of d(T^n x0, y) for n = 1..n_max."""
    y = as_point(y)
    _check_dim(system, y)
    for chunk in orbit_blocks(system, x0, n_max, block):
        yield distances_to(system, chunk, y)


def dist(system: System, a, b) -> float:
    """Sup of nearest-integer distances on tori; |a - b| on the interval."""
    a, b = as_point(a), as_point(b)
    if a.d != b.d:
        raise ContractViolation(f"dimension mismatch: {a.d} vs {b.d}")
    _check_dim(system, a)
    if system.metric == "interval":
        return abs(a.coords[0] - b.coords[0])
    out = 0.0
    for u, v in zip(a.coords, b.coords):
        t = abs(u - v)
        out = max(out, min(t, 1.0 - t))
    return out


def ball_measure(system: System, y, r: float) -> float:
    """Lebesgue measure of the closed ball B(y, r)."""
    if not r > 0:
        raise ContractViolation("radius must be positive")
    y = as_point(y)
    _check_dim(system, y)
    if system.metric == "interval":
        c = y.coords[0]
        return min(c + r, 1.0) - max(c - r, 0.0)
    return min(2.0 * r, 1.0) ** system.dim


def ball_measures(system: System, y, radii: np.ndarray) -> np.ndarray:
    """Vectorised :func:`ball_measure`; radii that underflowed to 0 give measure 0."""
    radii = np.asarray(radii, dtype=np.float64)
    if np.any(radii < 0) or np.any(np.isnan(radii)):
        raise ContractViolation("radius must be non-negative")
    if system.metric == "interval":
        c = as_point(y).coords[0]
        return np.minimum(c + radii, 1.0) - np.maximum(c - radii, 0.0)
    return np.minimum(2.0 * radii, 1.0) ** system.dim


def random_point(system: System, rng: np.random.Generator) -> Point:
    """A Lebesgue-random point; expanding maps get an infinite digit stream."""
    if isinstance(system, ExpandingMap):
        seed = int(rng.integers(0, 2**63))
        return point_from_stream(DigitStream(seed, system.k))
    return Point(tuple(rng.random(system.dim)))


# --- config fragments ----------------------------------------------------------

_KINDS = ("rotation", "torus-rotation", "expanding", "automorphism", "iet")


def _split_csv(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def from_config(fields: dict[str, str]) -> System:
    """Build a system from a key-value mapping with a ``kind`` entry."""
    kind = fields.get("kind", "").strip()
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {', '.join(_KINDS)} (got {kind!r})")
    if kind == "rotation":
        return CircleRotation(diophantine.parse_rotation_value(fields["alpha"]))
    if kind == "torus-rotation":
        return TorusRotation(tuple(diophantine.parse_rotation_value(t) for t in _split_csv(fields["alpha"])))
    if kind == "expanding":
        return ExpandingMap(int(fields["k"]))
    if kind == "automorphism":
        vals = [int(t) for t in _split_csv(fields.get("matrix", "2,1,1,1"))]
        if len(vals) != 4:
            raise ValueError("matrix needs four comma-separated integers")
        return ToralAutomorphism(((vals[0], vals[1]), (vals[2], vals[3])))
    lengths = [float(Fraction(t)) for t in _split_csv(fields["lengths"])]
    perm = [int(t) for t in _split_csv(fields["perm"])]
    return IntervalExchange(IETSpec(tuple(lengths), tuple(perm)))


_TOKEN = re.compile(r"(\w+)=(\S+)")


def parse_fragment(text: str) -> dict[str, str]:
    """``kind key=value ...`` one-liner to a mapping.

    ``alpha=liouville growth=G depth=K`` keeps the Liouville parameters with alpha.
    """
    head, _, rest = text.strip().partition(" ")
    fields = {"kind": head}
    tokens = _TOKEN.findall(rest)
    i = 0
    while i < len(tokens):
        key, value = tokens[i]
        if key == "alpha" and value == "liouville":
            extra = {k: v for k, v in tokens[i + 1 : i + 3]}
            value = f"liouville growth={extra.get('growth')} depth={extra.get('depth')}"
            i += 2
        fields[key] = value
        i += 1
    return fields


def parse_system(text: str) -> System:
    return from_config(parse_fragment(text))


def to_config(system: System) -> dict[str, str]:
    return system.config()
