"""Continued fractions, nearest-integer norms and constant-type diagnostics.

Rotation numbers come in three flavours:

* ``Fraction`` -- exact rationals (including Liouville-like truncations),
* ``QuadraticSurd`` -- the hard-wired presets ``golden`` and ``silver``,
* ``float`` -- anything else; only float arithmetic is then available.

All convergent computations use Python integers.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class QuadraticSurd:
    """The number ``(P + sqrt(D)) / R`` with a purely periodic quotient stream."""

    name: str
    P: int
    D: int
    R: int
    a0: int
    period: tuple[int, ...]

    def __float__(self) -> float:
        return (self.P + math.sqrt(self.D)) / self.R

    def quotients(self) -> Iterator[int]:
        while True:
            yield from self.period

    def scaled_floor(self, bits: int) -> int:
        """floor(value * 2**bits), exactly."""
        # (P*2^b + sqrt(D*4^b)) / R, floor taken on the exact square root
        s = math.isqrt(self.D << (2 * bits))
        num = (self.P << bits) + s
        # s is floor(sqrt), so num <= exact numerator < num + 1
        return num // self.R

    def __str__(self) -> str:
        return self.name


GOLDEN = QuadraticSurd("golden", -1, 5, 2, 0, (1,))
SILVER = QuadraticSurd("silver", -1, 2, 1, 0, (2,))
PRESETS = {"golden": GOLDEN, "silver": SILVER}

RotationValue = Union[float, Fraction, QuadraticSurd]


@dataclass(frozen=True)
class ContinuedFraction:
    a0: int
    quotients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]

    @property
    def denominators(self) -> tuple[int, ...]:
        return tuple(q for _, q in self.convergents)

    def value(self) -> Fraction:
        """Value of the truncated expansion (the last convergent)."""
        if not self.convergents:
            return Fraction(self.a0)
        p, q = self.convergents[-1]
        return Fraction(p, q)


@dataclass(frozen=True)
class ConstantTypeReport:
    alpha: tuple
    Q_max: int
    c_min: float
    argmin_Q: int


def convergents_from_quotients(a0: int, quotients: Sequence[int]) -> tuple[tuple[int, int], ...]:
    """Convergents p_i/q_i for i = 1..len(quotients)."""
    p_prev, q_prev = 1, 0
    p, q = a0, 1
    out = []
    for a in quotients:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        out.append((p, q))
    return tuple(out)


def _as_fraction(alpha) -> Fraction:
    if isinstance(alpha, tuple) and len(alpha) == 2:
        return Fraction(int(alpha[0]), int(alpha[1]))
    return Fraction(alpha)


def cf_expand(alpha, depth: int) -> ContinuedFraction:
    """Continued fraction of an exact rational or a preset surd, to ``depth`` quotients.

    Rationals stop early when Euclid's algorithm terminates.
    """
    if depth < 1:
        raise ContractViolation("depth must be >= 1")
    if isinstance(alpha, str):
        alpha = PRESETS[alpha]
    if isinstance(alpha, QuadraticSurd):
        stream = alpha.quotients()
        quotients = tuple(next(stream) for _ in range(depth))
        return ContinuedFraction(alpha.a0, quotients, convergents_from_quotients(alpha.a0, quotients))
    if isinstance(alpha, float):
        raise ContractViolation("cf_expand needs an exact rational or a preset, got a float")
    x = _as_fraction(alpha)
    if x.denominator == 1:
        raise ContractViolation(f"degenerate rotation number {x}: integers have no partial quotients")
    num, den = x.numerator, x.denominator
    a0, num = divmod(num, den)
    quotients = []
    while num and len(quotients) < depth:
        num, den = den, num
        a, num = divmod(num, den)
        quotients.append(a)
    quotients = tuple(quotients)
    return ContinuedFraction(a0, quotients, convergents_from_quotients(a0, quotients))


def _components(alpha) -> tuple:
    if isinstance(alpha, (list, tuple, np.ndarray)) and not (
        isinstance(alpha, tuple) and len(alpha) == 2 and all(isinstance(v, int) for v in alpha)
    ):
        return tuple(alpha)
    return (alpha,)


def _norm_fraction(x: Fraction) -> Fraction:
    r = x - math.floor(x)
    return min(r, 1 - r)


def _norm_surd(s: QuadraticSurd, Q: int) -> float:
    """||Q s|| with an exact integer numerator (no cancellation)."""
    Q = abs(Q)
    QQD = Q * Q * s.D
    root = math.isqrt(QQD)
    t = Q * s.P + root
    best = math.inf
    base = t // s.R
    for p in range(base - 1, base + 3):
        m = p * s.R - Q * s.P  # compare Q*sqrt(D) with m
        if m >= 0:
            gap = abs(QQD - m * m) / (math.sqrt(QQD) + m)
        else:
            gap = math.sqrt(QQD) - m
        best = min(best, gap / s.R)
    return best


def nearest_int_norm(alpha, Q: int) -> float:
    """sup over coordinates of the distance from ``Q * alpha_i`` to the nearest integer."""
    if Q == 0:
        raise ContractViolation("Q must be a nonzero integer")
    out = 0.0
    for a in _components(alpha):
        if isinstance(a, str):
            a = PRESETS[a]
        if isinstance(a, QuadraticSurd):
            v = _norm_surd(a, Q)
        elif isinstance(a, (Fraction, int)):
            v = float(_norm_fraction(Q * Fraction(a)))
        else:
            t = Q * float(a)
            v = abs(t - round(t))
        out = max(out, v)
    return out


def _scan_fraction(x: Fraction, Qs: np.ndarray) -> np.ndarray:
    p, q = x.numerator % x.denominator, x.denominator
    if Qs[-1] * p < 2**62:
        r = (Qs * p) % q
        return np.minimum(r, q - r) / q
    return np.array([float(_norm_fraction(int(Q) * x)) for Q in Qs])


def _isqrt_array(v: np.ndarray) -> np.ndarray:
    s = np.floor(np.sqrt(v.astype(np.float64))).astype(np.int64)
    s = np.where(s * s > v, s - 1, s)
    s = np.where((s + 1) * (s + 1) <= v, s + 1, s)
    return s


def _scan_surd(sd: QuadraticSurd, Qs: np.ndarray) -> np.ndarray:
    if int(Qs[-1]) ** 2 * sd.D >= 2**61:
        return np.array([_norm_surd(sd, int(Q)) for Q in Qs])
    QQD = Qs * Qs * sd.D
    root = _isqrt_array(QQD)
    exact_root = np.sqrt(QQD.astype(np.float64))
    base = (Qs * sd.P + root) // sd.R
    best = np.full(Qs.shape, np.inf)
    for shift in (-1, 0, 1, 2):
        m = (base + shift) * sd.R - Qs * sd.P
        with np.errstate(divide="ignore", invalid="ignore"):
            gap = np.where(m >= 0, np.abs(QQD - m * m) / (exact_root + m), exact_root - m)
        best = np.minimum(best, gap / sd.R)
    return best


def constant_type_scan(alpha, Q_max: int) -> ConstantTypeReport:
    """min over 1 <= Q <= Q_max of ||Q alpha|| * Q**(1/d).

    Negative Q are skipped: ||-Q alpha|| = ||Q alpha||.
    """
    if Q_max < 1:
        raise ContractViolation("Q_max must be >= 1")
    comps = tuple(PRESETS[a] if isinstance(a, str) else a for a in _components(alpha))
    d = len(comps)
    Qs = np.arange(1, Q_max + 1, dtype=np.int64)
    norms = np.zeros(Q_max)
    for a in comps:
        if isinstance(a, QuadraticSurd):
            v = _scan_surd(a, Qs)
        elif isinstance(a, (Fraction, int)):
            v = _scan_fraction(Fraction(a), Qs)
        else:
            t = Qs * float(a)
            v = np.abs(t - np.rint(t))
        norms = np.maximum(norms, v)
    c = norms * Qs ** (1.0 / d) if d > 1 else norms * Qs
    i = int(np.argmin(c))
    return ConstantTypeReport(alpha=comps, Q_max=Q_max, c_min=float(c[i]), argmin_Q=i + 1)


def liouville_like(growth: int, depth: int) -> Fraction:
    """[0; growth, growth**2, ..., growth**depth] as an exact fraction."""
    if growth < 2 or depth < 1:
        raise ContractViolation("growth must be >= 2 and depth >= 1")
    quotients = [growth**k for k in range(1, depth + 1)]
    p, q = convergents_from_quotients(0, quotients)[-1]
    value = Fraction(p, q)
    if depth > 1:
        p_prev, q_prev = convergents_from_quotients(0, quotients[:-1])[-1]
        if float(value) == p_prev / q_prev:
            warnings.warn(
                f"liouville depth {depth}: float image no longer resolves the last quotient; "
                "only the exact value is meaningful",
                stacklevel=2,
            )
    return value


_FRACTION_RE = re.compile(r"^\s*(-?\d+)\s*/\s*(\d+)\s*$")
_LIOUVILLE_RE = re.compile(r"^\s*liouville\s+growth\s*=\s*(\d+)\s+depth\s*=\s*(\d+)\s*$")


def parse_rotation_value(text: str) -> RotationValue:
    """Decimal string, ``p/q``, preset name, or ``liouville growth=G depth=K``."""
    t = text.strip()
    if t in PRESETS:
        return PRESETS[t]
    m = _LIOUVILLE_RE.match(t)
    if m:
        return liouville_like(int(m.group(1)), int(m.group(2)))
    m = _FRACTION_RE.match(t)
    if m:
        return Fraction(int(m.group(1)), int(m.group(2)))
    try:
        return float(t)
    except ValueError:
        raise ValueError(f"unrecognised rotation value {text!r}") from None


def format_rotation_value(a: RotationValue) -> str:
    if isinstance(a, QuadraticSurd):
        return a.name
    if isinstance(a, Fraction):
        return f"{a.numerator}/{a.denominator}"
    return repr(float(a))


def scaled_floor(a: RotationValue, bits: int = 64) -> int:
    """floor(a * 2**bits) computed without float rounding where possible."""
    if isinstance(a, QuadraticSurd):
        return a.scaled_floor(bits)
    x = Fraction(a)
    return (x.numerator << bits) // x.denominator
