"""Outward-rounded interval arithmetic on binary64 endpoints.

An :class:`Interval` holds ``lo`` and ``hi`` which are either scalars or
numpy arrays of equal shape.  Array-valued intervals evaluate a whole batch
of boxes in one call; every operation below works for both.

Rounding is done without touching the FPU mode: each basic operation is
computed in round-to-nearest and the endpoints are then pushed one ulp
outward with ``nextafter``.  IEEE 754 guarantees +, -, *, / and sqrt are
correctly rounded, so one ulp is enough.  Transcendental functions come from
the platform math library, which is not correctly rounded; their results are
widened by ``TRANSCENDENTAL_ULPS`` relative ulps before the final step.

Domain handling differs between the two shapes.  Scalar operations raise
:class:`DomainError` or :class:`IntervalZeroDivisionError`.  Batched
operations cannot raise for a single lane, so an empty lane becomes NaN and a
division by an interval containing zero becomes ``[-inf, inf]``.  NaN lanes
never satisfy a comparison, so they can never be taken as proof of anything.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

import numpy as np

__all__ = [
    "Interval",
    "DomainError",
    "IntervalZeroDivisionError",
    "PI",
    "TWO_PI",
    "arith",
    "sure_le",
    "sure_lt",
    "contains_zero",
    "hull",
    "imin",
    "imax",
    "where",
]

TRANSCENDENTAL_ULPS = 8
_EPS = 2.0**-52
_INF = np.inf

Number = Union[int, float, np.floating]


class DomainError(ValueError):
    """Operand does not meet the domain of the operation after clamping."""


class IntervalZeroDivisionError(ZeroDivisionError):
    """Divisor interval contains zero."""


def _down(x):
    return np.nextafter(x, -_INF)


def _up(x):
    return np.nextafter(x, _INF)


# A floating-point sum that rounds to zero is exactly zero, so sums keep it.
def _down_sum(x):
    return np.where(x == 0, 0.0, np.nextafter(x, -_INF))


def _up_sum(x):
    return np.where(x == 0, 0.0, np.nextafter(x, _INF))


def _round_down(f, exact_value, exact=None) -> float:
    """Largest float <= the exact result whose nearest rounding is ``f``."""
    f = float(f)
    if math.isinf(f) or math.isnan(f):
        return f
    if exact is None:
        exact = Fraction(f) == exact_value()
    return f if exact else math.nextafter(f, -math.inf)


def _round_up(f, exact_value, exact=None) -> float:
    f = float(f)
    if math.isinf(f) or math.isnan(f):
        return f
    if exact is None:
        exact = Fraction(f) == exact_value()
    return f if exact else math.nextafter(f, math.inf)


def _is_sqrt_exact(root: float, x: float) -> bool:
    return math.isinf(root) or Fraction(root) ** 2 == Fraction(x)


def _scalar_mul(a: float, b: float, c: float, d: float) -> "Interval":
    best_lo = best_hi = None
    for x, y in ((a, c), (a, d), (b, c), (b, d)):
        if x == 0.0 or y == 0.0:
            lo = hi = 0.0  # also covers 0 * inf
        else:
            p = x * y
            if math.isinf(x) or math.isinf(y):
                lo = hi = p
            else:
                exact = Fraction(p) == Fraction(x) * Fraction(y)
                lo = _round_down(p, None, exact)
                hi = _round_up(p, None, exact)
        best_lo = lo if best_lo is None else min(best_lo, lo)
        best_hi = hi if best_hi is None else max(best_hi, hi)
    return Interval._raw(best_lo, best_hi)


def _is_batch(x) -> bool:
    return np.ndim(x) > 0


def _exact_float(x: Number) -> float:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        f = float(x)
        if int(f) != int(x):
            raise ValueError(f"integer {x} is not exactly representable")
        return f
    return float(x)


class Interval:
    """Closed interval ``[lo, hi]`` with representable endpoints."""

    __slots__ = ("lo", "hi")
    __array_priority__ = 1000  # keep numpy scalars from hijacking a + b

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        if _is_batch(lo) or _is_batch(hi):
            lo = np.asarray(lo, dtype=np.float64)
            hi = np.asarray(hi, dtype=np.float64)
            if lo.shape != hi.shape:
                lo, hi = np.broadcast_arrays(lo, hi)
        else:
            lo = _exact_float(lo)
            hi = _exact_float(hi)
            if not lo <= hi:
                raise ValueError(f"invalid interval [{lo!r}, {hi!r}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def _raw(cls, lo, hi) -> "Interval":
        # Skips validation; used by the arithmetic kernels.
        obj = object.__new__(cls)
        obj.lo = lo
        obj.hi = hi
        return obj

    # -- construction -----------------------------------------------------

    @classmethod
    def from_decimal(cls, text: str) -> "Interval":
        """Tightest interval containing the decimal number ``text``."""
        return cls.from_fraction(Fraction(text))

    @classmethod
    def from_fraction(cls, q: Fraction) -> "Interval":
        f = float(q)
        lo = f if Fraction(f) <= q else math.nextafter(f, -math.inf)
        hi = f if Fraction(f) >= q else math.nextafter(f, math.inf)
        return cls(lo, hi)

    @staticmethod
    def coerce(x) -> "Interval":
        if isinstance(x, Interval):
            return x
        if isinstance(x, str):
            return Interval.from_decimal(x)
        if isinstance(x, Fraction):
            return Interval.from_fraction(x)
        return Interval(x)

    @classmethod
    def entire(cls, like=None) -> "Interval":
        if like is not None and _is_batch(like):
            shape = np.shape(like)
            return cls._raw(np.full(shape, -_INF), np.full(shape, _INF))
        return cls._raw(-math.inf, math.inf)

    # -- inspection -------------------------------------------------------

    @property
    def is_batch(self) -> bool:
        return _is_batch(self.lo)

    @property
    def width(self):
        """Upper bound on ``hi - lo``."""
        return _up(self.hi - self.lo)

    @property
    def mid(self):
        return self.lo + (self.hi - self.lo) / 2

    @property
    def mag(self):
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    @property
    def mig(self):
        m = np.minimum(np.abs(self.lo), np.abs(self.hi))
        return np.where((self.lo <= 0) & (self.hi >= 0), 0.0, m)

    def contains(self, x):
        if isinstance(x, Interval):
            return (self.lo <= x.lo) & (x.hi <= self.hi)
        if isinstance(x, Fraction):
            return (Fraction(float(self.lo)) <= x) and (x <= Fraction(float(self.hi)))
        return (self.lo <= x) & (x <= self.hi)

    def subset(self, other: "Interval"):
        return (other.lo <= self.lo) & (self.hi <= other.hi)

    def intersect(self, other: "Interval") -> "Interval":
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if not self.is_batch and not _is_batch(lo) and lo > hi:
            raise DomainError("empty intersection")
        return Interval._raw(lo, hi)

    def __getitem__(self, idx) -> "Interval":
        return Interval._raw(self.lo[idx], self.hi[idx])

    def __len__(self) -> int:
        return len(self.lo)

    def __iter__(self):
        raise TypeError("Interval is not iterable")

    def __repr__(self) -> str:
        if self.is_batch:
            return f"Interval(<batch of {np.size(self.lo)}>)"
        return f"Interval({float(self.lo)!r}, {float(self.hi)!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return bool(np.all(self.lo == other.lo) and np.all(self.hi == other.hi))

    def __hash__(self):
        return hash((float(self.lo), float(self.hi)))

    def as_pair(self) -> tuple[float, float]:
        return float(self.lo), float(self.hi)

    # -- arithmetic -------------------------------------------------------

    def __neg__(self) -> "Interval":
        return Interval._raw(-self.hi, -self.lo)

    def __pos__(self) -> "Interval":
        return self

    def __add__(self, other) -> "Interval":
        if getattr(other, "_defer_to", False):
            return NotImplemented
        o = Interval.coerce(other)
        if not (self.is_batch or o.is_batch):
            return Interval._raw(
                _round_down(self.lo + o.lo, lambda: Fraction(self.lo) + Fraction(o.lo)),
                _round_up(self.hi + o.hi, lambda: Fraction(self.hi) + Fraction(o.hi)),
            )
        return Interval._raw(_down_sum(self.lo + o.lo), _up_sum(self.hi + o.hi))

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        if getattr(other, "_defer_to", False):
            return NotImplemented
        o = Interval.coerce(other)
        if not (self.is_batch or o.is_batch):
            return Interval._raw(
                _round_down(self.lo - o.hi, lambda: Fraction(self.lo) - Fraction(o.hi)),
                _round_up(self.hi - o.lo, lambda: Fraction(self.hi) - Fraction(o.lo)),
            )
        return Interval._raw(_down_sum(self.lo - o.hi), _up_sum(self.hi - o.lo))

    def __rsub__(self, other) -> "Interval":
        if getattr(other, "_defer_to", False):
            return NotImplemented
        return Interval.coerce(other) - self

    def __mul__(self, other) -> "Interval":
        if getattr(other, "_defer_to", False):
            return NotImplemented
        o = Interval.coerce(other)
        a, b, c, d = self.lo, self.hi, o.lo, o.hi
        with np.errstate(invalid="ignore"):
            p1, p2, p3, p4 = a * c, a * d, b * c, b * d
        if not (_is_batch(p1) or _is_batch(p4)):
            return _scalar_mul(float(a), float(b), float(c), float(d))
        # fmin/fmax skip a 0 * inf lane; an all-NaN lane stays NaN (undecided)
        lo = np.fmin(np.fmin(p1, p2), np.fmin(p3, p4))
        hi = np.fmax(np.fmax(p1, p2), np.fmax(p3, p4))
        # a thin zero factor makes the product exactly zero
        zero = ((a == 0) & (b == 0)) | ((c == 0) & (d == 0))
        return Interval._raw(np.where(zero, 0.0, _down(lo)), np.where(zero, 0.0, _up(hi)))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        if getattr(other, "_defer_to", False):
            return NotImplemented
        o = Interval.coerce(other)
        zero_in = (o.lo <= 0) & (o.hi >= 0)
        if not _is_batch(zero_in) and not self.is_batch:
            if zero_in:
                raise IntervalZeroDivisionError(f"division by {o!r}")
            return self * o._reciprocal()
        lo_safe = np.where(zero_in, 1.0, o.lo)
        hi_safe = np.where(zero_in, 1.0, o.hi)
        out = self * Interval._raw(lo_safe, hi_safe)._reciprocal()
        lo = np.where(zero_in, -_INF, out.lo)
        hi = np.where(zero_in, _INF, out.hi)
        return Interval._raw(lo, hi)

    def __rtruediv__(self, other) -> "Interval":
        if getattr(other, "_defer_to", False):
            return NotImplemented
        return Interval.coerce(other) / self

    def _reciprocal(self) -> "Interval":
        # caller guarantees 0 not in self
        if not self.is_batch:
            return Interval._raw(
                _round_down(1.0 / self.hi, lambda: 1 / Fraction(self.hi)),
                _round_up(1.0 / self.lo, lambda: 1 / Fraction(self.lo)),
            )
        return Interval._raw(_down(1.0 / self.hi), _up(1.0 / self.lo))

    def square(self) -> "Interval":
        a, b = self.lo, self.hi
        lo2, hi2 = a * a, b * b
        straddle = (a <= 0) & (b >= 0)
        lo = np.where(straddle, 0.0, np.minimum(lo2, hi2))
        hi = np.maximum(lo2, hi2)
        lo = np.where(lo == 0.0, 0.0, _down(lo))
        if not self.is_batch:
            lo = float(lo)
        return Interval._raw(lo, _up(hi))

    def __abs__(self) -> "Interval":
        a, b = self.lo, self.hi
        straddle = (a <= 0) & (b >= 0)
        lo = np.where(straddle, 0.0, np.minimum(np.abs(a), np.abs(b)))
        hi = np.maximum(np.abs(a), np.abs(b))
        if not self.is_batch:
            lo, hi = float(lo), float(hi)
        return Interval._raw(lo, hi)

    def _clamped(self, lo_dom: float, hi_dom: float, name: str) -> "Interval":
        lo = np.maximum(self.lo, lo_dom)
        hi = np.minimum(self.hi, hi_dom)
        empty = lo > hi
        if self.is_batch:
            lo = np.where(empty, np.nan, lo)
            hi = np.where(empty, np.nan, hi)
        elif empty:
            raise DomainError(f"{name} of {self!r} is empty")
        return Interval._raw(lo, hi)

    def sqrt(self) -> "Interval":
        c = self._clamped(0.0, _INF, "sqrt")
        if not self.is_batch:
            lo, hi = math.sqrt(c.lo), math.sqrt(c.hi)
            lo = _round_down(lo, lambda: None, exact=_is_sqrt_exact(lo, c.lo))
            hi = _round_up(hi, lambda: None, exact=_is_sqrt_exact(hi, c.hi))
            return Interval._raw(lo, hi)
        lo = np.sqrt(c.lo)
        lo = np.where(lo > 0, _down(lo), lo)
        if not self.is_batch:
            lo = float(lo)
        return Interval._raw(lo, _up(np.sqrt(c.hi)))

    def acos(self) -> "Interval":
        c = self._clamped(-1.0, 1.0, "acos")
        lo, hi = _widen(np.arccos(c.hi), np.arccos(c.lo))
        return Interval._raw(np.maximum(lo, 0.0), np.minimum(hi, PI.hi))

    def asin(self) -> "Interval":
        c = self._clamped(-1.0, 1.0, "asin")
        lo, hi = _widen(np.arcsin(c.lo), np.arcsin(c.hi))
        half_pi = (PI * 0.5).hi
        return Interval._raw(np.maximum(lo, -half_pi), np.minimum(hi, half_pi))

    def sin(self) -> "Interval":
        a, b = self.lo, self.hi
        s_a, s_b = np.sin(a), np.sin(b)
        lo, hi = _widen(np.minimum(s_a, s_b), np.maximum(s_a, s_b))
        two_pi = TWO_PI.lo
        half_pi = PI.lo / 2
        # smallest k with pi/2 + 2k pi >= a (resp. -pi/2 + 2k pi), minus slack
        k_max = np.ceil((a - half_pi) / two_pi - 1e-9)
        k_min = np.ceil((a + half_pi) / two_pi - 1e-9)
        peak = Interval._raw(k_max, k_max) * TWO_PI + PI * 0.5
        trough = Interval._raw(k_min, k_min) * TWO_PI - PI * 0.5
        full = (b - a) >= two_pi
        hi = np.where(full | (peak.lo <= b), 1.0, np.minimum(hi, 1.0))
        lo = np.where(full | (trough.lo <= b), -1.0, np.maximum(lo, -1.0))
        if not self.is_batch:
            lo, hi = float(lo), float(hi)
        return Interval._raw(lo, hi)

    def min(self, other) -> "Interval":
        o = Interval.coerce(other)
        return Interval._raw(np.minimum(self.lo, o.lo), np.minimum(self.hi, o.hi))

    def max(self, other) -> "Interval":
        o = Interval.coerce(other)
        return Interval._raw(np.maximum(self.lo, o.lo), np.maximum(self.hi, o.hi))

    def hull(self, other) -> "Interval":
        o = Interval.coerce(other)
        return Interval._raw(np.minimum(self.lo, o.lo), np.maximum(self.hi, o.hi))

    # -- comparisons (certified) -------------------------------------------

    def sure_le(self, other):
        return sure_le(self, other)

    def sure_lt(self, other):
        return sure_lt(self, other)


def _widen(lo, hi):
    k = TRANSCENDENTAL_ULPS * _EPS
    lo = _down(lo - np.abs(lo) * k)
    hi = _up(hi + np.abs(hi) * k)
    return lo, hi


PI = Interval(math.pi, math.nextafter(math.pi, math.inf))
TWO_PI = Interval(2 * math.pi, 2 * math.nextafter(math.pi, math.inf))


def sure_le(a, b):
    """True iff every x in a and y in b satisfy x <= y."""
    a, b = Interval.coerce(a), Interval.coerce(b)
    return a.hi <= b.lo


def sure_lt(a, b):
    a, b = Interval.coerce(a), Interval.coerce(b)
    return a.hi < b.lo


def contains_zero(a):
    a = Interval.coerce(a)
    return (a.lo <= 0) & (0 <= a.hi)


def hull(a, b) -> Interval:
    return Interval.coerce(a).hull(b)


def imin(a, b) -> Interval:
    return Interval.coerce(a).min(b)


def imax(a, b) -> Interval:
    return Interval.coerce(a).max(b)


def where(cond, a, b) -> Interval:
    """Lane-wise select between two intervals."""
    a, b = Interval.coerce(a), Interval.coerce(b)
    return Interval._raw(np.where(cond, a.lo, b.lo), np.where(cond, a.hi, b.hi))


_UNARY = {
    "neg": Interval.__neg__,
    "sqrt": Interval.sqrt,
    "acos": Interval.acos,
    "asin": Interval.asin,
    "sin": Interval.sin,
    "abs": Interval.__abs__,
    "square": Interval.square,
}
_BINARY = {
    "add": Interval.__add__,
    "sub": Interval.__sub__,
    "mul": Interval.__mul__,
    "div": Interval.__truediv__,
    "min": Interval.min,
    "max": Interval.max,
}


def arith(op: str, a, b=None) -> Interval:
    """Apply the named operation; ``b`` is required for binary ops."""
    a = Interval.coerce(a)
    if op in _UNARY:
        if b is not None:
            raise TypeError(f"{op} takes one operand")
        return _UNARY[op](a)
    if op in _BINARY:
        if b is None:
            raise TypeError(f"{op} takes two operands")
        return _BINARY[op](a, Interval.coerce(b))
    raise ValueError(f"unknown operation {op!r}")
