"""Outward-rounded real interval arithmetic.

Bounds are rounded in the safe direction only when the floating-point
result is inexact: error-free transformations (TwoSum, Dekker's TwoProduct)
give the sign of the rounding error, and the bound moves one ulp if that
error points outward.  Outside the range where the transformations are
exact (near overflow or underflow) every bound is widened by one ulp.
"""

from __future__ import annotations

import math

_INF = math.inf


def _dn(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


_SPLITTER = 134217729.0  # 2**27 + 1
_SPLIT_MAX = 2.0**996
_TINY = 2.0**-960


def _sum_err(a: float, b: float, s: float) -> float:
    """Exact ``a + b - s`` for ``s = fl(a + b)`` (TwoSum)."""
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _split(a: float) -> tuple[float, float]:
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def _prod_err(a: float, b: float, p: float) -> float:
    """Exact ``a * b - p`` for ``p = fl(a * b)`` (Dekker's TwoProduct)."""
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def add_bounds(a: float, b: float) -> tuple[float, float]:
    """Floats ``lo <= a + b <= hi`` with ``lo, hi`` adjacent to or equal to the sum."""
    s = a + b
    if not math.isfinite(s):
        return _dn(s), _up(s)
    e = _sum_err(a, b, s)
    if e > 0:
        return s, _up(s)
    if e < 0:
        return _dn(s), s
    return s, s


def mul_bounds(a: float, b: float) -> tuple[float, float]:
    """Floats ``lo <= a * b <= hi``, tight when the product is exact."""
    p = a * b
    if p == 0.0 and (a == 0.0 or b == 0.0):
        return 0.0, 0.0
    if (
        not math.isfinite(p)
        or abs(a) > _SPLIT_MAX
        or abs(b) > _SPLIT_MAX
        or abs(p) > _SPLIT_MAX
        or abs(p) < _TINY
    ):
        return _dn(p), _up(p)
    e = _prod_err(a, b, p)
    if e > 0:
        return p, _up(p)
    if e < 0:
        return _dn(p), p
    return p, p


class Interval:
    """Closed interval ``[lo, hi]`` with outward-rounded operations."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float | None = None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def coerce(cls, x) -> "Interval":
        return x if isinstance(x, Interval) else cls(x)

    @classmethod
    def around(cls, mid: float, rad: float) -> "Interval":
        return cls(_dn(mid - rad), _up(mid + rad))

    @property
    def mid(self) -> float:
        if math.isinf(self.lo) or math.isinf(self.hi):
            return 0.0 if self.lo == -self.hi else (self.lo + self.hi) / 2
        return self.lo + (self.hi - self.lo) / 2

    @property
    def rad(self) -> float:
        """Upper bound on the radius about :attr:`mid`."""
        m = self.mid
        return _up(max(m - self.lo, self.hi - m))

    @property
    def width(self) -> float:
        return _up(self.hi - self.lo) if self.hi > self.lo else 0.0

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def interior_contains(self, other: "Interval") -> bool:
        return self.lo < other.lo and other.hi < self.hi

    def hull(self, other) -> "Interval":
        o = Interval.coerce(other)
        return Interval(min(self.lo, o.lo), max(self.hi, o.hi))

    def inflate(self, factor: float = 1.1, eta: float = 1e-300) -> "Interval":
        return Interval.around(self.mid, factor * self.rad + eta)

    def __add__(self, other) -> "Interval":
        o = Interval.coerce(other)
        return Interval(add_bounds(self.lo, o.lo)[0], add_bounds(self.hi, o.hi)[1])

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other) -> "Interval":
        o = Interval.coerce(other)
        return Interval(add_bounds(self.lo, -o.hi)[0], add_bounds(self.hi, -o.lo)[1])

    def __rsub__(self, other) -> "Interval":
        return Interval.coerce(other) - self

    def __mul__(self, other) -> "Interval":
        o = Interval.coerce(other)
        lows, highs = [], []
        for a in (self.lo, self.hi):
            for b in (o.lo, o.hi):
                if a == 0.0 or b == 0.0:
                    # 0 * inf is taken as 0: the factor 0 is an exact endpoint
                    lows.append(0.0)
                    highs.append(0.0)
                    continue
                lo, hi = mul_bounds(a, b)
                lows.append(lo)
                highs.append(hi)
        return Interval(min(lows), max(highs))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Interval":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only natural powers are supported")
        if n == 0:
            return Interval(1.0)
        if n == 1:
            return self
        if n % 2 == 1:
            return Interval(_pow_bounds(self.lo, n)[0], _pow_bounds(self.hi, n)[1])
        a, b = abs(self.lo), abs(self.hi)
        if self.lo <= 0.0 <= self.hi:
            return Interval(0.0, _pow_bounds(max(a, b), n)[1])
        lo, hi = min(a, b), max(a, b)
        return Interval(_pow_bounds(lo, n)[0], _pow_bounds(hi, n)[1])

    def __eq__(self, other) -> bool:
        return isinstance(other, Interval) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"


def _pow_bounds(x: float, n: int) -> tuple[float, float]:
    """Lower and upper bounds of ``x**n`` by repeated rounded products."""
    a = abs(x)
    lo = hi = a
    for _ in range(n - 1):
        lo = mul_bounds(lo, a)[0]
        hi = mul_bounds(hi, a)[1]
    lo = max(lo, 0.0)
    if x < 0 and n % 2 == 1:
        return -hi, -lo
    return lo, hi
