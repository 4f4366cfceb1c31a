"""Closed intervals over the extended reals.

All interval operations here are exact (no outward rounding); callers that
need conservative enclosures apply their own slack. The empty interval is a
distinguished value with ``lo > hi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

INF = math.inf


def _mul_corner(a: float, b: float) -> float:
    # interval convention: 0 * inf = 0
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float = -INF
    hi: float = INF

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    def width(self) -> float:
        if self.empty:
            return 0.0
        return self.hi - self.lo

    def mid(self) -> float:
        if self.lo == -INF and self.hi == INF:
            return 0.0
        if self.lo == -INF:
            return self.hi
        if self.hi == INF:
            return self.lo
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def is_finite(self) -> bool:
        return not self.empty and math.isfinite(self.lo) and math.isfinite(self.hi)

    def __repr__(self) -> str:  # pragma: no cover
        if self.empty:
            return "Interval.EMPTY"
        return f"[{self.lo:g}, {self.hi:g}]"


EMPTY = Interval(INF, -INF)
FULL = Interval(-INF, INF)


def make(lo: float, hi: float) -> Interval:
    if lo > hi:
        return EMPTY
    return Interval(lo, hi)


def point(x: float) -> Interval:
    return Interval(x, x)


def intersect(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return EMPTY
    return make(max(a.lo, b.lo), min(a.hi, b.hi))


def hull(a: Interval, b: Interval) -> Interval:
    if a.empty:
        return b
    if b.empty:
        return a
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


def add(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return EMPTY
    return Interval(a.lo + b.lo, a.hi + b.hi)


def sub(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return EMPTY
    return Interval(a.lo - b.hi, a.hi - b.lo)


def neg(a: Interval) -> Interval:
    if a.empty:
        return EMPTY
    return Interval(-a.hi, -a.lo)


def scale(a: Interval, c: float) -> Interval:
    if a.empty:
        return EMPTY
    if c == 0.0:
        return Interval(0.0, 0.0)
    if c > 0.0:
        return Interval(_mul_corner(c, a.lo), _mul_corner(c, a.hi))
    return Interval(_mul_corner(c, a.hi), _mul_corner(c, a.lo))


def shift(a: Interval, c: float) -> Interval:
    if a.empty:
        return EMPTY
    return Interval(a.lo + c, a.hi + c)


def mul(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return EMPTY
    corners = (
        _mul_corner(a.lo, b.lo),
        _mul_corner(a.lo, b.hi),
        _mul_corner(a.hi, b.lo),
        _mul_corner(a.hi, b.hi),
    )
    return Interval(min(corners), max(corners))


def _div_side(num: Interval, dlo: float, dhi: float) -> Interval:
    # num / (dlo, dhi] with 0 <= dlo <= dhi, dhi > 0; dlo = 0 taken as a limit
    def q(n: float, d: float) -> float:
        if n == 0.0:
            return 0.0
        if d == 0.0:
            return INF if n > 0 else -INF
        if d == INF:
            return 0.0
        if abs(n) == INF:
            return n
        return n / d

    cands = (q(num.lo, dlo), q(num.lo, dhi), q(num.hi, dlo), q(num.hi, dhi))
    return Interval(min(cands), max(cands))


def div(num: Interval, den: Interval) -> Interval:
    """Interval quotient.

    A denominator straddling zero yields the hull of the two one-sided
    quotients (possibly the full line); a zero-point denominator yields the
    full line (no information, sound for reverse propagation).
    """
    if num.empty or den.empty:
        return EMPTY
    if num.lo == 0.0 and num.hi == 0.0:
        if den.lo == 0.0 and den.hi == 0.0:
            return FULL
        return Interval(0.0, 0.0)
    pieces: list[Interval] = []
    if den.hi > 0.0:
        pieces.append(_div_side(num, max(den.lo, 0.0), den.hi))
    if den.lo < 0.0:
        pieces.append(neg(_div_side(num, max(-den.hi, 0.0), -den.lo)))
    if not pieces:
        return FULL
    out = pieces[0]
    for p in pieces[1:]:
        out = hull(out, p)
    return out


def _pow_scalar(x: float, p: float) -> float:
    if x == INF:
        return INF if p > 0 else 0.0
    if x == -INF:
        if p > 0:
            return -INF if float(p).is_integer() and int(p) % 2 == 1 else INF
        return 0.0
    if x == 0.0 and p < 0:
        return INF
    if x < 0.0:
        return float(x) ** int(round(p))
    return float(x) ** p


def pow_(a: Interval, p: float) -> Interval:
    """Range of y**p over y in ``a``, intersected with the domain of the power.

    Non-integer p restricts the domain to y >= 0; negative p excludes 0.
    """
    if a.empty:
        return EMPTY
    if p == 0.0:
        return Interval(1.0, 1.0)
    if p == 1.0:
        return a
    p_int = float(p).is_integer()
    if not p_int:
        a = intersect(a, Interval(0.0, INF))
        if a.empty:
            return EMPTY
    if p > 0:
        if p_int and int(p) % 2 == 0:
            m = max(abs(a.lo), abs(a.hi))
            if a.contains(0.0):
                return Interval(0.0, _pow_scalar(m, p))
            mn = min(abs(a.lo), abs(a.hi))
            return Interval(_pow_scalar(mn, p), _pow_scalar(m, p))
        # odd integer, or fractional on the nonnegative domain: increasing
        return Interval(_pow_scalar(a.lo, p), _pow_scalar(a.hi, p))
    # negative exponent: pole at zero
    out = EMPTY
    if a.hi > 0.0:
        lo_side = max(a.lo, 0.0)
        hi_val = _pow_scalar(lo_side, p) if lo_side > 0.0 else INF
        out = hull(out, Interval(_pow_scalar(a.hi, p), hi_val))
    if a.lo < 0.0:
        even = int(p) % 2 == 0
        v_at_lo = _pow_scalar(a.lo, p)
        if a.hi < 0.0:
            v_at_hi = _pow_scalar(a.hi, p)
            out = hull(out, Interval(min(v_at_lo, v_at_hi), max(v_at_lo, v_at_hi)))
        else:
            v_near0 = INF if even else -INF
            out = hull(out, Interval(min(v_at_lo, v_near0), max(v_at_lo, v_near0)))
    return out


def _signpow_scalar(x: float, p: float) -> float:
    if x == INF:
        return INF
    if x == -INF:
        return -INF
    if x == 0.0:
        return 0.0
    return math.copysign(abs(x) ** p, x)


def signpower(a: Interval, p: float) -> Interval:
    # odd-symmetric and increasing for p > 1
    if a.empty:
        return EMPTY
    return Interval(_signpow_scalar(a.lo, p), _signpow_scalar(a.hi, p))


def exp(a: Interval) -> Interval:
    if a.empty:
        return EMPTY
    lo = 0.0 if a.lo == -INF else math.exp(min(a.lo, 709.0))
    hi = INF if a.hi > 709.0 else math.exp(a.hi)
    return Interval(lo, hi)


def log(a: Interval) -> Interval:
    if a.empty:
        return EMPTY
    a = intersect(a, Interval(0.0, INF))
    if a.empty or a.hi == 0.0:
        return EMPTY
    lo = -INF if a.lo <= 0.0 else math.log(a.lo)
    hi = INF if a.hi == INF else math.log(a.hi)
    return Interval(lo, hi)


def _entropy_scalar(y: float) -> float:
    if y == 0.0:
        return 0.0
    if y == INF:
        return -INF
    return -y * math.log(y)


def entropy(a: Interval) -> Interval:
    # -y*log(y) on y >= 0: concave with maximum 1/e attained at y = 1/e
    if a.empty:
        return EMPTY
    a = intersect(a, Interval(0.0, INF))
    if a.empty:
        return EMPTY
    vlo = _entropy_scalar(a.lo)
    vhi = _entropy_scalar(a.hi)
    hi = max(vlo, vhi)
    if a.lo <= 1.0 / math.e <= a.hi:
        hi = 1.0 / math.e
    return Interval(min(vlo, vhi), hi)


def absval(a: Interval) -> Interval:
    if a.empty:
        return EMPTY
    if a.lo >= 0.0:
        return a
    if a.hi <= 0.0:
        return Interval(-a.hi, -a.lo)
    return Interval(0.0, max(-a.lo, a.hi))


_TWO_PI = 2.0 * math.pi


def _sin_range(lo: float, hi: float) -> Interval:
    if hi - lo >= _TWO_PI:
        return Interval(-1.0, 1.0)
    vals = [math.sin(lo), math.sin(hi)]
    k = math.ceil((lo - math.pi / 2.0) / math.pi)
    crit = math.pi / 2.0 + k * math.pi
    while crit <= hi:
        vals.append(math.sin(crit))
        crit += math.pi
    return Interval(max(-1.0, min(vals)), min(1.0, max(vals)))


def sin(a: Interval) -> Interval:
    if a.empty:
        return EMPTY
    if a.lo == -INF or a.hi == INF:
        return Interval(-1.0, 1.0)
    return _sin_range(a.lo, a.hi)


def cos(a: Interval) -> Interval:
    if a.empty:
        return EMPTY
    if a.lo == -INF or a.hi == INF:
        return Interval(-1.0, 1.0)
    return _sin_range(a.lo + math.pi / 2.0, a.hi + math.pi / 2.0)


def sqrt(a: Interval) -> Interval:
    return pow_(a, 0.5)


def invert_monotone(f, lo: float, hi: float, target: float, increasing: bool, iters: int = 80) -> float:
    """Solve f(y) = target for y in [lo, hi] by bisection, f monotone there."""
    a, b = lo, hi
    for _ in range(iters):
        m = 0.5 * (a + b)
        if (f(m) < target) == increasing:
            a = m
        else:
            b = m
    return 0.5 * (a + b)
