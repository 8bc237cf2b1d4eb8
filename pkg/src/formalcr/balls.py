"""Certified complex rectangles over mpmath interval arithmetic.

A ``Ball`` stands in for a ``GaussRat`` coefficient when the normal form needs
radicals.  Only exact zeros (both endpoints 0) count as zero for series
storage; every other zero test goes through ``contains_zero``.
"""

from __future__ import annotations

from contextlib import contextmanager
from fractions import Fraction

from mpmath import iv, mpf

from .series import GaussRat


class Inconclusive(Exception):
    """A zero/nonzero or ordering decision could not be certified at this precision."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@contextmanager
def precision(bits: int):
    old = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = old


def real_interval(x):
    """Enclosure of an int, Fraction, mpq or interval."""
    if isinstance(x, type(iv.mpf(0))):
        return x
    if isinstance(x, int):
        return iv.mpf(x)
    f = Fraction(int(x.numerator), int(x.denominator))
    return iv.mpf(f.numerator) / iv.mpf(f.denominator)


def _exact_zero(x) -> bool:
    return x.a == 0 and x.b == 0


class Ball:
    __slots__ = ("re", "im")
    __ball__ = True

    def __init__(self, re=0, im=0):
        self.re = real_interval(re)
        self.im = real_interval(im)

    @staticmethod
    def coerce(x) -> "Ball":
        if isinstance(x, Ball):
            return x
        if isinstance(x, GaussRat):
            return Ball(x.re, x.im)
        if isinstance(x, complex):
            return Ball(iv.mpf(x.real), iv.mpf(x.imag))
        return Ball(x, 0)

    @classmethod
    def polar(cls, modulus, angle_over_pi) -> "Ball":
        """modulus * e^{i pi angle}, both given as intervals or rationals."""
        m = real_interval(modulus)
        t = real_interval(angle_over_pi) * iv.pi
        return cls(m * iv.cos(t), m * iv.sin(t))

    def is_zero(self) -> bool:
        return _exact_zero(self.re) and _exact_zero(self.im)

    def contains_zero(self) -> bool:
        return 0 in self.re and 0 in self.im

    def certainly_nonzero(self) -> bool:
        return not self.contains_zero()

    def __add__(self, other):
        o = Ball.coerce(other)
        return Ball(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = Ball.coerce(other)
        return Ball(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return Ball.coerce(other) - self

    def __neg__(self):
        return Ball(-self.re, -self.im)

    def __mul__(self, other):
        o = Ball.coerce(other)
        a, b, c, d = self.re, self.im, o.re, o.im
        return Ball(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def conj(self):
        return Ball(self.re, -self.im)

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def inverse(self):
        n = self.abs2()
        if 0 in n:
            raise Inconclusive("division by a ball that may vanish")
        return Ball(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * Ball.coerce(other).inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result, base = Ball(1), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Ball):
            return NotImplemented
        return (self.re.a == other.re.a and self.re.b == other.re.b
                and self.im.a == other.im.a and self.im.b == other.im.b)

    __hash__ = None

    def overlaps(self, other) -> bool:
        o = Ball.coerce(other)
        return bool(_meet(self.re, o.re) and _meet(self.im, o.im))

    def real_part(self):
        return Ball(self.re, 0)

    def times_i(self):
        return Ball(-self.im, self.re)

    def radius(self):
        return max(mpf(self.re.delta.b), mpf(self.im.delta.b)) / 2

    def to_complex(self) -> complex:
        return complex(float(mpf(self.re.mid.a)), float(mpf(self.im.mid.a)))

    def text(self, digits: int = 20) -> str:
        from mpmath import nstr
        re, im = mpf(self.re.mid.a), mpf(self.im.mid.a)
        return f"({nstr(re, digits)})+({nstr(im, digits)})i +- {nstr(self.radius(), 3)}"

    def __repr__(self):
        return f"Ball({self.text(12)})"

    __str__ = text

    def zero_like(self):
        return Ball(0)

    def one_like(self):
        return Ball(1)

    def rational_like(self, q):
        return Ball(q)


def _meet(x, y) -> bool:
    return not (x.b < y.a or y.b < x.a)


def certainly_nonzero_real(x) -> bool:
    return 0 not in x
