"""Finite subgroups of U(1) x {+1, -1} and the finiteness / triviality decisions.

Unimodular numbers are stored as rational multiples of pi, so every group
operation is integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd, lcm

from .series import GaussRat


class FormulaMismatch(Exception):
    pass


class Infinite:
    """Marker for an unbounded 2-adic order or an infinite group."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Infinite"

    def __str__(self):
        return "inf"


INFINITE = Infinite()


@dataclass(frozen=True, order=True)
class AngleRational:
    """e^{i pi num/den}, with num reduced modulo 2 den."""

    num: int
    den: int = 1

    def __post_init__(self):
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        f = Fraction(self.num, self.den)
        num = f.numerator % (2 * f.denominator)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", f.denominator)

    @property
    def turns(self) -> Fraction:
        """Angle as a fraction of pi in [0, 2)."""
        return Fraction(self.num, self.den)

    def __mul__(self, other):
        f = self.turns + other.turns
        return AngleRational(f.numerator, f.denominator)

    def __pow__(self, k: int):
        f = self.turns * k
        return AngleRational(f.numerator, f.denominator)

    def inverse(self):
        return self ** -1

    def conj(self):
        return self.inverse()

    def is_one(self) -> bool:
        return self.num == 0

    def to_gauss(self) -> GaussRat:
        """Exact value when it lies in {1, i, -1, -i}."""
        if 2 % self.den:
            raise ValueError(f"e^(i pi {self.num}/{self.den}) is not a Gaussian rational")
        quarter = (self.num * (2 // self.den)) % 4
        return [GaussRat(1), GaussRat(0, 1), GaussRat(-1), GaussRat(0, -1)][quarter]

    def to_complex(self) -> complex:
        import cmath
        return cmath.exp(1j * cmath.pi * self.num / self.den)

    def __str__(self):
        named = {(0, 1): "1", (1, 1): "-1", (1, 2): "i", (3, 2): "-i"}
        return named.get((self.num, self.den), f"exp(i*pi*{self.num}/{self.den})")


ONE_ANGLE = AngleRational(0)


@dataclass(frozen=True, order=True)
class TorusElement:
    gamma: AngleRational
    delta: int

    def __post_init__(self):
        if self.delta not in (1, -1):
            raise ValueError("delta must be +1 or -1")

    def __mul__(self, other):
        return TorusElement(self.gamma * other.gamma, self.delta * other.delta)

    def satisfies(self, k: int, l: int) -> bool:
        """gamma^k delta^l = 1."""
        g = self.gamma ** k
        if (self.delta ** (l % 2)) == -1:
            g = g * AngleRational(1)
        return g.is_one()

    def __str__(self):
        return f"({self.gamma}, {'+1' if self.delta == 1 else '-1'})"


IDENTITY = TorusElement(ONE_ANGLE, 1)


@dataclass(frozen=True)
class TorusSubgroup:
    circle_plus: bool
    circle_minus: bool
    finite: frozenset

    def __post_init__(self):
        for e in self.finite:
            if (e.delta == 1 and self.circle_plus) or (e.delta == -1 and self.circle_minus):
                raise ValueError("finite element lies in a circle slice")
        if not (self.circle_plus or self.circle_minus):
            for a in self.finite:
                for b in self.finite:
                    if a * b not in self.finite:
                        raise ValueError("finite part is not closed under multiplication")

    @property
    def is_finite(self) -> bool:
        return not (self.circle_plus or self.circle_minus)

    def order(self):
        return len(self.finite) if self.is_finite else INFINITE

    def __contains__(self, e: TorusElement) -> bool:
        if e.delta == 1 and self.circle_plus:
            return True
        if e.delta == -1 and self.circle_minus:
            return True
        return e in self.finite

    def elements(self):
        if not self.is_finite:
            raise ValueError("group contains a circle")
        return sorted(self.finite)


def group_D(k: int, l: int) -> TorusSubgroup:
    """{(gamma, delta) : gamma^k delta^l = 1}."""
    if k < 0:
        k, l = -k, -l
    if k == 0:
        return TorusSubgroup(True, l % 2 == 0, frozenset())
    elems = set()
    for delta in (1, -1):
        shift = 1 if (delta == -1 and l % 2) else 0
        for p in range(k):
            elems.add(TorusElement(AngleRational(2 * p + shift, k), delta))
    return TorusSubgroup(False, False, frozenset(elems))


def membership_C(lam, r, alpha: int, n: int, mu: int) -> bool:
    """lam^alpha conj(lam)^n r^(mu-1) = 1, for exact GaussRat or angle inputs."""
    if isinstance(lam, AngleRational):
        lam = TorusElement(lam, int(r)) if r in (1, -1) else None
        if lam is None:
            raise ValueError("angle input needs r = +1 or -1")
        return lam.satisfies(alpha - n, mu - 1)
    if getattr(lam, "__ball__", False) or getattr(r, "__ball__", False):
        return _membership_ball(lam, r, alpha, n, mu)
    lam = GaussRat.coerce(lam)
    r = GaussRat.coerce(r)
    if lam.is_zero() or r.is_zero():
        raise ValueError("parameters must be nonzero")
    value = lam ** alpha * lam.conj() ** n * r ** (mu - 1)
    return (value - GaussRat(1)).is_zero()


def _membership_ball(lam, r, alpha, n, mu) -> bool:
    from .balls import Ball, Inconclusive
    lam, r = Ball.coerce(lam), Ball.coerce(r)
    if not (lam.certainly_nonzero() and r.certainly_nonzero()):
        raise Inconclusive("parameter ball contains zero")
    value = lam ** alpha * lam.conj() ** n * r ** (mu - 1)
    if (value - Ball(1)).certainly_nonzero():
        return False
    raise Inconclusive("the defining product is within rounding of 1")


def _validate(lam_set):
    out = []
    for t in lam_set:
        a, n, m = t
        if a < 1 or n < a or m < 0:
            raise ValueError(f"invalid triple {t}")
        out.append((a, n, m))
    return sorted(set(out))


def group_N(lam_set) -> TorusSubgroup:
    """Intersection of D(n - alpha, mu - 1) over the triples."""
    triples = _validate(lam_set)
    circle = {1: True, -1: True}
    for a, n, m in triples:
        if n - a == 0:
            circle[-1] = circle[-1] and (m - 1) % 2 == 0
    nonzero = [n - a for a, n, m in triples if n != a]
    if not nonzero:
        return TorusSubgroup(circle[1], circle[-1], frozenset())
    L = reduce(lcm, nonzero)
    elems = set()
    for delta in (1, -1):
        if not circle[delta]:
            continue
        for j in range(2 * L):
            e = TorusElement(AngleRational(j, L), delta)
            if all(e.satisfies(n - a, m - 1) for a, n, m in triples):
                elems.add(e)
    return TorusSubgroup(False, False, frozenset(elems))


def gcd_invariants(lam_set):
    """(g, g_plus over odd mu, g_minus over even mu), with gcd of nothing = 0."""
    triples = _validate(lam_set)
    g = reduce(gcd, (n - a for a, n, m in triples), 0)
    gp = reduce(gcd, (n - a for a, n, m in triples if m % 2 == 1), 0)
    gm = reduce(gcd, (n - a for a, n, m in triples if m % 2 == 0), 0)
    return g, gp, gm


def ord2(k: int):
    if k == 0:
        return INFINITE
    k = abs(k)
    j = 0
    while k % 2 == 0:
        k //= 2
        j += 1
    return j


def _ord_ge(a, b) -> bool:
    if a is INFINITE:
        return True
    if b is INFINITE:
        return False
    return a >= b


@dataclass(frozen=True)
class Cardinality:
    value: object            # int or INFINITE
    formula: object = None   # closed-form value, None when not applicable
    formula_applicable: bool = False

    @property
    def agrees(self):
        return self.formula is None or self.formula == self.value


def cardinality_formula(lam_set):
    """Closed form for |N|; None when some mu parity assumption fails or g = 0."""
    triples = _validate(lam_set)
    if not any(m % 2 == 0 for a, n, m in triples):
        return None
    g, gp, gm = gcd_invariants(triples)
    if g == 0:
        return None
    even_orders = {ord2(n - a) for a, n, m in triples if m % 2 == 0}
    if len(even_orders) > 1 or _ord_ge(ord2(gm), ord2(gp)):
        return g
    return 2 * g


def cardinality_N(lam_set) -> Cardinality:
    value = group_N(lam_set).order()
    formula = cardinality_formula(lam_set)
    if formula is not None and formula != value:
        raise FormulaMismatch(f"formula gives {formula}, enumeration gives {value}")
    return Cardinality(value, formula, formula is not None)


class Case:
    A = "CaseA"
    B = "CaseB"


def case_AB(t, t2) -> str:
    a, n, m = t
    a2, n2, m2 = t2
    if tuple(t) == tuple(t2):
        raise ValueError("the two triples must differ")
    lhs = m2 * (a + n) - m * (a2 + n2)
    return Case.A if lhs == (a + n) - (a2 + n2) else Case.B


def fraction(t, t2):
    """((a2+n2) mu - (a+n) mu2) / ((a2+n2) - (a+n)); None when the sums agree."""
    a, n, m = t
    a2, n2, m2 = t2
    den = (a2 + n2) - (a + n)
    if den == 0:
        return None
    return Fraction((a2 + n2) * m - (a + n) * m2, den)


def jet_order(t, t2) -> int:
    f = fraction(t, t2)
    if f is None or f.denominator != 1 or f < 2:
        return 1
    return int(f)


def lambda_index(t, t2):
    """The exceptional step index: fraction - 1 when that is a positive integer, else None."""
    f = fraction(t, t2)
    if f is None or f.denominator != 1 or f - 1 < 1:
        return None
    return int(f) - 1


@dataclass(frozen=True)
class Finiteness:
    kind: str                 # NotApplicable | Finite | JetEmbedOnly
    dim_at_most_one: bool = False
    bound: int | None = None
    jet_order: int | None = None
    witness: tuple | None = None   # (t, reason)


def _condition_for(t, triples):
    others = [u for u in triples if u != t]
    A = t[0] + t[1]
    for u in others:
        if u[0] + u[1] == A:
            return f"equal sums alpha+n with {u}"
    fracs = {fraction(t, u) for u in others}
    if len(fracs) != 1:
        return "fraction differs across choices"
    (f,) = fracs
    if f.denominator != 1 or f < 1:
        return f"fraction {f} is not a positive integer"
    return None


def finiteness_decision(lam_set) -> Finiteness:
    triples = _validate(lam_set)
    pivots = [t for t in triples if t[0] != t[1]]
    if len(triples) < 2 or not pivots:
        return Finiteness("NotApplicable")
    best = None
    for t in pivots:
        reason = _condition_for(t, triples)
        if reason is not None:
            bound = 2 * (t[1] - t[0])
            if best is None or bound < best[0]:
                best = (bound, t, reason)
    if best is not None:
        return Finiteness("Finite", True, best[0], None, (best[1], best[2]))
    t = pivots[0]
    other = next(u for u in triples if u != t)
    return Finiteness("JetEmbedOnly", True, None, jet_order(t, other), (t, "fraction is a constant positive integer"))


@dataclass(frozen=True)
class Triviality:
    kind: str                 # NotApplicable | Trivial | NontrivialPossible
    witness: TorusElement | None = None
    at_most: object = None
    reading_note: str = "odd rule: some triple has mu odd and n - alpha odd"


def triviality_decision(lam_set) -> Triviality:
    triples = _validate(lam_set)
    if finiteness_decision(triples).kind != "Finite":
        return Triviality("NotApplicable")
    g, _, _ = gcd_invariants(triples)
    has_even = any(m % 2 == 0 for a, n, m in triples)
    even_rule = any(m % 2 == 0 and (n - a) % 2 == 0 for a, n, m in triples)
    odd_rule = any(m % 2 == 1 and (n - a) % 2 == 1 for a, n, m in triples)
    if g == 1 and has_even and (even_rule or odd_rule):
        return Triviality("Trivial")
    N = group_N(triples)
    witness = next((e for e in N.elements() if e != IDENTITY), None) if N.is_finite else None
    at_most = 2 if (g == 1 and has_even) else N.order()
    return Triviality("NontrivialPossible", witness, at_most)
