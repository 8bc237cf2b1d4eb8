"""Sparse truncated formal power series in up to four named variables.

Coefficients are exact Gaussian rationals (``GaussRat``) or, for the ball
mode of the normal form, certified complex intervals (see ``balls``).  A
series carries its total-degree truncation order ``trunc``: every stored
coefficient is exact, and nothing is claimed about degrees above it.

Exponent tuples are packed into a single integer key internally so that
multiplying monomials is one integer addition.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil

from gmpy2 import mpq

MAX_VARS = 4
_SHIFT = 12
_BASE = 1 << _SHIFT
_MASK = _BASE - 1
MAX_DEGREE = _MASK


class SeriesError(Exception):
    pass


class VariableMismatch(SeriesError):
    pass


class ConstantTermSubstitution(SeriesError):
    pass


class NotUnitConstant(SeriesError):
    pass


class NotInvertible(SeriesError):
    pass


class NoConvergence(SeriesError):
    pass


class BeyondTruncation:
    """Marker returned when a quantity is not visible below the truncation."""

    __slots__ = ("trunc",)

    def __init__(self, trunc: int):
        self.trunc = trunc

    def __eq__(self, other):
        return isinstance(other, BeyondTruncation) and other.trunc == self.trunc

    def __hash__(self):
        return hash(("beyond", self.trunc))

    def __repr__(self):
        return f"BeyondTruncation({self.trunc})"


def _rat(x) -> mpq:
    if isinstance(x, mpq):
        return x
    if isinstance(x, str):
        return mpq(Fraction(x))
    return mpq(x)


class GaussRat:
    """Exact complex number re + i*im with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _rat(re)
        self.im = _rat(im)

    @staticmethod
    def coerce(x) -> "GaussRat":
        if isinstance(x, GaussRat):
            return x
        if isinstance(x, complex):
            return GaussRat(Fraction(x.real), Fraction(x.imag))
        return GaussRat(x, 0)

    @classmethod
    def from_rational(cls, q) -> "GaussRat":
        return cls(q, 0)

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    def __add__(self, other):
        if not isinstance(other, GaussRat):
            if hasattr(other, "__ball__"):
                return NotImplemented
            other = GaussRat.coerce(other)
        return GaussRat(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, GaussRat):
            if hasattr(other, "__ball__"):
                return NotImplemented
            other = GaussRat.coerce(other)
        return GaussRat(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GaussRat.coerce(other) - self

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __mul__(self, other):
        if not isinstance(other, GaussRat):
            if isinstance(other, (int, Fraction, type(mpq()))):
                q = _rat(other)
                return GaussRat(self.re * q, self.im * q)
            if hasattr(other, "__ball__"):
                return NotImplemented
            other = GaussRat.coerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        return GaussRat(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def conj(self):
        return GaussRat(self.re, -self.im)

    def real_part(self):
        return GaussRat(self.re, 0)

    def times_i(self):
        return GaussRat(-self.im, self.re)

    def contains_zero(self) -> bool:
        return self.is_zero()

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def inverse(self):
        n = self.abs2()
        if not n:
            raise ZeroDivisionError("inverse of zero")
        return GaussRat(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * GaussRat.coerce(other).inverse()

    def __rtruediv__(self, other):
        return GaussRat.coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result, base = GaussRat(1), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        try:
            other = GaussRat.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"GaussRat({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "-" if self.im < 0 else "+"
        return f"({self.re} {sign} {abs(self.im)}i)"

    def text(self) -> str:
        """Serialization form ``(<re>/<den>)+(<im>/<den>)i`` with a common denominator."""
        den = _lcm(self.re.denominator, self.im.denominator)
        rn = self.re.numerator * (den // self.re.denominator)
        im_n = self.im.numerator * (den // self.im.denominator)
        return f"({rn}/{den})+({im_n}/{den})i"

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def zero_like(self):
        return ZERO

    def one_like(self):
        return ONE

    def rational_like(self, q):
        return GaussRat(q)


def _lcm(a, b):
    from math import gcd

    a, b = int(a), int(b)
    return a * b // gcd(a, b)


I = GaussRat(0, 1)
ONE = GaussRat(1)
ZERO = GaussRat(0)


# ---------------------------------------------------------------------------
# exponent packing


def pack(exps) -> int:
    key = 0
    for i, e in enumerate(exps):
        if e < 0 or e > _MASK:
            raise ValueError(f"exponent {e} out of range")
        key |= e << (_SHIFT * i)
    return key


def unpack(key: int, arity: int) -> tuple:
    return tuple((key >> (_SHIFT * i)) & _MASK for i in range(arity))


def key_degree(key: int) -> int:
    d = 0
    while key:
        d += key & _MASK
        key >>= _SHIFT
    return d


def _unit(i: int) -> int:
    return 1 << (_SHIFT * i)


class MultiSeries:
    """Truncated power series: ``vars``, sparse ``terms`` and ``trunc``.

    ``terms`` maps exponent tuples to coefficients; zero coefficients and
    terms above the truncation are never stored.
    """

    __slots__ = ("vars", "trunc", "_t", "_zero")

    def __init__(self, vars, terms=None, trunc: int = 0, zero=None):
        vars = tuple(vars)
        if not 1 <= len(vars) <= MAX_VARS:
            raise ValueError("a series has between 1 and 4 variables")
        if len(set(vars)) != len(vars):
            raise ValueError("repeated variable name")
        if trunc < 0 or trunc > MAX_DEGREE:
            raise ValueError("truncation out of range")
        self.vars = vars
        self.trunc = int(trunc)
        self._zero = zero if zero is not None else ZERO
        t = {}
        if terms:
            for exps, c in terms.items():
                if len(exps) != len(vars):
                    raise ValueError("exponent tuple has wrong length")
                if sum(exps) > trunc:
                    continue
                if not hasattr(c, "is_zero"):
                    c = GaussRat.coerce(c)
                if c.is_zero():
                    continue
                key = pack(exps)
                if key in t:
                    c = t[key] + c
                    if c.is_zero():
                        del t[key]
                        continue
                t[key] = c
        self._t = t

    @classmethod
    def _raw(cls, vars, t, trunc, zero=None):
        s = object.__new__(cls)
        s.vars = vars
        s.trunc = trunc
        s._t = t
        s._zero = zero if zero is not None else ZERO
        return s

    def _like(self, t, trunc):
        return MultiSeries._raw(self.vars, t, trunc, self._zero)

    # constructors -----------------------------------------------------

    @classmethod
    def zero(cls, vars, trunc, zero=None):
        return cls._raw(tuple(vars), {}, trunc, zero)

    @classmethod
    def constant(cls, vars, c, trunc):
        c = c if hasattr(c, "is_zero") else GaussRat.coerce(c)
        t = {} if c.is_zero() else {0: c}
        return cls._raw(tuple(vars), t, trunc, c.zero_like())

    @classmethod
    def monomial(cls, vars, exps, c=1, trunc=0):
        vars = tuple(vars)
        if isinstance(exps, dict):
            exps = tuple(exps.get(v, 0) for v in vars)
        return cls(vars, {tuple(exps): c}, trunc)

    @classmethod
    def variable(cls, vars, name, trunc):
        vars = tuple(vars)
        exps = tuple(1 if v == name else 0 for v in vars)
        if name not in vars:
            raise VariableMismatch(f"unknown variable {name!r}")
        return cls(vars, {exps: 1}, trunc)

    # access -----------------------------------------------------------

    @property
    def terms(self) -> dict:
        n = len(self.vars)
        return {unpack(k, n): c for k, c in self._t.items()}

    def items(self):
        n = len(self.vars)
        for k, c in self._t.items():
            yield unpack(k, n), c

    def coeff(self, exps):
        if isinstance(exps, dict):
            exps = tuple(exps.get(v, 0) for v in self.vars)
        return self._t.get(pack(exps), self._zero)

    def __len__(self):
        return len(self._t)

    def is_zero(self) -> bool:
        return not self._t

    def constant_term(self):
        return self._t.get(0, self._zero)

    def degree(self) -> int:
        """Largest total degree present (-1 for the zero series)."""
        return max((key_degree(k) for k in self._t), default=-1)

    def valuation(self):
        if not self._t:
            return BeyondTruncation(self.trunc)
        return min(key_degree(k) for k in self._t)

    def max_exponent(self, var) -> int:
        i = self.vars.index(var)
        return max(((k >> (_SHIFT * i)) & _MASK for k in self._t), default=0)

    def __eq__(self, other):
        if not isinstance(other, MultiSeries):
            return NotImplemented
        return self.vars == other.vars and self.trunc == other.trunc and self._t == other._t

    def __hash__(self):
        return hash((self.vars, self.trunc, frozenset(self._t)))

    def agrees_with(self, other, degree=None) -> bool:
        """Equality of all coefficients up to ``degree`` (default: common truncation)."""
        d = min(self.trunc, other.trunc) if degree is None else degree
        return first_difference(self, other, d) is None

    # truncation -------------------------------------------------------

    def truncate(self, d: int) -> "MultiSeries":
        if d >= self.trunc:
            return self
        t = {k: c for k, c in self._t.items() if key_degree(k) <= d}
        return self._like(t, d)

    def with_trunc(self, d: int) -> "MultiSeries":
        """Same stored terms, declared truncation ``d`` (terms above ``d`` dropped).

        Raising the truncation asserts that the missing coefficients are
        zero; callers use it only where that is known to hold.
        """
        t = {k: c for k, c in self._t.items() if key_degree(k) <= d}
        return self._like(t, d)

    def homogeneous_part(self, d: int) -> "MultiSeries":
        t = {k: c for k, c in self._t.items() if key_degree(k) == d}
        return self._like(t, self.trunc)

    # arithmetic -------------------------------------------------------

    def _check(self, other):
        if self.vars != other.vars:
            raise VariableMismatch(f"{self.vars} vs {other.vars}")

    def _lift(self, other):
        if isinstance(other, MultiSeries):
            self._check(other)
            return other
        if not hasattr(other, "is_zero"):
            other = self._scalar(other) if not isinstance(other, complex) else GaussRat.coerce(other)
        return MultiSeries.constant(self.vars, other, self.trunc)

    def __add__(self, other):
        other = self._lift(other)
        d = min(self.trunc, other.trunc)
        t = {k: c for k, c in self._t.items() if key_degree(k) <= d} if d < self.trunc else dict(self._t)
        for k, c in other._t.items():
            if d < other.trunc and key_degree(k) > d:
                continue
            if k in t:
                s = t[k] + c
                if s.is_zero():
                    del t[k]
                else:
                    t[k] = s
            else:
                t[k] = c
        return self._like(t, d)

    __radd__ = __add__

    def __neg__(self):
        return self._like({k: -c for k, c in self._t.items()}, self.trunc)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, c) -> "MultiSeries":
        if not hasattr(c, "is_zero"):
            c = GaussRat.coerce(c) if isinstance(c, complex) else self._scalar(c)
        if c.is_zero():
            return self._like({}, self.trunc)
        t = {}
        for k, v in self._t.items():
            p = v * c
            if not p.is_zero():
                t[k] = p
        return self._like(t, self.trunc)

    def __mul__(self, other):
        if not isinstance(other, MultiSeries):
            return self.scale(other)
        self._check(other)
        return _mul(self, other, min(self.trunc, other.trunc))

    def __rmul__(self, other):
        return self.scale(other)

    def mul_to(self, other, d: int) -> "MultiSeries":
        """Product truncated at ``min(d, self.trunc, other.trunc)``."""
        self._check(other)
        return _mul(self, other, min(d, self.trunc, other.trunc))

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = MultiSeries.constant(self.vars, 1, self.trunc)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def conj(self) -> "MultiSeries":
        """Conjugate the coefficients only."""
        return self._like({k: c.conj() for k, c in self._t.items()}, self.trunc)

    def conj_swap(self, involution: dict) -> "MultiSeries":
        """Conjugate coefficients and permute variables along ``involution``.

        ``involution`` maps a variable name to its partner, e.g.
        ``{"z": "zb", "zb": "z"}``; unmentioned variables stay fixed.
        """
        pairing = dict(involution)
        for a, b in list(pairing.items()):
            pairing.setdefault(b, a)
            if pairing[b] != a:
                raise ValueError("not an involution")
        perm = [self.vars.index(pairing.get(v, v)) for v in self.vars]
        n = len(self.vars)
        t = {}
        for k, c in self._t.items():
            e = unpack(k, n)
            new = [0] * n
            for i in range(n):
                new[perm[i]] = e[i]
            t[pack(new)] = c.conj()
        return self._like(t, self.trunc)

    def rename(self, new_vars) -> "MultiSeries":
        new_vars = tuple(new_vars)
        if len(new_vars) != len(self.vars):
            raise VariableMismatch("arity differs")
        return MultiSeries._raw(new_vars, dict(self._t), self.trunc, self._zero)

    def embed(self, target_vars, mapping=None) -> "MultiSeries":
        """Re-express in ``target_vars``; ``mapping`` renames source variables."""
        target_vars = tuple(target_vars)
        mapping = mapping or {}
        idx = []
        for v in self.vars:
            name = mapping.get(v, v)
            if name not in target_vars:
                raise VariableMismatch(f"variable {name!r} not in {target_vars}")
            idx.append(target_vars.index(name))
        n = len(self.vars)
        t = {}
        for k, c in self._t.items():
            e = unpack(k, n)
            key = 0
            for i in range(n):
                key += e[i] << (_SHIFT * idx[i])
            if key in t:
                c = t[key] + c
            t[key] = c
        t = {k: c for k, c in t.items() if not c.is_zero()}
        return MultiSeries._raw(target_vars, t, self.trunc, self._zero)

    def derivative(self, var) -> "MultiSeries":
        i = self.vars.index(var)
        t = {}
        for k, c in self._t.items():
            e = (k >> (_SHIFT * i)) & _MASK
            if e:
                t[k - _unit(i)] = c * e
        return self._like(t, max(self.trunc - 1, 0))

    def coeff_extract(self, fixed: dict) -> "MultiSeries":
        """Coefficient series of the monomial ``fixed`` in the remaining variables."""
        for v in fixed:
            if v not in self.vars:
                raise VariableMismatch(f"unknown variable {v!r}")
        rest = tuple(v for v in self.vars if v not in fixed)
        if not rest:
            raise ValueError("fixed must leave at least one variable free")
        n = len(self.vars)
        pos = [self.vars.index(v) for v in rest]
        fixed_pos = [(self.vars.index(v), e) for v, e in fixed.items()]
        t = {}
        for k, c in self._t.items():
            e = unpack(k, n)
            if all(e[i] == f for i, f in fixed_pos):
                t[pack([e[i] for i in pos])] = c
        d = self.trunc - sum(fixed.values())
        if d < 0:
            return MultiSeries._raw(rest, {}, 0, self._zero)
        return MultiSeries._raw(rest, t, d, self._zero)

    def vanishing_order(self):
        """Order of the lowest nonzero term (univariate intent; total degree otherwise)."""
        return self.valuation()

    def map_coefficients(self, fn) -> "MultiSeries":
        t = {}
        for k, c in self._t.items():
            v = fn(c)
            if not v.is_zero():
                t[k] = v
        zero = fn(self._zero)
        return MultiSeries._raw(self.vars, t, self.trunc, zero)

    # composition ------------------------------------------------------

    def substitute(self, bindings: dict, target_vars=None) -> "MultiSeries":
        """Formal composition.

        ``bindings`` maps some of this series' variables to series over
        ``target_vars`` (default: the same variables).  Unbound variables
        must exist in ``target_vars`` and are carried over unchanged.
        """
        if target_vars is None:
            if bindings:
                target_vars = next(iter(bindings.values())).vars
            else:
                target_vars = self.vars
        target_vars = tuple(target_vars)
        for v, b in bindings.items():
            if v not in self.vars:
                raise VariableMismatch(f"unknown variable {v!r}")
            if b.vars != target_vars:
                raise VariableMismatch(f"binding for {v!r} lives in {b.vars}, expected {target_vars}")
        n = len(self.vars)
        bound = [i for i, v in enumerate(self.vars) if v in bindings]
        free = [i for i, v in enumerate(self.vars) if v not in bindings]
        free_target = []
        for i in free:
            if self.vars[i] not in target_vars:
                raise VariableMismatch(f"variable {self.vars[i]!r} has no binding")
            free_target.append(target_vars.index(self.vars[i]))
        d = self.trunc
        for i in bound:
            b = bindings[self.vars[i]]
            if self.max_exponent(self.vars[i]) > 0:
                if not b.constant_term().is_zero():
                    raise ConstantTermSubstitution(
                        f"binding for {self.vars[i]!r} has a nonzero constant term")
                d = min(d, b.trunc)
        # group terms by the exponents of the bound variables
        groups = {}
        for k, c in self._t.items():
            e = unpack(k, n)
            be = tuple(e[i] for i in bound)
            fk = 0
            for i, ti in zip(free, free_target):
                fk += e[i] << (_SHIFT * ti)
            groups.setdefault(be, []).append((fk, key_degree(fk), c))
        blist = [bindings[self.vars[i]].truncate(d) for i in bound]
        one = MultiSeries._raw(target_vars, {0: self._one()}, d, self._zero)
        memo = {tuple(0 for _ in bound): one}

        def power_product(be):
            if be in memo:
                return memo[be]
            j = max(i for i, x in enumerate(be) if x)
            prev = list(be)
            prev[j] -= 1
            p = power_product(tuple(prev)) * blist[j]
            memo[be] = p
            return p

        acc = {}
        zero = self._zero
        for be in sorted(groups, key=lambda x: (sum(x), x)):
            p = power_product(be)
            for fk, fd, c in groups[be]:
                if fd > d:
                    continue
                for pk, pc in p._t.items():
                    if key_degree(pk) + fd > d:
                        continue
                    key = pk + fk
                    v = pc * c
                    if key in acc:
                        v = acc[key] + v
                    acc[key] = v
        acc = {k: c for k, c in acc.items() if not c.is_zero()}
        return MultiSeries._raw(target_vars, acc, d, zero)

    def _one(self):
        return self._zero.one_like()

    # univariate helpers ---------------------------------------------

    def rational_power(self, exponent) -> "MultiSeries":
        """``self ** exponent`` for rational exponent; requires constant term 1."""
        c0 = self.constant_term()
        if not (c0 - self._one()).is_zero():
            raise NotUnitConstant("constant term must be 1")
        exponent = Fraction(exponent)
        v = self - MultiSeries.constant(self.vars, self._one(), self.trunc)
        result = MultiSeries.constant(self.vars, self._one(), self.trunc)
        term = result
        binom = Fraction(1)
        for k in range(1, self.trunc + 1):
            binom = binom * (exponent - k + 1) / k
            term = term * v
            if term.is_zero():
                break
            if binom:
                result = result + term.scale(self._scalar(binom))
        return result

    def _scalar(self, q):
        return self._zero.rational_like(q)

    def nth_root(self, n: int) -> "MultiSeries":
        if n < 1:
            raise ValueError("root index must be positive")
        return self.rational_power(Fraction(1, n))

    def reciprocal(self) -> "MultiSeries":
        """Multiplicative inverse of a series with invertible constant term."""
        c0 = self.constant_term()
        if c0.is_zero():
            raise NotInvertible("constant term is zero")
        inv0 = c0.inverse()
        u = self.scale(inv0)
        return u.rational_power(-1).scale(inv0)

    def invert_univariate(self) -> "MultiSeries":
        """Compositional inverse of a univariate series with psi(0)=0, psi'(0)!=0."""
        if len(self.vars) != 1:
            raise ValueError("univariate series expected")
        if not self.constant_term().is_zero():
            raise NotInvertible("psi(0) != 0")
        lin = self.coeff((1,))
        if lin.is_zero():
            raise NotInvertible("psi'(0) = 0")
        inv_lin = lin.inverse()
        x = MultiSeries._raw(self.vars, {_unit(0): self._one()}, self.trunc, self._zero)
        higher = self - x.scale(lin)

        def builder(phi):
            return (x.truncate(phi.trunc) - higher.substitute({self.vars[0]: phi})).scale(inv_lin)

        return solve_fixed_point(builder, 1, self.trunc, x.scale(inv_lin))

    # text form --------------------------------------------------------

    def sorted_items(self):
        """Items in graded lexicographic order (degree, then exponents descending)."""
        n = len(self.vars)
        items = [(unpack(k, n), c) for k, c in self._t.items()]
        items.sort(key=lambda ec: (sum(ec[0]), tuple(-x for x in ec[0])))
        return items

    def to_text(self) -> str:
        lines = [f"# vars {' '.join(self.vars)} trunc {self.trunc}"]
        for e, c in self.sorted_items():
            mono = " ".join(f"{v}^{x}" for v, x in zip(self.vars, e))
            lines.append(f"{c.text()} * {mono}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MultiSeries":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        head = lines[0].split()
        if head[:2] != ["#", "vars"] or "trunc" not in head:
            raise ValueError("missing header line")
        k = head.index("trunc")
        vars = tuple(head[2:k])
        trunc = int(head[k + 1])
        terms = {}
        for ln in lines[1:]:
            coef, mono = ln.split("*", 1)
            re_part, im_part = coef.strip().split(")+(")
            re = Fraction(re_part.strip("("))
            im = Fraction(im_part.rstrip("i").rstrip(")"))
            exps = dict((p.split("^")[0], int(p.split("^")[1])) for p in mono.split())
            terms[tuple(exps.get(v, 0) for v in vars)] = GaussRat(re, im)
        return cls(vars, terms, trunc)

    def __repr__(self):
        if not self._t:
            return f"MultiSeries({self.vars}, 0, trunc={self.trunc})"
        parts = []
        for e, c in self.sorted_items()[:12]:
            mono = "*".join(f"{v}^{x}" if x > 1 else v for v, x in zip(self.vars, e) if x)
            parts.append(f"{c}*{mono}" if mono else str(c))
        more = " + ..." if len(self._t) > 12 else ""
        return f"MultiSeries({' + '.join(parts)}{more}, trunc={self.trunc})"


def _by_degree(s: MultiSeries, d: int):
    buckets = [[] for _ in range(d + 1)]
    for k, c in s._t.items():
        kd = key_degree(k)
        if kd <= d:
            buckets[kd].append((k, c))
    return buckets


def _mul(a: MultiSeries, b: MultiSeries, d: int) -> MultiSeries:
    if not a._t or not b._t:
        return a._like({}, d)
    if len(a._t) > len(b._t):
        a, b = b, a
    if isinstance(a._zero, GaussRat) and isinstance(b._zero, GaussRat):
        return _mul_exact(a, b, d)
    bb = _by_degree(b, d)
    acc = {}
    get = acc.get
    for ka, ca in a._t.items():
        da = key_degree(ka)
        if da > d:
            continue
        for db in range(d - da + 1):
            for kb, cb in bb[db]:
                key = ka + kb
                v = ca * cb
                old = get(key)
                acc[key] = v if old is None else old + v
    t = {k: c for k, c in acc.items() if not c.is_zero()}
    return MultiSeries._raw(a.vars, t, d, a._zero)


def _mul_exact(a: MultiSeries, b: MultiSeries, d: int) -> MultiSeries:
    # Gaussian-rational fast path on raw rational parts
    buckets = [[] for _ in range(d + 1)]
    for k, c in b._t.items():
        kd = key_degree(k)
        if kd <= d:
            buckets[kd].append((k, c.re, c.im))
    # cumulative lists: all b-terms of degree <= j
    cumulative = []
    run = []
    for j in range(d + 1):
        run = run + buckets[j]
        cumulative.append(run)
    acc_re = {}
    acc_im = {}
    zero = mpq(0)
    for ka, ca in a._t.items():
        da = key_degree(ka)
        if da > d:
            continue
        ar, ai = ca.re, ca.im
        if ai:
            if ar:
                for kb, br, bi in cumulative[d - da]:
                    key = ka + kb
                    acc_re[key] = acc_re.get(key, zero) + (ar * br - ai * bi)
                    acc_im[key] = acc_im.get(key, zero) + (ar * bi + ai * br)
            else:
                for kb, br, bi in cumulative[d - da]:
                    key = ka + kb
                    acc_re[key] = acc_re.get(key, zero) - ai * bi
                    acc_im[key] = acc_im.get(key, zero) + ai * br
        else:
            for kb, br, bi in cumulative[d - da]:
                key = ka + kb
                acc_re[key] = acc_re.get(key, zero) + ar * br
                acc_im[key] = acc_im.get(key, zero) + ar * bi
    t = {}
    for key, re in acc_re.items():
        im = acc_im[key]
        if re or im:
            c = object.__new__(GaussRat)
            c.re = re
            c.im = im
            t[key] = c
    return MultiSeries._raw(a.vars, t, d, ZERO)


def first_difference(a: MultiSeries, b: MultiSeries, d: int):
    """Lowest total degree <= d where the coefficients of a and b differ, else None."""
    if a.vars != b.vars:
        raise VariableMismatch(f"{a.vars} vs {b.vars}")
    worst = None
    keys = set(a._t) | set(b._t)
    for k in keys:
        kd = key_degree(k)
        if kd > d:
            continue
        if not (a._t.get(k, a._zero) - b._t.get(k, b._zero)).is_zero():
            if worst is None or kd < worst:
                worst = kd
    return worst


def solve_fixed_point(builder, gain: int, D: int, initial: MultiSeries, start: int | None = None) -> MultiSeries:
    """Fixed point of ``builder`` exact to total degree ``D``.

    The builder must raise the valuation of the error by at least ``gain``
    per application.  Iterates are computed at a truncation that grows by
    ``gain`` each round, followed by one confirming round at ``D``.  When
    ``initial`` is already exact below degree ``start`` the first round runs
    at that level.
    """
    if gain < 1:
        raise ValueError("gain must be at least 1")
    level = min(D, max(gain, start or 0))
    budget = ceil(max(D - level, 0) / gain) + 3
    x = initial.with_trunc(level)
    exact = isinstance(initial._zero, GaussRat)
    for _ in range(budget):
        nxt = builder(x.with_trunc(level)).truncate(level)
        if level == D and nxt.trunc == D and (not exact or nxt == x.with_trunc(D)):
            return nxt
        x = nxt
        level = min(D, level + gain)
    raise NoConvergence(f"no fixed point to degree {D} after {budget} iterations")
