"""Complete formal normal form for hypersurfaces with two invariant triples.

The construction runs in two stages.  A preliminary map
``(psibar^{-1}(F_z z), G_w w)`` makes ``q_{alpha,mu} = 2i chi^n`` and puts the
second leading coefficient into the form ``i c eps chi^ntilde``.  Then, for
k = 1, 2, ..., a near-identity map

    F = z + sum_a x_a z^a w^k,   Re G(0, w) = w + s w^{k+1}

(with G completed so that normal coordinates are kept) kills the target
coefficients at tau-order ``k``.  The targets depend affinely on the
unknowns to first order; the slopes come from linearising the pullback
identity at the identity map.  A real pullback checks the solved values
exactly; when a target still survives (an unknown can enter quadratically)
the residual is solved again with the same slopes, for a few rounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import gmpy2
import mpmath
from gmpy2 import mpq

from .balls import Ball, Inconclusive, precision as ball_precision, real_interval
from .hypersurface import (
    MAP_VARS,
    Q_VARS,
    FormalMap,
    QForm,
    pullback,
    split_by,
    transversal_from_taylor,
)
from .invariants import _q_form, coefficient_series, profile
from .series import BeyondTruncation, GaussRat, MultiSeries, _mul, first_difference
from .symmetry import (
    AngleRational,
    Case,
    TorusElement,
    case_AB,
    group_D,
    lambda_index,
)


class NormalFormError(Exception):
    pass


class NonRationalScaling(NormalFormError):
    """Exact mode needs a modulus or phase outside the Gaussian rationals."""


class InsufficientTruncation(NormalFormError):
    pass


class SingularStep(NormalFormError):
    """The solved step does not reproduce its own target values."""


class HypothesesNotMet(NormalFormError):
    pass


TWO_I = GaussRat(0, 2)
MINUS_I = GaussRat(0, -1)


# ---------------------------------------------------------------------------
# combinatorics of the two triples


def choose_triples(lam, t=None, t2=None):
    """Pivot triple (alpha != n) and second triple; defaults are lexicographic."""
    triples = sorted(tuple(u) for u in lam)
    if len(triples) < 2:
        raise HypothesesNotMet("need at least two invariant triples")
    if t is None:
        pivots = [u for u in triples if u[0] != u[1]]
        if not pivots:
            raise HypothesesNotMet("every invariant triple has alpha = n")
        t = pivots[0]
    t = tuple(t)
    if t not in triples:
        raise HypothesesNotMet(f"{t} is not an invariant triple")
    if t[0] == t[1]:
        raise HypothesesNotMet(f"pivot triple {t} has alpha = n")
    if t2 is None:
        t2 = next(u for u in triples if u != t)
    t2 = tuple(t2)
    if t2 not in triples or t2 == t:
        raise HypothesesNotMet(f"{t2} is not a second invariant triple")
    return t, t2


def side_triple(t, t2):
    """The triple with alpha > 1 that controls F_{w^k}(0)."""
    if t[0] > 1:
        return t
    if t2[0] > 1:
        return t2
    raise HypothesesNotMet("both triples have alpha = 1")


def step_determinant(t, t2, k: int) -> Fraction:
    """D_k = ((A2 - A)(k+1) + A mu2 - A2 mu) / (k+1) with A = alpha + n."""
    A, mu = t[0] + t[1], t[2]
    A2, mu2 = t2[0] + t2[1], t2[2]
    return Fraction((A2 - A) * (k + 1) + A * mu2 - A2 * mu, k + 1)


def exceptional_steps(t, t2) -> frozenset:
    lam = lambda_index(t, t2)
    return frozenset() if lam is None else frozenset({lam})


# ---------------------------------------------------------------------------
# scalar back ends


class _Exact:
    mode = "exact"
    bits = None

    def lift(self, series):
        return series

    def real(self, q):
        return mpq(q)

    def cplx(self, re, im=0):
        return GaussRat(re, im)

    def zero_real(self, x) -> bool:
        return x == 0

    def pivot_ok(self, x) -> bool:
        return x != 0

    def vanishes(self, c) -> bool:
        return c.is_zero()


class _Balls:
    mode = "ball"

    def __init__(self, bits):
        self.bits = bits

    def lift(self, series):
        return series.map_coefficients(Ball.coerce)

    def real(self, q):
        return real_interval(q)

    def cplx(self, re, im=0):
        return Ball(re, im)

    def zero_real(self, x) -> bool:
        return 0 in x

    def pivot_ok(self, x) -> bool:
        return 0 not in x

    def vanishes(self, c) -> bool:
        return c.contains_zero()


def _backend(mode, bits):
    if mode == "exact":
        return _Exact()
    if mode == "ball":
        return _Balls(bits)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# preliminary normalization


@dataclass(frozen=True)
class PrelimResult:
    q1: QForm
    map: FormalMap
    fz0: object
    gw0: object
    c_squared: object       # exact Fraction, or an interval in ball mode
    c_eps: object           # c * eps, so the second leading coefficient is i * c_eps
    case: str
    t: tuple
    t2: tuple


def _rational_root(q: Fraction, k: int) -> Fraction:
    if k < 0:
        q, k = 1 / q, -k
    num, ok1 = gmpy2.iroot(gmpy2.mpz(q.numerator), k)
    den, ok2 = gmpy2.iroot(gmpy2.mpz(q.denominator), k)
    if not (ok1 and ok2):
        raise NonRationalScaling(f"({q})^(1/{k}) is irrational")
    return Fraction(int(num), int(den))


def _moduli(kappa, kappa2, t, t2, case, ctx):
    """|F_z(0)| and |G_w(0)| from |kappa| rho^A |r|^m = 2 (and = 2 for kappa2 in Case B)."""
    A, m = t[0] + t[1], t[2] - 1
    A2, m2 = t2[0] + t2[1], t2[2] - 1
    P2 = Fraction(4) / Fraction(kappa.abs2())
    P2t = Fraction(4) / Fraction(kappa2.abs2())
    if case == Case.B:
        delta = A * m2 - A2 * m
        rho_pow, rho_k = P2 ** m2 / P2t ** m, 2 * delta
        r_pow, r_k = P2t ** A / P2 ** A2, 2 * delta
    else:
        rho_pow, rho_k = P2, 2 * A
        r_pow, r_k = Fraction(1), 1
    if ctx.mode == "exact":
        return _rational_root(rho_pow, rho_k), _rational_root(r_pow, r_k)
    rho = real_interval(rho_pow) ** (real_interval(1) / rho_k)
    absr = real_interval(r_pow) ** (real_interval(1) / r_k)
    return rho, absr


def _exact_arg_over_pi(c):
    """arg(c)/pi as a Fraction when c is exact and lies on an axis or diagonal."""
    if not isinstance(c, GaussRat):
        return None
    re, im = Fraction(c.re), Fraction(c.im)
    table = {(1, 0): 0, (1, 1): Fraction(1, 4), (0, 1): Fraction(1, 2), (-1, 1): Fraction(3, 4),
             (-1, 0): 1, (-1, -1): Fraction(-3, 4), (0, -1): Fraction(-1, 2), (1, -1): Fraction(-1, 4)}
    sgn = lambda x: (x > 0) - (x < 0)
    if re == 0 or im == 0 or abs(re) == abs(im):
        return Fraction(table[(sgn(re), sgn(im))])
    return None


def _arg_over_pi(c, ctx):
    exact = _exact_arg_over_pi(c)
    if exact is not None:
        return exact
    if ctx.mode == "exact":
        with mpmath.workdps(120):
            return mpmath.atan2(mpmath.mpf(Fraction(c.im).numerator) / Fraction(c.im).denominator,
                                mpmath.mpf(Fraction(c.re).numerator) / Fraction(c.re).denominator) / mpmath.pi
    from mpmath import iv
    b = Ball.coerce(c)
    if 0 in b.im and b.re.a < 0:
        raise Inconclusive("argument sits on the branch cut at this precision")
    return iv.atan2(b.im, b.re) / iv.pi


def _mp(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return x


def _frac_mod2(x: Fraction) -> Fraction:
    return x - 2 * (x // 2)


def _phase_candidates(t, t2):
    """(sigma, j, omega offset, eps offset) over the 2|alpha - n| phase solutions.

    omega has angle/pi = (theta_u + omega_offset) / e with e = alpha - n and
    theta_u = 1/2 - arg(kappa)/pi; eps has angle/pi = base + eps_offset.
    """
    a, n, mu = t
    a2, n2, mu2 = t2
    e = a - n
    m, m2 = mu - 1, mu2 - 1
    out = []
    for sigma in (1, -1):
        flip = 1 if (sigma == -1 and m % 2) else 0
        flip2 = 1 if (sigma == -1 and m2 % 2) else 0
        for j in range(abs(e)):
            w_off = Fraction(flip + 2 * j)
            eps_off = _frac_mod2(Fraction(a2 - n2) * w_off / e + flip2)
            out.append((sigma, j, w_off, eps_off))
    return out


def _select_phase(kappa, kappa2, t, t2, ctx):
    """Candidates whose eps has the smallest argument in [0, 2pi), best first."""
    a, n, mu = t
    a2, n2, mu2 = t2
    e = a - n
    phi_k = _arg_over_pi(kappa, ctx)
    phi_k2 = _arg_over_pi(kappa2, ctx)
    if isinstance(phi_k, Fraction) and isinstance(phi_k2, Fraction):
        half = Fraction(1, 2)
        base = phi_k2 - half + (a2 - n2) * (half - phi_k) / e
    elif ctx.mode == "exact":
        with mpmath.workdps(120):
            half = mpmath.mpf(1) / 2
            base = _mp(phi_k2) - half + (a2 - n2) * (half - _mp(phi_k)) / e
    else:
        half = real_interval(Fraction(1, 2))
        base = real_interval(phi_k2) - half + real_interval(a2 - n2) * (half - real_interval(phi_k)) / e
    cands = _phase_candidates(t, t2)
    # eps angle = base + off (mod 2); compare (base mod 2 + off) mod 2 for each candidate
    offsets = sorted({c[3] for c in cands})
    values = {}
    for off in offsets:
        values[off] = _wrapped(base, off, ctx)
    best = _minimal_offsets(values, ctx)
    chosen = [c for c in cands if c[3] in best]
    return chosen, phi_k


def _wrapped(base, off, ctx):
    """(base + off) mod 2 as a number (exact mode) or interval (ball mode)."""
    if isinstance(base, Fraction):
        x = _frac_mod2(base + off)
        return x if ctx.mode == "exact" else real_interval(x)
    if ctx.mode == "exact":
        with mpmath.workdps(120):
            x = base + mpmath.mpf(off.numerator) / off.denominator
            x = x - 2 * mpmath.floor(x / 2)
            if 2 - x < mpmath.mpf(10) ** -100 or x < mpmath.mpf(10) ** -100:
                return mpmath.mpf(0)
            return x
    x = base + real_interval(off)
    k = mpmath.floor(mpmath.mpf(x.mid.a) / 2)
    x = x - 2 * int(k)
    if 0 in x or 2 in x:
        raise Inconclusive("argument of eps sits on the branch cut at this precision")
    return x


def _minimal_offsets(values, ctx):
    offs = list(values)
    if ctx.mode == "exact":
        m = min(values.values())
        return {o for o in offs if values[o] == m}
    best = [o for o in offs if all(values[o].b < values[p].a for p in offs if p != o)]
    if len(best) != 1:
        raise Inconclusive("cannot separate the eps candidates at this precision")
    return set(best)


def _exact_omega(theta_u, w_off, e, u):
    """omega in Q(i) with omega^e = u, or None."""
    with mpmath.workdps(60):
        ang = (theta_u + mpmath.mpf(w_off.numerator) / w_off.denominator) / e * mpmath.pi
        re, im = mpmath.cos(ang), mpmath.sin(ang)
        cand = GaussRat(Fraction(str(re)).limit_denominator(10 ** 15),
                        Fraction(str(im)).limit_denominator(10 ** 15))
    if cand.abs2() != 1:
        return None
    if cand ** e != u:
        return None
    return cand


def prelim_normalize(M, t=None, t2=None, mode: str = "exact", bits: int = 256) -> PrelimResult:
    ctx = _backend(mode, bits)
    if ctx.mode == "ball":
        with ball_precision(bits):
            return _prelim(M, t, t2, ctx)
    return _prelim(M, t, t2, ctx)


def _prelim(M, t, t2, ctx) -> PrelimResult:
    Mq = _q_form(M)
    prof = profile(Mq)
    t, t2 = choose_triples(prof.lam, t, t2)
    D = Mq.trunc
    a, n, mu = t
    a2, n2, mu2 = t2
    kappa, kappa2 = prof.tensors[t], prof.tensors[t2]
    case = case_AB(t, t2)
    rho, absr = _moduli(kappa, kappa2, t, t2, case, ctx)
    chosen, phi_k = _select_phase(kappa, kappa2, t, t2, ctx)
    e = a - n
    A, m = a + n, mu - 1
    m2 = mu2 - 1
    lam_c = r_c = None
    if ctx.mode == "exact":
        with mpmath.workdps(120):
            theta_u = mpmath.mpf(1) / 2 - _mp(phi_k)
        for sigma, j, w_off, _ in chosen:
            u = TWO_I / (kappa * GaussRat(rho ** A * absr ** m * sigma ** (m % 2)))
            omega = _exact_omega(theta_u, w_off, e, u)
            if omega is not None:
                lam_c, r_c = omega * GaussRat(rho), GaussRat(absr * sigma)
                break
        if lam_c is None:
            raise NonRationalScaling("the phase of F_z(0) is not a Gaussian rational")
    else:
        sigma, j, w_off, _ = chosen[0]
        theta_u = real_interval(Fraction(1, 2)) - real_interval(phi_k)
        omega = Ball.polar(1, (theta_u + real_interval(w_off)) / e)
        lam_c = omega * Ball(rho)
        r_c = Ball(absr * sigma)
    c_eps = Ball.coerce(kappa2) * lam_c ** a2 * lam_c.conj() ** n2 * r_c ** m2 * MINUS_I \
        if ctx.mode == "ball" else kappa2 * lam_c ** a2 * lam_c.conj() ** n2 * r_c ** m2 * MINUS_I
    first = (Ball.coerce(kappa) if ctx.mode == "ball" else kappa) * lam_c ** a * lam_c.conj() ** n * r_c ** m
    if not ctx.vanishes(first - TWO_I):
        raise NormalFormError("internal: leading coefficient not normalized")
    c_squared = c_eps.abs2()
    if ctx.mode == "exact":
        c_squared = Fraction(c_squared)
        if case == Case.B and c_squared != 4:
            raise NormalFormError("internal: c is not 2 in Case B")

    # psi with q_{alpha,mu}(chi) = kappa psi(chi)^n
    Mb = QForm(ctx.lift(Mq.q))
    qa = coefficient_series(Mb, a, mu)
    if qa.trunc < n:
        raise InsufficientTruncation(f"q_{(a, mu)} is known only to chi^{qa.trunc}")
    inv_k = qa.coeff((n,)).inverse()
    shifted = {(j - n,): c * inv_k for (j,), c in qa.items() if j > n}
    one = qa._zero.one_like()
    u_series = MultiSeries(("z",), {**shifted, (0,): one}, qa.trunc - n, zero=qa._zero)
    root = u_series.nth_root(n)
    psi = MultiSeries(("z",), {(j + 1,): c for (j,), c in root.items()}, D, zero=qa._zero)
    psibar_inv = psi.conj().invert_univariate()
    lin = MultiSeries(("z",), {(1,): lam_c}, D, zero=qa._zero)
    Fz = psibar_inv.substitute({"z": lin})
    F = Fz.embed(MAP_VARS)
    G = MultiSeries(MAP_VARS, {(0, 1): r_c}, D, zero=qa._zero)
    H1 = FormalMap(F, G)
    q1 = pullback(Mb, H1, validate=ctx.mode == "exact")
    check = coefficient_series(q1, a, mu)
    for (j,), c in check.items():
        target = TWO_I if j == n else GaussRat(0)
        if not ctx.vanishes(c - target):
            raise NormalFormError(f"internal: prelim left chi^{j} in q_{(a, mu)}")
    return PrelimResult(q1, H1, lam_c, r_c, c_squared, c_eps, case, t, t2)


# ---------------------------------------------------------------------------
# one induction step


def _zcap(s: MultiSeries, Z: int) -> MultiSeries:
    t = {k: c for k, c in s._t.items() if (k & 0xFFF) <= Z}
    return s._like(t, s.trunc)


def _cap_mul(a, b, Z, D=None):
    """Product capped at z-degree Z, exact to the degree the factors' valuations allow."""
    va, vb = a.valuation(), b.valuation()
    if isinstance(va, BeyondTruncation) or isinstance(vb, BeyondTruncation):
        d = min(a.trunc, b.trunc) if D is None else D
        return MultiSeries._raw(a.vars, {}, d, a._zero)
    d = min(a.trunc + vb, b.trunc + va)
    if D is not None:
        d = min(d, D)
    return _zcap(_mul(a, b, d), Z)


def _cap_pow(s, k, Z):
    result = MultiSeries._raw(s.vars, {0: s._zero.one_like()}, s.trunc, s._zero)
    base = s
    while k:
        if k & 1:
            result = _cap_mul(result, base, Z, s.trunc)
        k >>= 1
        if k:
            base = _cap_mul(base, base, Z, s.trunc)
    return result


def _shift(s: MultiSeries, exps) -> MultiSeries:
    """s times the monomial with exponents ``exps`` (no truncation change)."""
    from .series import pack, key_degree
    add = pack(exps)
    d = sum(exps)
    t = {k + add: c for k, c in s._t.items() if key_degree(k) + d <= s.trunc}
    return s._like(t, s.trunc)


@dataclass(frozen=True)
class Target:
    name: str
    exps: tuple
    kind: str          # "complex" or "eps"
    unknown: object    # index of the paired unknown (0, 1, a) or "s"

    @property
    def degree(self):
        return sum(self.exps)


def step_targets(t, t2, k: int, D: int):
    a, n, mu = t
    a2, n2, mu2 = t2
    ap, np_, mp = side_triple(t, t2)
    out = [Target("normalform2a", (ap - 1, np_, mp + k), "complex", 0),
           Target("normalform2", (a, n, mu + k), "complex", 1)]
    j = 2
    while a + n + j - 1 + mu + k <= D:
        out.append(Target("normalform2", (a, n + j - 1, mu + k), "complex", j))
        j += 1
    out.append(Target("normalform4", (a2, n2, mu2 + k), "eps", "s"))
    return [x for x in out if x.degree <= D]


@dataclass(frozen=True)
class StepRecord:
    k: int
    exceptional: bool
    pivot: bool                 # the (a_k, b_k, s_{k+1}) system was solved in full
    determinant_formula: Fraction
    determinant_model: object   # determinant of the assembled square system, when square
    unknowns: dict              # {"x0": .., "x1": .., "x2": .., "s": ..} as Taylor coefficients
    targets: tuple


class _Slopes:
    """Target coefficients of the first-order change of Q under one step."""

    def __init__(self, Qp: MultiSeries, k: int, Zc: int):
        self.k = k
        D = Qp.trunc
        Q = _zcap(Qp, Zc)
        self.Q = Q
        self.Qz = _zcap(_zcap(Qp, Zc + 1).derivative("z"), Zc)
        self.Qchi = _zcap(Qp.derivative("zb"), Zc)
        self.Qtau = _zcap(Qp.derivative("tau"), Zc)
        Qk = _cap_pow(Q, k, Zc)
        self.QzQk = _cap_mul(self.Qz, Qk, Zc, D)
        self.Qk1 = _cap_mul(Qk, Q, Zc, D)
        chi0 = Qp.coeff_extract({"zb": 1}).embed(Q_VARS)           # q_{.,chi^1}(z, tau)
        chi0bar = Qp.coeff_extract({"zb": 1}).conj().embed(Q_VARS, {"z": "zb"})
        self.QtauC = _cap_mul(self.Qtau, chi0bar, Zc, D)
        parts = {j: _zcap(p, Zc) for j, p in split_by(_zcap(chi0, Zc), "tau").items()}
        acc = MultiSeries._raw(Q_VARS, {}, chi0.trunc, Qp._zero)
        if parts:
            for j in range(max(parts), -1, -1):
                if j != max(parts):
                    acc = _cap_mul(acc, Q, Zc, chi0.trunc)
                if j in parts:
                    acc = acc + parts[j]
        self.chi0Qk = _cap_mul(acc, Qk, Zc, D)

    @staticmethod
    def _at(s, exps, shift=(0, 0, 0)):
        e = tuple(x - y for x, y in zip(exps, shift))
        if min(e) < 0:
            return s._zero
        return s.coeff(e)

    def direction(self, unknown, d, exps):
        """Coefficient at ``exps`` of dQ for unknown x_a = d (complex d) or s = 1."""
        k = self.k
        if unknown == "s":
            return self._at(self.Qtau, exps, (0, 0, k + 1)) - self._at(self.Qk1, exps)
        a = unknown
        db = d.conj()
        if a >= 1:
            return d * self._at(self.QzQk, exps, (a, 0, 0)) + db * self._at(self.Qchi, exps, (0, a, k))
        return (d * self._at(self.QzQk, exps) + db * self._at(self.Qchi, exps, (0, 0, k))
                + d * self._at(self.QtauC, exps, (0, 0, k)) - db * self._at(self.chi0Qk, exps))


def _rows_for(target, value, eps_conj):
    """Real equations contributed by a complex coefficient ``value`` at ``target``."""
    if target.kind == "complex":
        return [value.re, value.im]
    return [(eps_conj * value).im]


def _solve_real(matrix, rhs, ctx):
    """Solve matrix u = rhs; free columns are set to zero.  Returns (u, determinant or None)."""
    rows = [list(r) + [b] for r, b in zip(matrix, rhs)]
    ncols = len(matrix[0]) if matrix else 0
    square = len(rows) == ncols
    det = ctx.real(1)
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(rows)):
            if ctx.pivot_ok(rows[i][c]):
                piv = i
                break
        if piv is None:
            if ctx.mode == "ball" and any(not (0 in rows[i][c] and rows[i][c].a == 0 and rows[i][c].b == 0)
                                          for i in range(r, len(rows))):
                raise Inconclusive("pivot cannot be certified nonzero")
            det = ctx.real(0)
            continue
        if piv != r:
            rows[r], rows[piv] = rows[piv], rows[r]
            det = -det
        det = det * rows[r][c]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not (ctx.mode == "exact" and rows[i][c] == 0):
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append((r, c))
        r += 1
        if r == len(rows):
            break
    for i in range(r, len(rows)):
        if not ctx.zero_real(rows[i][-1]):
            raise SingularStep("inconsistent step equations")
    u = [ctx.real(0)] * ncols
    for i, c in pivots:
        u[c] = rows[i][-1]
    return u, (det if square else None)


_CORRECTION_ROUNDS = 4


def _step_system(Qc, slopes, targets, unknowns, s_value, exceptional, eps_conj, ctx):
    one, i_unit = ctx.cplx(1), ctx.cplx(0, 1)
    matrix, rhs = [], []
    for x in targets:
        base = Qc.q.coeff(x.exps)
        if exceptional:
            base = base + slopes.direction("s", one, x.exps) * ctx.cplx(s_value)
        cols = []
        for name, d in unknowns:
            dd = one if d == 1 else i_unit
            cols.append(_rows_for(x, slopes.direction(name, dd, x.exps), eps_conj))
        base_rows = _rows_for(x, base, eps_conj)
        for ri in range(len(base_rows)):
            matrix.append([col[ri] for col in cols])
            rhs.append(-base_rows[ri])
    return matrix, rhs


def _collect(unknowns, u, ctx):
    values = {}
    for (name, d), val in zip(unknowns, u):
        if name == "s":
            values["s"] = val
            continue
        cur = values.get(name, ctx.cplx(0))
        values[name] = cur + (ctx.cplx(val) if d == 1 else ctx.cplx(0, val))
    return values


def _step_map(values, k, Qc, D, zero, ctx):
    F_terms = {(1, 0): zero.one_like()}
    for name, v in values.items():
        if name != "s" and not v.is_zero():
            F_terms[(name, k)] = v
    F = MultiSeries(MAP_VARS, F_terms, D, zero=zero)
    s_val = values["s"]
    taylor = {1: zero.one_like()}
    if not (s_val.a == 0 and s_val.b == 0 if ctx.mode == "ball" else s_val == 0):
        taylor[k + 1] = ctx.cplx(s_val)
    return transversal_from_taylor(F, Qc, taylor, D)


def _run_step(Qc: QForm, k: int, t, t2, D: int, c_eps, s_fixed, w0: int, ctx):
    targets = step_targets(t, t2, k, D)
    K = exceptional_steps(t, t2)
    exceptional = k in K
    if exceptional:
        targets = [x for x in targets if x.kind != "eps"]
    if not targets:
        return None
    names = {x.unknown for x in targets}
    unknowns = []                           # (name, direction)
    if 0 in names:
        unknowns += [(0, 1), (0, 1j)]
    if 1 in names or "s" in names:
        unknowns += [(1, 1), (1, 1j)]
    for x in targets:
        if isinstance(x.unknown, int) and x.unknown >= 2:
            unknowns += [(x.unknown, 1), (x.unknown, 1j)]
    solve_s = ("s" in names or 1 in names) and not exceptional
    if solve_s:
        unknowns.append(("s", 1))
    Zc = max(x.exps[0] for x in targets)
    eps_conj = c_eps.conj()
    one = ctx.cplx(1)
    s_value = ctx.real(s_fixed) if exceptional else ctx.real(0)
    zero = Qc.q._zero
    start = max(1, w0 + k - 2)
    # The change of Q is linear in the unknowns only to first order: squares of the
    # F_{w^k} unknown can reach targets of the same degree.  Those terms involve
    # unknowns already fixed by earlier targets, so re-solving the residual with the
    # linear system converges in a few rounds.
    Qn, E, total, det = Qc, None, None, None
    for _ in range(_CORRECTION_ROUNDS):
        slopes = _Slopes(Qn.q, k, Zc)
        fixed = s_value if exceptional and E is None else ctx.real(0)
        matrix, rhs = _step_system(Qn, slopes, targets, unknowns, fixed, exceptional, eps_conj, ctx)
        u, det_round = _solve_real(matrix, rhs, ctx)
        det = det_round if det is None else det
        values = _collect(unknowns, u, ctx)
        if exceptional:
            values["s"] = fixed
        values.setdefault("s", ctx.real(0))
        total = values if total is None else {n_: total.get(n_, ctx.real(0) if n_ == "s" else ctx.cplx(0)) + v
                                               for n_, v in values.items()}
        Ei = _step_map(values, k, Qn, D, zero, ctx)
        Qn = pullback(Qn, Ei, validate=False, initial=Qn, gain=k, start=start)
        E = Ei if E is None else E.compose(Ei)
        if all(ctx.zero_real(r) for x in targets for r in _rows_for(x, Qn.q.coeff(x.exps), eps_conj)):
            break
    for x in targets:
        value = Qn.q.coeff(x.exps)
        bad = [r for r in _rows_for(x, value, eps_conj) if not ctx.zero_real(r)]
        if bad:
            raise SingularStep(f"step {k}: target {x.name} at {x.exps} not cleared")
    values = total
    pivot = solve_s and any(x.kind == "eps" for x in targets) and any(x.unknown == 1 for x in targets)
    rec = StepRecord(k, exceptional, pivot, step_determinant(t, t2, k), det,
                     {str(n_): v for n_, v in values.items()}, tuple(x.exps for x in targets))
    if ctx.mode == "exact" and pivot and len(matrix) == len(unknowns):
        if (det == 0) != (rec.determinant_formula == 0):
            raise SingularStep(f"step {k}: determinant of the assembled system disagrees with D_k")
    return E, Qn, rec


# ---------------------------------------------------------------------------
# the full normal form


@dataclass(frozen=True)
class NormalizationResult:
    q_nf: QForm
    map: FormalMap            # normal-form coordinates -> original coordinates
    prelim_map: FormalMap
    stage_map: FormalMap      # normal-form coordinates -> prelim coordinates
    fz0: object
    gw0: object
    c_squared: object
    c_eps: object
    case: str
    t: tuple
    t2: tuple
    lam: int | None
    K: frozenset
    free_params: tuple
    mode: str
    steps: tuple
    certified_degree: int
    trunc: int


def _lowest_degree(q: MultiSeries) -> int:
    return min((sum(e) for e, c in q.items() if e != (0, 0, 1)), default=q.trunc + 1)


def certified_degree(Q: QForm, t, t2) -> int:
    """Degree up to which q_nf does not depend on unknowns whose targets lie above D."""
    tp = side_triple(t, t2)
    w0 = _lowest_degree(Q.q)
    reach = max(sum(t), sum(t2), sum(tp)) + 1
    return max(0, Q.trunc - max(0, reach - w0))


def _choice_map(choice, D, ctx):
    if choice is None:
        return None
    if isinstance(choice, TorusElement):
        gamma = choice.gamma.to_gauss()
        return FormalMap.linear(gamma, choice.delta, D) if ctx.mode == "exact" else \
            FormalMap(MultiSeries(MAP_VARS, {(1, 0): Ball.coerce(gamma)}, D, zero=Ball(0)),
                      MultiSeries(MAP_VARS, {(0, 1): Ball(choice.delta)}, D, zero=Ball(0)))
    lam, r = choice
    return FormalMap.linear(lam, r, D)


def normalize(M, D: int | None = None, choice=None, free=0, t=None, t2=None,
              mode: str = "exact", bits: int = 256) -> NormalizationResult:
    """Normal form of M to degree D.

    ``choice`` is a TorusElement or an exact pair (F_z(0), G_w(0)) in the
    intersection of the two C groups, applied after the preliminary step.
    ``free`` is the value of Re G_{w^{lam+1}}(0) for the step-lam map when the
    exceptional step exists.
    """
    ctx = _backend(mode, bits)
    if ctx.mode == "ball":
        with ball_precision(bits):
            return _normalize(M, D, choice, free, t, t2, ctx)
    return _normalize(M, D, choice, free, t, t2, ctx)


def _as_fraction(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(int(x.numerator), int(x.denominator))


def _normalize(M, D, choice, free, t, t2, ctx):
    Mq = _q_form(M)
    if D is not None:
        if D > Mq.trunc:
            raise InsufficientTruncation(f"input known to degree {Mq.trunc} < {D}")
        Mq = QForm(Mq.q.truncate(D))
    D = Mq.trunc
    pre = _prelim(Mq, t, t2, ctx)
    t, t2 = pre.t, pre.t2
    a, n, mu = t
    if choice is not None:
        _check_choice(choice, t, t2)
    Qc = pre.q1
    stage = FormalMap.identity(D) if ctx.mode == "exact" else _choice_map(TorusElement(AngleRational(0), 1), D, ctx)
    L = _choice_map(choice, D, ctx)
    if L is not None:
        Qc = pullback(Qc, L, validate=ctx.mode == "exact")
        stage = L
    K = exceptional_steps(t, t2)
    lam = lambda_index(t, t2)
    free_params = ()
    s_fixed = Fraction(0)
    if K:
        (lam_k,) = K
        free = _as_fraction(free)
        free_params = ((f"s_{lam_k + 1}", free),)
        s_fixed = free / factorial(lam_k + 1)
    w0 = _lowest_degree(Qc.q)
    tp = side_triple(t, t2)
    bases = [sum(tp) - 1, sum(t), sum(t2)]
    k_max = D - min(bases)
    steps = []
    for k in range(1, k_max + 1):
        out = _run_step(Qc, k, t, t2, D, pre.c_eps, s_fixed, w0, ctx)
        if out is None:
            continue
        E, Qc, rec = out
        stage = stage.compose(E)
        steps.append(rec)
    total = pre.map.compose(stage)
    return NormalizationResult(
        q_nf=Qc, map=total, prelim_map=pre.map, stage_map=stage,
        fz0=total.F.coeff((1, 0)), gw0=total.G.coeff((0, 1)),
        c_squared=pre.c_squared, c_eps=pre.c_eps, case=pre.case, t=t, t2=t2,
        lam=lam, K=K, free_params=free_params, mode=ctx.mode if ctx.mode == "exact" else f"ball({ctx.bits})",
        steps=tuple(steps), certified_degree=certified_degree(Qc, t, t2), trunc=D)


def _check_choice(choice, t, t2):
    from .symmetry import membership_C
    if isinstance(choice, TorusElement):
        ok = all(choice.satisfies(u[0] - u[1], u[2] - 1) for u in (t, t2))
    else:
        lam, r = choice
        ok = all(membership_C(lam, r, *u) for u in (t, t2))
    if not ok:
        raise ValueError("choice is not in the intersection of the two C groups")


# ---------------------------------------------------------------------------
# checking the conditions


@dataclass(frozen=True)
class NormalFormVerdict:
    kind: str                  # Holds | Fails | NotApplicable | Inconclusive
    condition: str | None = None
    degree: int | None = None
    detail: str = ""

    def __bool__(self):
        return self.kind == "Holds"


def _eps_is_minimal(c_eps, t, t2):
    """Is arg(eps) minimal over its orbit under D(n - alpha, mu - 1)?"""
    a, n, mu = t
    a2, n2, mu2 = t2
    if isinstance(c_eps, Ball):
        from mpmath import iv
        base = iv.atan2(c_eps.im, c_eps.re) / iv.pi
        ctx = _Balls(iv.prec)
    else:
        base = _arg_over_pi(c_eps, _Exact())
        ctx = _Exact()
    v0 = _wrapped(base, Fraction(0), ctx)
    for g in group_D(n - a, mu - 1).elements():
        off = (g.gamma ** (a2 - n2)).turns + (1 if (g.delta == -1 and (mu2 - 1) % 2) else 0)
        off = _frac_mod2(Fraction(off))
        if off == 0:
            continue
        v = _wrapped(base, off, ctx)
        if ctx.mode == "exact":
            if v < v0:
                return False
        else:
            if v.b < v0.a:
                return False
            if not v.a > v0.b:
                raise Inconclusive("eps orbit comparison undecided")
    return True


def is_normal_form(Q, t=None, t2=None, D: int | None = None) -> NormalFormVerdict:
    Qf = full = _q_form(Q)
    try:
        prof = profile(Qf)
        t, t2 = choose_triples(prof.lam, t, t2)
        tp = side_triple(t, t2)
    except HypothesesNotMet as exc:
        return NormalFormVerdict("NotApplicable", detail=str(exc))
    # the triples come from the whole input; the conditions are checked up to D
    if D is not None:
        Qf = QForm(Qf.q.truncate(min(D, Qf.trunc)))
    q = Qf.q
    D = q.trunc
    a, n, mu = t
    a2, n2, mu2 = t2
    vanish = (lambda c: c.contains_zero())
    fails = []
    for (j,), c in coefficient_series(Qf, a, mu).items():
        target = TWO_I if j == n else GaussRat(0)
        if not vanish(c - target):
            fails.append((a + mu + j, "normalform1", f"q_{(a, mu)} has chi^{j} coefficient {c}"))
    if not any(e == (a, n, mu) for e, _ in full.q.items()):
        fails.append((a + mu + n, "normalform1", "missing 2i chi^n"))
    kappa2 = full.q.coeff((a2, n2, mu2))
    c_eps = kappa2 * MINUS_I
    if case_AB(t, t2) == Case.B and not (c_eps.abs2() - 4 == 0 if isinstance(c_eps, GaussRat) else 4 in c_eps.abs2()):
        fails.append((sum(t2), "normalform1", "second leading coefficient does not have modulus 2"))
    try:
        if not _eps_is_minimal(c_eps, t, t2):
            fails.append((sum(t2), "normalform1", "arg eps is not minimal in its orbit"))
    except Inconclusive as exc:
        return NormalFormVerdict("Inconclusive", "normalform1", sum(t2), exc.reason)
    K = exceptional_steps(t, t2)
    eps_conj = c_eps.conj()
    for e, c in q.items():
        z, chi, tau = e
        if z == a and tau > mu and chi >= n and not vanish(c):
            fails.append((sum(e), "normalform2", f"q_{(a, tau)} has chi^{chi}"))
        if z == tp[0] - 1 and chi == tp[1] and tau > tp[2] and not vanish(c):
            fails.append((sum(e), "normalform2a", f"chi^{chi} in q_{(z, tau)}"))
        if z == a2 and chi == n2 and tau > mu2 and (tau - mu2) not in K:
            val = (eps_conj * c).im
            ok = (val == 0) if isinstance(c, GaussRat) else (0 in val)
            if not ok:
                fails.append((sum(e), "normalform4", f"Im eps^-1 q_{(a2, tau)}^({n2}) != 0"))
    if not fails:
        return NormalFormVerdict("Holds", degree=D)
    deg, cond, detail = min(fails, key=lambda f: (f[0], f[1]))
    return NormalFormVerdict("Fails", cond, deg, detail)


# ---------------------------------------------------------------------------
# equivalence


@dataclass(frozen=True)
class EquivalenceResult:
    kind: str                         # Equivalent | Distinct | Inconclusive
    element: TorusElement | None = None
    free: Fraction | None = None
    map: FormalMap | None = None
    checked_to: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.kind == "Equivalent"


def _factor(g: TorusElement, exps) -> AngleRational:
    z, chi, tau = exps
    ang = g.gamma ** (z - chi)
    if g.delta == -1 and (tau - 1) % 2:
        ang = ang * AngleRational(1)
    return ang


def _act_matches(q1: MultiSeries, q2: MultiSeries, g: TorusElement, d: int):
    """Lowest degree <= d where q1 differs from the pullback of q2 by (gamma z, delta w)."""
    worst = None
    keys = {e for e, _ in q1.items()} | {e for e, _ in q2.items()}
    for e in keys:
        if sum(e) > d:
            continue
        c1, c2 = q1.coeff(e), q2.coeff(e)
        ang = _factor(g, e)
        if 2 % ang.den == 0:
            ok = (c1 - c2 * ang.to_gauss()).is_zero()
        else:
            ok = c1.is_zero() and c2.is_zero()
        if not ok and (worst is None or sum(e) < worst):
            worst = sum(e)
    return worst


def _residual_elements(t, t2):
    a, n, mu = t
    a2, n2, mu2 = t2
    return [g for g in group_D(n - a, mu - 1).elements() if g.satisfies(n2 - a2, mu2 - 1)]


def equivalence(M, M2, D: int | None = None, t=None, t2=None) -> EquivalenceResult:
    """Decide formal equivalence of M and M2 (exact mode) by comparing normal forms."""
    A, B = _q_form(M), _q_form(M2)
    D = min(A.trunc, B.trunc) if D is None else min(D, A.trunc, B.trunc)
    A, B = QForm(A.q.truncate(D)), QForm(B.q.truncate(D))
    pa, pb = profile(A), profile(B)
    if pa.lam != pb.lam:
        return EquivalenceResult("Distinct", checked_to=D,
                                 reason=f"invariant triples differ: {sorted(pa.lam)} vs {sorted(pb.lam)}")
    try:
        na = normalize(A, D, t=t, t2=t2)
        nb = normalize(B, D, t=na.t, t2=na.t2)
    except NonRationalScaling as exc:
        return EquivalenceResult("Inconclusive", checked_to=D, reason=f"exact scaling unavailable: {exc}")
    except HypothesesNotMet as exc:
        return EquivalenceResult("Inconclusive", checked_to=D, reason=str(exc))
    if na.case == Case.A and na.c_squared != nb.c_squared:
        return EquivalenceResult("Distinct", checked_to=D,
                                 reason=f"c^2 differs: {na.c_squared} vs {nb.c_squared}")
    d = min(na.certified_degree, nb.certified_degree)
    qa = na.q_nf.q
    elements = _residual_elements(na.t, na.t2)
    family = None
    if nb.K:
        nb1 = normalize(B, D, t=na.t, t2=na.t2, free=1)
        family = (nb.q_nf.q, nb1.q_nf.q)
    first_diff = None
    for g in elements:
        if family is None:
            bad = _act_matches(qa, nb.q_nf.q, g, d)
            if bad is None:
                return _equivalent(A, B, na, nb, g, None, d)
            first_diff = bad if first_diff is None else max(first_diff, bad)
            continue
        s = _solve_free(qa, family, g, d)
        if s is None:
            continue
        nbs = normalize(B, D, t=na.t, t2=na.t2, free=s)
        bad = _act_matches(qa, nbs.q_nf.q, g, d)
        if bad is None:
            return _equivalent(A, B, na, nbs, g, s, d)
        first_diff = bad if first_diff is None else max(first_diff, bad)
    if na.case == Case.A:
        return EquivalenceResult("Inconclusive", checked_to=d,
                                 reason="Case A: residual family is continuous and no finite element matched")
    reason = "no residual element matches the normal forms"
    if first_diff is not None:
        reason += f" (closest match fails at degree {first_diff})"
    return EquivalenceResult("Distinct", checked_to=d, reason=reason)


def _solve_free(qa, family, g, d):
    """The free value s making the family member match qa at the first degree where s enters."""
    q0, q1 = family
    delta = q1 - q0
    entering = min((sum(e) for e, c in delta.items() if sum(e) <= d), default=None)
    if entering is None:
        return Fraction(0)
    if _act_matches(qa, q0, g, entering - 1) is not None:
        return None
    s = None
    for e, dc in delta.items():
        if sum(e) != entering:
            continue
        ang = _factor(g, e)
        if 2 % ang.den:
            return None
        zeta = ang.to_gauss()
        # qa = zeta (q0 + s dc)
        rhs = qa.coeff(e) - zeta * q0.coeff(e)
        val = rhs / (zeta * dc)
        if val.im != 0:
            return None
        if s is None:
            s = _as_fraction(val.re)
        elif s != _as_fraction(val.re):
            return None
    return s


def _equivalent(A, B, na, nb, g, s, d):
    D = A.trunc
    L = FormalMap.linear(g.gamma.to_gauss(), g.delta, D) if 2 % g.gamma.den == 0 else None
    H = None
    if L is not None:
        H = nb.map.compose(L).compose(na.map.inverse()).truncate(d)
    return EquivalenceResult("Equivalent", g, s, H, d)
