"""Hypersurface presentations in normal coordinates and the action of formal maps.

Two presentations are used.  ``PhiForm`` holds phi(z, zb, s) with
Im w = phi(z, conj z, Re w); ``QForm`` holds Q(z, zb, tau) with
w = Q(z, conj z, conj w).  Maps H = (F, G) are series in (z, w).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from .series import (
    GaussRat,
    MultiSeries,
    SeriesError,
    first_difference,
    solve_fixed_point,
    unpack,
)

PHI_VARS = ("z", "zb", "s")
Q_VARS = ("z", "zb", "tau")
MAP_VARS = ("z", "w")
SWAP = {"z": "zb", "zb": "z"}

TWO_I = GaussRat(0, 2)


class HypersurfaceError(SeriesError):
    pass


class RealityViolation(HypersurfaceError):
    def __init__(self, index, partner):
        super().__init__(f"coefficient at {index} is not the conjugate of the one at {partner}")
        self.index = index
        self.partner = partner


class NormalizationViolation(HypersurfaceError):
    def __init__(self, index):
        super().__init__(f"monomial {index} lacks a z or zb factor")
        self.index = index


class NormalityViolation(HypersurfaceError):
    def __init__(self, identity: str, degree: int):
        super().__init__(f"normality identity {identity!r} fails at degree {degree}")
        self.identity = identity
        self.degree = degree


class NotSolvable(HypersurfaceError):
    pass


class Inconsistent(HypersurfaceError):
    pass


@dataclass(frozen=True)
class PhiForm:
    phi: MultiSeries

    @property
    def trunc(self) -> int:
        return self.phi.trunc


@dataclass(frozen=True)
class QForm:
    q: MultiSeries

    @property
    def trunc(self) -> int:
        return self.q.trunc


@dataclass(frozen=True)
class FormalMap:
    F: MultiSeries
    G: MultiSeries

    def __post_init__(self):
        for comp in (self.F, self.G):
            if comp.vars != MAP_VARS:
                raise ValueError(f"map components must be series in {MAP_VARS}")
            if not comp.constant_term().is_zero():
                raise ValueError("map must fix the origin")
        if self.jacobian_det().is_zero():
            raise ValueError("linear part is not invertible")

    @property
    def trunc(self) -> int:
        return min(self.F.trunc, self.G.trunc)

    def jacobian_det(self):
        fz, fw = self.F.coeff((1, 0)), self.F.coeff((0, 1))
        gz, gw = self.G.coeff((1, 0)), self.G.coeff((0, 1))
        return fz * gw - fw * gz

    @classmethod
    def linear(cls, c, r, trunc: int) -> "FormalMap":
        """The map (c z, r w)."""
        F = MultiSeries(MAP_VARS, {(1, 0): GaussRat.coerce(c)}, trunc)
        G = MultiSeries(MAP_VARS, {(0, 1): GaussRat.coerce(r)}, trunc)
        return cls(F, G)

    @classmethod
    def identity(cls, trunc: int) -> "FormalMap":
        return cls.linear(1, 1, trunc)

    def compose(self, inner: "FormalMap") -> "FormalMap":
        """self o inner, i.e. (z, w) -> self(inner(z, w))."""
        b = {"z": inner.F, "w": inner.G}
        return FormalMap(self.F.substitute(b), self.G.substitute(b))

    def inverse(self) -> "FormalMap":
        """Formal inverse, by iterating P = L^{-1}(id - N(P)) for H = L + N."""
        D = self.trunc
        fz, fw = self.F.coeff((1, 0)), self.F.coeff((0, 1))
        gz, gw = self.G.coeff((1, 0)), self.G.coeff((0, 1))
        det_inv = (fz * gw - fw * gz).inverse()
        a, b, c, d = gw * det_inv, -fw * det_inv, -gz * det_inv, fz * det_inv
        zero = self.F._zero
        z = MultiSeries._raw(MAP_VARS, {}, D, zero) + MultiSeries(MAP_VARS, {(1, 0): 1}, D)
        w = MultiSeries._raw(MAP_VARS, {}, D, zero) + MultiSeries(MAP_VARS, {(0, 1): 1}, D)
        lin = {(1, 0), (0, 1)}
        NF = MultiSeries(MAP_VARS, {e: v for e, v in self.F.items() if e not in lin}, D, zero=zero)
        NG = MultiSeries(MAP_VARS, {e: v for e, v in self.G.items() if e not in lin}, D, zero=zero)
        f, g = z.scale(a) + w.scale(b), z.scale(c) + w.scale(d)
        for _ in range(D + 1):
            bind = {"z": f, "w": g}
            u, v = z - NF.substitute(bind), w - NG.substitute(bind)
            f, g = u.scale(a) + v.scale(b), u.scale(c) + v.scale(d)
        return FormalMap(f, g)

    def jet(self, k: int) -> "FormalMap":
        return FormalMap(self.F.truncate(k), self.G.truncate(k))

    def truncate(self, k: int) -> "FormalMap":
        return self.jet(k)


# ---------------------------------------------------------------------------
# validation


def validate_phi(phi: MultiSeries) -> PhiForm:
    if phi.vars != PHI_VARS:
        raise ValueError(f"phi must be a series in {PHI_VARS}")
    for e, c in phi.items():
        if e[0] == 0 or e[1] == 0:
            raise NormalizationViolation(e)
    for e, c in phi.items():
        partner = (e[1], e[0], e[2])
        if not (phi.coeff(partner) - c.conj()).is_zero():
            raise RealityViolation(e, partner)
    return PhiForm(phi)


def _boundary_check(q: MultiSeries):
    for e, c in q.items():
        if e[0] == 0 or e[1] == 0:
            if e == (0, 0, 1) and (c - GaussRat(1)).is_zero():
                continue
            which = "Q(z,0,tau)=tau" if e[1] == 0 else "Q(0,zb,tau)=tau"
            raise NormalityViolation(which, sum(e))
    if q.trunc >= 1 and not (q.coeff((0, 0, 1)) - GaussRat(1)).is_zero():
        raise NormalityViolation("Q(z,0,tau)=tau", 1)


def normality_defect(q: MultiSeries):
    """Lowest degree where Q(z, zb, Qbar(zb, z, tau)) differs from tau, or None."""
    qbar = q.conj_swap(SWAP)
    composed = compose_in_tau(q, qbar)
    tau = MultiSeries.variable(Q_VARS, "tau", composed.trunc)
    return first_difference(composed, tau, composed.trunc)


def validate_q(q: MultiSeries) -> QForm:
    if q.vars != Q_VARS:
        raise ValueError(f"Q must be a series in {Q_VARS}")
    _boundary_check(q)
    bad = normality_defect(q)
    if bad is not None:
        raise NormalityViolation("Q(z,zb,Qbar(zb,z,tau))=tau", bad)
    return QForm(q)


# ---------------------------------------------------------------------------
# helpers


def split_by(series: MultiSeries, var: str) -> dict:
    """{k: coefficient series of var^k} keeping the other variables in place."""
    i = series.vars.index(var)
    n = len(series.vars)
    parts = {}
    for e, c in series.items():
        rest = list(e)
        rest[i] = 0
        parts.setdefault(e[i], {})[tuple(rest)] = c
    return {k: MultiSeries(series.vars, t, series.trunc, zero=series._zero) for k, t in parts.items()}


def horner(parts: dict, x: MultiSeries, trunc: int) -> MultiSeries:
    """Sum of parts[k] * x**k, all series sharing x's variables."""
    if not parts:
        return MultiSeries.zero(x.vars, trunc, x._zero)
    top = max(parts)
    acc = MultiSeries.zero(x.vars, trunc, x._zero)
    for k in range(top, -1, -1):
        if k != top:
            acc = acc.mul_to(x, trunc)
        if k in parts:
            acc = acc + parts[k].truncate(trunc)
    return acc


def compose_in_tau(q: MultiSeries, inner: MultiSeries) -> MultiSeries:
    """q with tau replaced by ``inner`` (both over Q_VARS)."""
    d = min(q.trunc, inner.trunc)
    return horner(split_by(q, "tau"), inner, d)


def map_bar(component: MultiSeries) -> MultiSeries:
    """conj(component)(zb, tau) as a series over Q_VARS."""
    return component.conj().embed(Q_VARS, {"z": "zb", "w": "tau"})


def _z_tau_part(part: MultiSeries) -> MultiSeries:
    return part.embed(Q_VARS, {"w": "tau"})


def substitute_w(component: MultiSeries, w_value: MultiSeries, trunc: int) -> MultiSeries:
    """component(z, w_value) for a map component in (z, w); result over Q_VARS."""
    parts = {k: _z_tau_part(p) for k, p in split_by(component, "w").items()}
    return horner(parts, w_value, trunc)


def q_coefficient(q: MultiSeries, alpha: int, mu: int) -> MultiSeries:
    """q_{alpha,mu}(zb): the coefficient of z^alpha tau^mu."""
    return q.coeff_extract({"z": alpha, "tau": mu})


# ---------------------------------------------------------------------------
# conversions


def phi_to_q(M: PhiForm) -> QForm:
    phi = M.phi
    D = phi.trunc
    tau = MultiSeries.variable(Q_VARS, "tau", D)
    half = GaussRat(Fraction(1, 2))
    phi_parts = {k: p.embed(Q_VARS, {"s": "tau"}) for k, p in split_by(phi, "s").items()}

    def builder(q):
        d = q.trunc
        s_value = (q + tau.truncate(d)).scale(half)
        return tau.truncate(d) + horner(phi_parts, s_value, d).scale(TWO_I)

    q = solve_fixed_point(builder, 2, D, tau)
    return QForm(q)


def q_to_phi(M: QForm) -> PhiForm:
    q = M.q
    D = q.trunc
    s = MultiSeries.variable(PHI_VARS, "s", D)
    parts = {k: p.embed(PHI_VARS, {"tau": "s"}) for k, p in split_by(q, "tau").items()}
    minus_i = GaussRat(0, -1)
    inv_two_i = TWO_I.inverse()

    def builder(t):
        d = t.trunc
        arg = s.truncate(d) + t.scale(minus_i)
        return (horner(parts, arg, d) - arg).scale(inv_two_i)

    t = solve_fixed_point(builder, 2, D, MultiSeries.zero(PHI_VARS, D))
    return PhiForm(t)


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class MapVerdict:
    holds: bool
    checked_to: int
    failing_degree: int | None = None

    def __bool__(self):
        return self.holds


def check_map(M: QForm, M_target: QForm, H: FormalMap) -> MapVerdict:
    """Does H send M into M_target?  Checked in (z, zb, tau) to the common truncation."""
    D = min(M.trunc, M_target.trunc, H.trunc)
    q = M.q.truncate(D)
    lhs = substitute_w(H.G, q, D)
    F_on = substitute_w(H.F, q, D)
    rhs = M_target.q.truncate(D).substitute(
        {"z": F_on, "zb": map_bar(H.F).truncate(D), "tau": map_bar(H.G).truncate(D)}, Q_VARS)
    bad = first_difference(lhs, rhs, min(lhs.trunc, rhs.trunc))
    if bad is None:
        return MapVerdict(True, D)
    return MapVerdict(False, D, bad)


class _TargetCache:
    """Pieces of Q'(X, Fbar(zb,tau), Gbar(zb,tau)) that do not depend on X."""

    def __init__(self, q_target: MultiSeries, H: FormalMap, D: int):
        fbar = map_bar(H.F).truncate(D)
        gbar = map_bar(H.G).truncate(D)
        self.parts = {}
        for k, p in split_by(q_target.truncate(D), "z").items():
            self.parts[k] = p.substitute({"zb": fbar, "tau": gbar}, Q_VARS)

    def evaluate(self, x: MultiSeries, trunc: int) -> MultiSeries:
        return horner(self.parts, x, trunc)


def pullback(M_target: QForm, H: FormalMap, validate: bool = True,
             initial: QForm | None = None, gain: int = 1, start: int | None = None) -> QForm:
    """The hypersurface H^{-1}(M_target), solved for Q; checked to be in normal coordinates.

    ``initial``/``gain``/``start`` let a caller that knows H is close to the
    identity seed the iteration with a nearby answer.
    """
    D = min(M_target.trunc, H.trunc)
    g1 = H.G.coeff((0, 1))
    if g1.is_zero():
        raise ValueError("G_w(0) must be nonzero")
    inv_g1 = g1.inverse()
    cache = _TargetCache(M_target.q, H, D)
    F_parts = {k: _z_tau_part(p) for k, p in split_by(H.F, "w").items()}
    G_parts = {k: _z_tau_part(p) for k, p in split_by(H.G, "w").items()}

    if set(F_parts) <= {0} and H.G.truncate(D) == MultiSeries(MAP_VARS, {(0, 1): g1}, D):
        # F(z) free of w and G linear: Q is explicit
        x = F_parts.get(0, MultiSeries.zero(Q_VARS, D, M_target.q._zero)).truncate(D)
        q = cache.evaluate(x, D).scale(inv_g1)
    else:
        def builder(q):
            d = q.trunc
            x = horner(F_parts, q, d)
            g_of_q = horner(G_parts, q, d)
            return (cache.evaluate(x, d) - g_of_q + q.scale(g1)).scale(inv_g1)

        seed = MultiSeries.zero(Q_VARS, D, M_target.q._zero) if initial is None else initial.q
        q = solve_fixed_point(builder, gain, D, seed, start)
    if validate:
        return validate_q(q)
    return QForm(q)


def complete_transversal(F: MultiSeries, M_target: QForm, reals, trunc: int | None = None) -> FormalMap:
    """Build G so that (F, G) pulls M_target back to normal coordinates.

    ``reals[k-1]`` is Re G_{w^k}(0) (the k-th w-derivative at 0); missing
    entries count as zero.
    """
    reals = list(reals)
    taylor = {k: Fraction(reals[k - 1]) / factorial(k) for k in range(1, len(reals) + 1)}
    return transversal_from_taylor(F, M_target, taylor, trunc)


def transversal_from_taylor(F: MultiSeries, M_target: QForm, taylor: dict, trunc: int | None = None) -> FormalMap:
    """As complete_transversal, with Re G(0, w) given by its Taylor coefficients {k: value}."""
    D = min(F.trunc, M_target.trunc) if trunc is None else min(trunc, F.trunc, M_target.trunc)
    if not F.constant_term().is_zero() or F.coeff((1, 0)).is_zero():
        raise ValueError("F must vanish at 0 with F_z(0) != 0")
    W = ("w",)
    f0 = F.coeff_extract({"z": 0}).truncate(D)
    f0bar = f0.conj()
    q = M_target.q.truncate(D)
    zero = q._zero
    re_part = MultiSeries(W, {(k,): v if hasattr(v, "is_zero") else zero.rational_like(v)
                              for k, v in taylor.items() if 1 <= k <= D}, D, zero=zero)
    inv_two_i = TWO_I.inverse()

    def h_of(g):
        d = g.trunc
        gbar = g.conj()
        val = q.substitute({"z": f0.truncate(d), "zb": f0bar.truncate(d), "tau": gbar}, W)
        return val - gbar

    def builder(g):
        h = h_of(g)
        im = h.scale(inv_two_i)
        return re_part.truncate(g.trunc) + im.map_coefficients(lambda c: c.real_part().times_i())

    g = solve_fixed_point(builder, 1, D, re_part)
    h = h_of(g)
    for e, c in h.items():
        if not c.real_part().contains_zero():
            raise Inconsistent(f"reality constraint fails at w^{e[0]}")
    gbar = g.conj().embed(MAP_VARS)
    f0bar_zw = f0bar.embed(MAP_VARS)
    G = q.substitute({"z": F.truncate(D), "zb": f0bar_zw, "tau": gbar}, MAP_VARS)
    return FormalMap(F.truncate(D), G)


# ---------------------------------------------------------------------------
# implicit defining equations


def solve_defining(rhs: MultiSeries, ell, trunc: int | None = None) -> PhiForm:
    """Solve ell * lam = rhs(z, zb, s, lam) for lam = phi(z, zb, s)."""
    if rhs.vars != PHI_VARS + ("lam",):
        raise ValueError("relation must be a series in (z, zb, s, lam)")
    ell = Fraction(ell)
    if ell == 0:
        raise NotSolvable("the coefficient of lam vanishes")
    D = rhs.trunc if trunc is None else min(trunc, rhs.trunc)
    inv = GaussRat(1 / ell)
    lam_parts = {k: _drop_lam(p) for k, p in split_by(rhs.truncate(D), "lam").items()}

    def builder(lam):
        return horner(lam_parts, lam, lam.trunc).scale(inv)

    lam = solve_fixed_point(builder, 1, D, MultiSeries.zero(PHI_VARS, D))
    return validate_phi(lam)


def _drop_lam(part: MultiSeries) -> MultiSeries:
    t = {e[:3]: c for e, c in part.items()}
    return MultiSeries(PHI_VARS, t, part.trunc)


def real_part(x: MultiSeries, involution=SWAP) -> MultiSeries:
    return (x + x.conj_swap(involution)).scale(GaussRat(Fraction(1, 2)))


def jet_dependence_relation(ell: int, a: int, c: int, b: int, d: int, trunc: int):
    """Right-hand side and s-exponent m for the preimage of the quadric under
    (z, w) -> (z^a w^b + z^c w^d, w^ell), after substituting t = s^m lam."""
    m = 2 * b - ell + 1
    V = PHI_VARS + ("lam",)
    D = trunc
    z = MultiSeries.variable(V, "z", D)
    zb = MultiSeries.variable(V, "zb", D)
    s = MultiSeries.variable(V, "s", D)
    lam = MultiSeries.variable(V, "lam", D)
    s_m_lam = s ** m * lam
    w_like = s + s_m_lam.scale(GaussRat(0, 1))
    modulus = (s * s + s_m_lam * s_m_lam)
    factor = (1 + s ** (2 * (m - 1)) * lam * lam) ** b
    bracket = (z * zb) ** a \
        + real_part(z ** c * zb ** a * w_like ** (d - b)).scale(2) \
        + (z * zb) ** c * modulus ** (d - b)
    rhs = factor * bracket
    j = 1
    while 2 * j + 1 <= ell:
        coeff = comb(ell, 2 * j + 1) * (-1) ** j
        rhs = rhs - (s ** (2 * j * (m - 1)) * lam ** (2 * j + 1)).scale(coeff)
        j += 1
    return rhs, m


def jet_dependence_surface(ell: int, a: int, c: int, b: int, d: int, trunc: int) -> PhiForm:
    """The full defining series s^m * phi of the jet-dependence family, to ``trunc``."""
    m = 2 * b - ell + 1
    rhs, m = jet_dependence_relation(ell, a, c, b, d, trunc - m)
    lam = solve_defining(rhs, ell).phi
    s_m = MultiSeries.monomial(PHI_VARS, (0, 0, m), 1, trunc)
    full = lam.with_trunc(trunc - m).embed(PHI_VARS)
    shifted = {(e[0], e[1], e[2] + m): co for e, co in full.items()}
    return validate_phi(MultiSeries(PHI_VARS, shifted, trunc))


def jet_dependence_map(ell: int, a: int, b: int, t, trunc: int) -> FormalMap:
    """H_t(z, w) = (z (1 - t w^ell)^(-h), w (1 - t w^ell)^(-1/ell)), h = (1 - b/ell)/a."""
    h = (1 - Fraction(b, ell)) / a
    base = MultiSeries(MAP_VARS, {(0, 0): 1, (0, ell): -Fraction(t)}, trunc)
    z = MultiSeries.variable(MAP_VARS, "z", trunc)
    w = MultiSeries.variable(MAP_VARS, "w", trunc)
    return FormalMap(z * base.rational_power(-h), w * base.rational_power(Fraction(-1, ell)))
