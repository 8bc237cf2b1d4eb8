"""Builders for the worked example hypersurfaces and their known automorphisms."""

from __future__ import annotations

from fractions import Fraction

from .hypersurface import MAP_VARS, PHI_VARS, FormalMap, PhiForm, real_part, validate_phi
from .series import GaussRat, MultiSeries
from .symmetry import AngleRational

DEFAULT_TRUNC = 16


def _vars(D):
    z = MultiSeries.variable(PHI_VARS, "z", D)
    zb = MultiSeries.variable(PHI_VARS, "zb", D)
    s = MultiSeries.variable(PHI_VARS, "s", D)
    return z, zb, s


def quadric(D: int = DEFAULT_TRUNC) -> PhiForm:
    z, zb, s = _vars(D)
    return validate_phi(z * zb)


def two_prime_family(a, b, r, s_exp, p, q, D: int = DEFAULT_TRUNC) -> PhiForm:
    """Im w = (Re w)^r (|z|^2a Re z^p + (Re w)^s |z|^2b Re z^q)."""
    z, zb, s = _vars(D)
    body = (z * zb) ** a * real_part(z ** p) + s ** s_exp * (z * zb) ** b * real_part(z ** q)
    return validate_phi(s ** r * body)


def prime_pair_example(a=3, b=1, p=3, q=5, r=0, D: int = DEFAULT_TRUNC) -> PhiForm:
    return two_prime_family(a, b, r, 1, p, q, D)


def linear_term_example(a: int = 4, D: int = DEFAULT_TRUNC) -> PhiForm:
    """Im w = (Re w)|z|^2 Re z + |z|^2a."""
    z, zb, s = _vars(D)
    return validate_phi(s * z * zb * real_part(z) + (z * zb) ** a)


def maximal_group_example(a=1, k=2, q=1, D: int = DEFAULT_TRUNC) -> PhiForm:
    """Im w = (Re w)^q Re(z^k) (|z|^2a (Re w)^2 + |z|^2(a+3))."""
    z, zb, s = _vars(D)
    return validate_phi(s ** q * real_part(z ** k) * ((z * zb) ** a * s * s + (z * zb) ** (a + 3)))


def maximal_group_maps(k: int, D: int = DEFAULT_TRUNC):
    """The 2k rotations (e^{2 pi i l/k} z, +-w), only when the angles are Gaussian rationals."""
    out = []
    for l in range(k):
        c = AngleRational(2 * l, k).to_gauss()
        for sign in (1, -1):
            out.append(((l, sign), FormalMap.linear(c, sign, D)))
    return out


def one_parameter_example(alpha=3, mu=2, p=1, D: int = DEFAULT_TRUNC) -> PhiForm:
    """Im w = (Re w)^mu (|z|^2 alpha + (Re w)^(mu-1) Re(z^(alpha-mu+1-p) zb^(3 alpha+mu-1+p)))."""
    z, zb, s = _vars(D)
    inner = (z * zb) ** alpha + s ** (mu - 1) * real_part(z ** (alpha - mu + 1 - p) * zb ** (3 * alpha + mu - 1 + p))
    return validate_phi(s ** mu * inner)


def one_parameter_map(r, alpha=3, mu=2, D: int = DEFAULT_TRUNC) -> FormalMap:
    r = Fraction(r)
    return FormalMap.linear(r ** (1 - mu), r ** (2 * alpha), D)


def admissible(coefficients: dict, D: int = DEFAULT_TRUNC) -> PhiForm:
    """Im w = sum c * Re(z^alpha zb^n) (Re w)^mu over {(alpha, n, mu): c}."""
    z, zb, s = _vars(D)
    phi = MultiSeries.zero(PHI_VARS, D)
    for (a, n, m), c in coefficients.items():
        phi = phi + (real_part(z ** a * zb ** n) * s ** m).scale(GaussRat.coerce(c))
    return validate_phi(phi)
