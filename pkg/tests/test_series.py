from fractions import Fraction

import pytest

from conftest import random_series
from formalcr.series import (BeyondTruncation, ConstantTermSubstitution, GaussRat, MultiSeries,
                             NoConvergence, NotInvertible, NotUnitConstant, VariableMismatch,
                             solve_fixed_point)

Z1 = ("z",)
ZCT = ("z", "zb", "tau")
I = GaussRat(0, 1)


def uni(coeffs, trunc):
    return MultiSeries(Z1, {(k,): c for k, c in coeffs.items()}, trunc)


def test_gaussrat_is_canonical_and_closed():
    a = GaussRat(Fraction(2, 4), Fraction(-6, 8))
    assert (a.re, a.im) == (Fraction(1, 2), Fraction(-3, 4))
    b = GaussRat(3, 1)
    assert a * b * b.inverse() == a
    assert (a + b) - b == a
    assert a.conj().conj() == a
    with pytest.raises(ZeroDivisionError):
        GaussRat(0).inverse()


def test_square_truncates_top_degree():
    f = uni({1: 1, 2: 1}, 3)
    assert f * f == uni({2: 1, 3: 2}, 3)


def test_additive_identity_and_scaling_by_units():
    zct = MultiSeries.monomial(ZCT, (1, 1, 0), 1, 6)
    assert zct + MultiSeries.zero(ZCT, 6) == zct
    assert zct.scale(I).scale(-I) == zct


def test_mismatched_variables_rejected():
    with pytest.raises(VariableMismatch):
        uni({1: 1}, 3) + MultiSeries.variable(ZCT, "z", 3)


def test_substitute_examples():
    f = uni({1: 1, 2: 1, 3: 1}, 3)
    g = uni({1: 1, 2: 1}, 3)
    assert f.substitute({"z": g}) == uni({1: 1, 2: 2, 3: 3}, 3)
    assert f.substitute({"z": uni({1: 1}, 3)}) == f
    tau = MultiSeries.variable(ZCT, "tau", 4)
    q = tau + MultiSeries.monomial(ZCT, (1, 1, 0), GaussRat(0, 2), 4)
    assert tau.substitute({"tau": q}) == q


def test_substitute_with_constant_term_is_refused():
    f = uni({1: 1, 2: 1}, 4)
    with pytest.raises(ConstantTermSubstitution):
        f.substitute({"z": uni({0: 1, 1: 1}, 4)})


def test_conj_swap_examples():
    swap = {"z": "zb"}
    f = MultiSeries.monomial(ZCT, (2, 1, 0), I, 5)
    assert f.conj_swap(swap) == MultiSeries.monomial(ZCT, (1, 2, 0), -I, 5)
    g = MultiSeries.monomial(ZCT, (1, 1, 0), 1, 5)
    assert g.conj_swap(swap) == g
    h = MultiSeries.monomial(ZCT, (3, 0, 0), GaussRat(1, 2), 5)
    assert h.conj_swap(swap) == MultiSeries.monomial(ZCT, (0, 3, 0), GaussRat(1, -2), 5)


def test_coeff_extract_examples():
    phi_vars = ("z", "zb", "s")
    half = GaussRat(Fraction(1, 2))
    phi = MultiSeries(phi_vars, {(2, 1, 1): half, (1, 2, 1): half, (4, 4, 0): 1}, 16)
    got = phi.coeff_extract({"z": 1, "s": 1})
    assert got == MultiSeries(("zb",), {(2,): half}, 14)
    assert phi.coeff_extract({"z": 7, "s": 3}).is_zero()
    q = MultiSeries(ZCT, {(0, 0, 1): 1, (1, 1, 1): GaussRat(0, 2)}, 10)
    assert q.coeff_extract({"z": 1, "tau": 1}) == MultiSeries(("zb",), {(1,): GaussRat(0, 2)}, 8)


def test_vanishing_order():
    assert uni({2: Fraction(1, 2), 5: 1}, 8).valuation() == 2
    assert isinstance(MultiSeries.zero(Z1, 10).valuation(), BeyondTruncation)
    assert uni({1: GaussRat(0, 2)}, 4).valuation() == 1


def test_nth_root_examples():
    r = uni({0: 1, 1: 1}, 2).nth_root(2)
    assert r == uni({0: 1, 1: Fraction(1, 2), 2: Fraction(-1, 8)}, 2)
    assert uni({0: 1}, 6).nth_root(5) == uni({0: 1}, 6)
    assert uni({0: 1, 1: 2, 2: 1}, 6).nth_root(2) == uni({0: 1, 1: 1}, 6)
    with pytest.raises(NotUnitConstant):
        uni({0: 2, 1: 1}, 4).nth_root(2)


def test_invert_univariate_examples(rng):
    assert uni({1: 1, 2: 1}, 3).invert_univariate() == uni({1: 1, 2: -1, 3: 2}, 3)
    c = GaussRat(2, -3)
    assert uni({1: c}, 5).invert_univariate() == uni({1: c.inverse()}, 5)
    for _ in range(5):
        psi = random_series(rng, Z1, 5, n_terms=4, constant=False) + uni({1: 1}, 5)
        if psi.coeff((1,)).is_zero():
            continue
        inv = psi.invert_univariate()
        assert inv.substitute({"z": psi}) == uni({1: 1}, 5)
    with pytest.raises(NotInvertible):
        uni({2: 1}, 4).invert_univariate()


def test_fixed_point_examples():
    D = 8
    tau = MultiSeries.variable(ZCT, "tau", D)
    zc = MultiSeries.monomial(ZCT, (1, 1, 0), 1, D)
    two_i = GaussRat(0, 2)
    got = solve_fixed_point(lambda q: tau + zc.scale(two_i), 1, D, MultiSeries.zero(ZCT, D))
    assert got == tau + zc.scale(two_i)
    # phi = z zb s: closed form Q = tau (1 + i z zb) / (1 - i z zb)
    izc = zc.scale(I)
    closed = tau * (1 + izc) * (1 - izc).reciprocal()
    got = solve_fixed_point(lambda q: tau + ((q + tau) * zc).scale(I), 1, D, tau)
    assert got == closed
    seed = MultiSeries.monomial(ZCT, (1, 0, 0), 3, D)
    assert solve_fixed_point(lambda x: x, 1, D, seed) == seed


def test_fixed_point_contract_violation():
    D = 6
    z = MultiSeries.variable(Z1, "z", D)
    with pytest.raises(NoConvergence):
        solve_fixed_point(lambda x: x + z, 1, D, MultiSeries.zero(Z1, D))


def test_ring_laws(rng):
    for _ in range(10):
        a, b, c = (random_series(rng, ZCT, 6) for _ in range(3))
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c


def test_truncation_soundness(rng):
    for _ in range(10):
        f, g = random_series(rng, ZCT, 7), random_series(rng, ZCT, 7)
        assert (f * g).truncate(4) == f.truncate(4) * g.truncate(4)
        assert (f ** 3).truncate(3) == f.truncate(3) ** 3


def test_conj_swap_is_involutive_and_multiplicative(rng):
    swap = {"z": "zb"}
    for _ in range(10):
        f, g = random_series(rng, ZCT, 6), random_series(rng, ZCT, 6)
        assert f.conj_swap(swap).conj_swap(swap) == f
        assert (f * g).conj_swap(swap) == f.conj_swap(swap) * g.conj_swap(swap)


def test_nth_root_power_round_trip(rng):
    for n in (2, 3, 5):
        u = random_series(rng, Z1, 6, n_terms=4, constant=False) + uni({0: 1}, 6)
        assert u.nth_root(n) ** n == u


def test_substitution_composes(rng):
    for _ in range(5):
        f = random_series(rng, Z1, 5, n_terms=4)
        g = random_series(rng, Z1, 5, n_terms=3, constant=False)
        h = random_series(rng, Z1, 5, n_terms=3, constant=False)
        lhs = f.substitute({"z": g}).substitute({"z": h})
        rhs = f.substitute({"z": g.substitute({"z": h})})
        assert lhs == rhs


def test_text_serialization_round_trip(rng):
    f = random_series(rng, ZCT, 6)
    text = f.to_text()
    assert MultiSeries.from_text(text) == f
    assert text.splitlines()[1].count(")+(") == 1
