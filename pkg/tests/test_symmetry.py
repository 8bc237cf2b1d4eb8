from fractions import Fraction

import pytest

from formalcr.balls import Ball, Inconclusive
from formalcr.families import admissible, maximal_group_example, maximal_group_maps
from formalcr.hypersurface import FormalMap, check_map, phi_to_q
from formalcr.symmetry import (INFINITE, AngleRational, Case, FormulaMismatch, TorusElement,
                               cardinality_N, case_AB, gcd_invariants, group_D, group_N,
                               finiteness_decision, jet_order, membership_C, ord2,
                               triviality_decision)

LINEAR_TERM = {(1, 2, 1), (4, 4, 0)}
MAXIMAL = {(1, 3, 3), (4, 6, 1)}
ONE_PARAMETER = {(3, 3, 2), (1, 11, 3)}
PRIME_PAIR = {(3, 6, 0), (1, 6, 1)}


def el(num, den, delta):
    return TorusElement(AngleRational(num, den), delta)


def test_angle_rational_is_reduced():
    a = AngleRational(6, 4)
    assert (a.num, a.den) == (3, 2)
    assert AngleRational(5, 2) == AngleRational(1, 2)
    assert (a * a.inverse()).is_one()


def test_group_D_examples():
    assert set(group_D(1, 0).elements()) == {el(0, 1, 1), el(0, 1, -1)}
    assert set(group_D(2, 1).elements()) == {el(0, 1, 1), el(1, 1, 1), el(1, 2, -1), el(3, 2, -1)}
    D01 = group_D(0, 1)
    assert D01.circle_plus and not D01.circle_minus and not D01.finite


def test_group_D_cardinality_and_membership():
    for k in range(1, 9):
        for l in range(4):
            G = group_D(k, l)
            assert len(G.elements()) == 2 * k
            assert all(e.satisfies(k, l) for e in G.elements())


def test_membership_C_examples():
    assert membership_C(1, 1, 2, 5, 3)
    assert not membership_C(GaussRat_i(), 1, 1, 3, 0)
    assert membership_C(-1, -1, 1, 2, 2)


def GaussRat_i():
    from formalcr.series import GaussRat
    return GaussRat(0, 1)


def test_membership_C_with_balls():
    assert membership_C(Ball(2), Ball(1), 1, 1, 0) is False
    with pytest.raises(Inconclusive):
        membership_C(Ball(1), Ball(1), 1, 1, 0)


def test_group_N_examples():
    N = group_N(MAXIMAL)
    assert set(N.elements()) == {el(0, 1, 1), el(1, 1, 1), el(0, 1, -1), el(1, 1, -1)}
    assert group_N(LINEAR_TERM).elements() == [el(0, 1, 1)]
    N = group_N(ONE_PARAMETER)
    assert N.order() == 10 and all(e.delta == 1 for e in N.elements())


def test_gcd_invariants_and_ord2():
    assert gcd_invariants(LINEAR_TERM) == (1, 1, 0)
    assert gcd_invariants(MAXIMAL) == (2, 2, 0)
    assert ord2(12) == 2 and ord2(0) is INFINITE


def test_cardinality_examples():
    assert cardinality_N(LINEAR_TERM).value == 1
    c = cardinality_N(MAXIMAL)
    assert c.value == 4 and not c.formula_applicable
    c = cardinality_N({(1, 3, 0), (1, 5, 2)})
    assert c.value == group_N({(1, 3, 0), (1, 5, 2)}).order()


def test_case_AB_examples():
    assert case_AB((3, 3, 2), (1, 11, 3)) == Case.A
    assert case_AB((1, 3, 3), (4, 6, 1)) == Case.B
    with pytest.raises(ValueError):
        case_AB((1, 3, 3), (1, 3, 3))


def test_finiteness_examples():
    f = finiteness_decision(LINEAR_TERM)
    assert f.kind == "Finite" and f.bound == 2
    f = finiteness_decision(MAXIMAL)
    assert f.kind == "Finite" and f.bound == 4
    f = finiteness_decision(ONE_PARAMETER)
    assert f.kind == "JetEmbedOnly" and f.jet_order == 1
    assert finiteness_decision({(1, 1, 0)}).kind == "NotApplicable"


def test_triviality_examples():
    assert triviality_decision(PRIME_PAIR).kind == "Trivial"
    assert triviality_decision(LINEAR_TERM).kind == "Trivial"
    t = triviality_decision(MAXIMAL)
    assert t.kind == "NontrivialPossible" and t.witness in group_N(MAXIMAL)


def test_jet_order_examples():
    assert jet_order((4, 4, 2), (2, 4, 3)) == 6
    assert jet_order((1, 2, 1), (4, 4, 0)) == 1
    assert jet_order((3, 3, 2), (1, 11, 3)) == 1


def test_group_elements_are_automorphisms():
    M = phi_to_q(maximal_group_example(1, 2, 1, 14))
    for (l, sign), H in maximal_group_maps(2, 14):
        assert check_map(M, M, H), (l, sign)
    lam = {(1, 3, 1), (2, 4, 3)}
    A = phi_to_q(admissible({t: Fraction(1, t[0]) for t in lam}, 12))
    for e in group_N(lam).elements():
        if 2 % e.gamma.den == 0:
            assert check_map(A, A, FormalMap.linear(e.gamma.to_gauss(), e.delta, 12))


def test_group_N_is_a_subgroup():
    for lam in (MAXIMAL, ONE_PARAMETER, {(1, 4, 0), (2, 8, 3)}):
        N = group_N(lam)
        elems = N.elements()
        assert el(0, 1, 1) in elems
        assert all(a * b in N for a in elems for b in elems)
        assert N.order() <= 2 * gcd_invariants(lam)[0]


def test_formula_mismatch_is_a_tripwire():
    assert issubclass(FormulaMismatch, Exception)
