from fractions import Fraction

import pytest

from formalcr.balls import Ball
from formalcr.families import admissible, quadric
from formalcr.hypersurface import (MAP_VARS, FormalMap, check_map, complete_transversal,
                                   phi_to_q, pullback)
from formalcr.normalform import (Case, HypothesesNotMet, InsufficientTruncation,
                                 NonRationalScaling, equivalence, exceptional_steps,
                                 is_normal_form, normalize, prelim_normalize, step_determinant)
from formalcr.series import GaussRat, MultiSeries, first_difference
from formalcr.symmetry import lambda_index

# Lambda = {(1,2,1), (4,4,0)} plus two terms that the normal form must remove
PLAIN = {(1, 2, 1): Fraction(1, 4), (4, 4, 0): Fraction(1, 256),
         (2, 3, 1): Fraction(1, 3), (1, 4, 2): Fraction(2, 5)}
# Lambda = {(4,4,2), (2,4,3)}: Case B with an exceptional step at k = 5
EXCEPTIONAL = {(4, 4, 2): Fraction(1, 2), (2, 4, 3): Fraction(1, 2), (4, 6, 2): Fraction(1, 3),
               (2, 5, 3): 1, (5, 5, 3): Fraction(2, 3)}


def surface(coeffs, D):
    return phi_to_q(admissible(coeffs, D))


def zw(coeffs, D):
    return MultiSeries(MAP_VARS, coeffs, D)


@pytest.fixture(scope="module")
def plain():
    return surface(PLAIN, 12)


@pytest.fixture(scope="module")
def plain_moved(plain):
    F = zw({(1, 0): 1, (1, 1): GaussRat(1, 1), (2, 0): 1, (0, 2): Fraction(1, 3)}, 12)
    H = complete_transversal(F, plain, [1, Fraction(1, 2)])
    return pullback(plain, H)


def test_step_determinants():
    t, t2 = (2, 4, 3), (4, 4, 2)
    got = [step_determinant(t, t2, k) for k in range(1, 9)]
    assert got == [-4, -2, -1, Fraction(-2, 5), 0, Fraction(2, 7), Fraction(1, 2), Fraction(2, 3)]
    assert exceptional_steps(t, t2) == {5} and lambda_index(t, t2) == 5
    assert exceptional_steps((1, 2, 1), (4, 4, 0)) == frozenset()


def test_quadric_is_out_of_scope():
    with pytest.raises(HypothesesNotMet):
        normalize(quadric(12))


def test_prelim_normalizes_leading_coefficients(plain):
    pre = prelim_normalize(plain)
    assert pre.t == (1, 2, 1) and pre.case == Case.B
    q = pre.q1.q
    assert q.coeff(pre.t) == GaussRat(0, 2)
    assert pre.c_eps.abs2() == 4
    assert check_map(pre.q1, plain, pre.map)


def test_normalize_plain_instance(plain):
    r = normalize(plain)
    assert r.K == frozenset() and not r.free_params
    assert is_normal_form(r.q_nf, r.t, r.t2, r.certified_degree)
    assert check_map(r.q_nf, plain, r.map)
    assert r.map.F.coeff((1, 0)) == r.fz0


def test_normal_form_is_idempotent(plain):
    r = normalize(plain)
    again = normalize(r.q_nf)
    d = r.certified_degree
    assert first_difference(again.q_nf.q, r.q_nf.q, d) is None
    ident = FormalMap.identity(r.trunc).truncate(d)
    assert again.map.truncate(d) == ident


def test_moved_surface_has_the_same_normal_form(plain, plain_moved):
    a, b = normalize(plain), normalize(plain_moved)
    d = min(a.certified_degree, b.certified_degree)
    assert first_difference(a.q_nf.q, b.q_nf.q, d) is None
    e = equivalence(plain, plain_moved)
    assert e.kind == "Equivalent"
    assert check_map(plain, plain_moved, e.map).holds


def test_distinct_surfaces(plain):
    other = surface({**PLAIN, (2, 3, 1): Fraction(1, 2)}, 12)
    e = equivalence(plain, other)
    assert e.kind == "Distinct" and "degree" in e.reason
    e = equivalence(plain, surface({(1, 3, 1): 1, (4, 4, 0): 1}, 12))
    assert e.kind == "Distinct" and "invariant triples" in e.reason


def test_is_normal_form_reports_the_violated_condition(plain):
    v = is_normal_form(plain)
    assert v.kind == "Fails" and v.condition and v.degree
    assert is_normal_form(quadric(8)).kind == "NotApplicable"


def test_insufficient_truncation(plain):
    with pytest.raises(InsufficientTruncation):
        normalize(plain, D=20)


def test_choice_outside_the_residual_group_is_rejected(plain):
    with pytest.raises(ValueError):
        normalize(plain, choice=(GaussRat(0, 1), 1))


def test_step_records(plain):
    r = normalize(plain)
    assert r.steps and all(st.k >= 1 for st in r.steps)
    assert all(step_determinant(r.t, r.t2, st.k) != 0 for st in r.steps)


def test_exceptional_step_free_parameter():
    M = surface(EXCEPTIONAL, 18)
    r0, r1 = normalize(M, free=0), normalize(M, free=1)
    assert r0.K == {5} and r0.case == Case.B
    assert r0.free_params == (("s_6", 0),)
    assert is_normal_form(r0.q_nf, r0.t, r0.t2, r0.certified_degree)
    assert check_map(r0.q_nf, M, r0.map) and check_map(r1.q_nf, M, r1.map)
    # the free value is invisible in the 5-jet and shows in the 6-jet
    assert r0.map.jet(5).G == r1.map.jet(5).G and r0.map.jet(5).F == r1.map.jet(5).F
    assert r0.map.jet(6).G != r1.map.jet(6).G or r0.map.jet(6).F != r1.map.jet(6).F


def test_equivalence_solves_for_the_free_value():
    M = surface(EXCEPTIONAL, 18)
    H = complete_transversal(zw({(1, 0): 1}, 18), M, [1, 0, 0, 0, 0, Fraction(3, 7)])
    e = equivalence(M, pullback(M, H))
    assert e.kind == "Equivalent" and e.free is not None
    assert check_map(M, pullback(M, H), e.map)
    far = surface({**EXCEPTIONAL, (3, 7, 3): 1}, 18)
    assert equivalence(M, far).kind == "Distinct"


def test_irrational_scaling_needs_balls():
    M = surface({(1, 3, 1): 1, (3, 3, 0): 1}, 12)
    with pytest.raises(NonRationalScaling):
        normalize(M)
    r = normalize(M, mode="ball", bits=128)
    assert isinstance(r.fz0, Ball) and abs(float(r.fz0.re.mid) - 4 ** 0.125) < 1e-14
    assert r.mode == "ball(128)"


def _jets_overlap(a, b, j):
    for X, Y in ((a.F, b.F), (a.G, b.G)):
        keys = {e for e, _ in X.items()} | {e for e, _ in Y.items()}
        if any(sum(e) <= j and not X.coeff(e).overlaps(Y.coeff(e)) for e in keys):
            return False
    return True


def test_jet_dependence_surface_in_ball_mode():
    from formalcr.hypersurface import jet_dependence_surface
    M = phi_to_q(jet_dependence_surface(5, 4, 2, 3, 4, 16))
    with pytest.raises(NonRationalScaling):
        normalize(M)
    r0 = normalize(M, mode="ball", bits=256, free=0)
    r1 = normalize(M, mode="ball", bits=256, free=1)
    assert r0.K == {5} and r0.certified_degree == 13
    assert _jets_overlap(r0.map, r1.map, 5)
    assert not _jets_overlap(r0.map, r1.map, 6)
