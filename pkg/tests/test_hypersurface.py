from fractions import Fraction

import pytest

from conftest import random_phi
from formalcr.families import maximal_group_example
from formalcr.hypersurface import (MAP_VARS, PHI_VARS, Q_VARS, FormalMap, NormalityViolation,
                                   NormalizationViolation, NotSolvable, RealityViolation,
                                   check_map, complete_transversal, jet_dependence_surface,
                                   phi_to_q, pullback, q_to_phi, solve_defining, validate_phi,
                                   validate_q)
from formalcr.invariants import coefficient_series, invariant_pairs
from formalcr.parser import parse_expr
from formalcr.series import GaussRat, MultiSeries

D = 10
TWO_I = GaussRat(0, 2)


def phi(text, trunc=D):
    return parse_expr(text, PHI_VARS, trunc)


def q(text, trunc=D):
    return parse_expr(text, Q_VARS, trunc)


def zw(text, trunc=D):
    return parse_expr(text, MAP_VARS, trunc)


def quadric_q(trunc=D):
    return validate_q(q("tau + 2 i*z*zb", trunc))


def test_validate_phi():
    assert validate_phi(phi("z*zb"))
    with pytest.raises(RealityViolation):
        validate_phi(phi("i*z*zb"))
    with pytest.raises(NormalizationViolation):
        validate_phi(phi("z^2*s"))


def test_validate_q():
    assert validate_q(q("tau + 2 i*z*zb"))
    assert validate_q(q("tau"))
    with pytest.raises(NormalityViolation):
        validate_q(q("tau + z*zb"))


def test_phi_to_q_examples():
    assert phi_to_q(validate_phi(phi("z*zb"))).q == q("tau + 2 i*z*zb")
    got = phi_to_q(validate_phi(phi("z*zb*s"))).q
    for k in range(1, 5):
        assert got.coeff((k, k, 1)) == GaussRat(0, 1) ** k * 2
    assert got.coeff((0, 0, 1)) == GaussRat(1)


def test_q_to_phi_examples():
    assert q_to_phi(quadric_q()).phi == phi("z*zb")
    assert q_to_phi(validate_q(q("tau"))).phi.is_zero()


def test_round_trip_and_reality(rng):
    for _ in range(10):
        M = random_phi(rng)
        Mq = phi_to_q(M)
        assert q_to_phi(Mq).phi == M.phi
        assert validate_q(Mq.q)


def test_invariant_pair_coefficient_is_two_i_phi(rng):
    for _ in range(10):
        M = random_phi(rng)
        Mq = phi_to_q(M)
        for a, m in invariant_pairs(M):
            lhs = coefficient_series(Mq, a, m)
            rhs = coefficient_series(M, a, m).scale(TWO_I)
            assert lhs == rhs.truncate(lhs.trunc).with_trunc(lhs.trunc)


def test_check_map_examples():
    Q = quadric_q()
    assert check_map(Q, Q, FormalMap.linear(GaussRat(0, 1), 1, D))
    fin = phi_to_q(maximal_group_example(1, 2, 1, 16))
    assert check_map(fin, fin, FormalMap.linear(-1, 1, 16))
    bad = check_map(Q, Q, FormalMap.linear(2, 1, D))
    assert not bad and bad.failing_degree == 2


def test_pullback_examples():
    Q = quadric_q()
    c, r = GaussRat(1, 2), Fraction(3)
    H = FormalMap.linear(c, r, D)
    got = pullback(Q, H)
    # r tau' = tau'' + 2i |c|^2 z zb on w = r Q, so the Levi coefficient is divided by r
    assert got.q == q("tau") + q("z*zb").scale(TWO_I * c * c.conj() * GaussRat(1 / r))
    assert check_map(got, Q, H)
    assert pullback(Q, FormalMap.identity(D)).q == Q.q
    with pytest.raises(NormalityViolation):
        pullback(Q, FormalMap(zw("z + w"), zw("w")))


def test_pullback_composes():
    M = phi_to_q(validate_phi(phi("z*zb + s*re(z^2*zb) + abs2(z)^2")))
    H1 = complete_transversal(zw("z + z*w + 1/2*z^2"), M, [1, Fraction(1, 3)])
    M1 = pullback(M, H1)
    H2 = complete_transversal(zw("2 i*z - z^2*w"), M1, [Fraction(1, 2)])
    M2 = pullback(M1, H2)
    assert pullback(M, H1.compose(H2)).q == M2.q
    assert check_map(M2, M, H1.compose(H2))


def test_complete_transversal_examples():
    Q = quadric_q()
    H = complete_transversal(zw("3*z"), Q, [1, 0, 0])
    assert H.G == zw("w")
    rigid = phi_to_q(validate_phi(phi("z*zb + abs2(z)^2")))
    H = complete_transversal(zw("z"), rigid, [Fraction(5, 2)])
    assert H.G == zw("5/2*w")


def test_transversal_respects_lowest_invariant_degree():
    fin = phi_to_q(maximal_group_example(1, 2, 1, 12))
    H = complete_transversal(zw("z + (1 + i)*z*w + z^2 + 1/3*z^3*w^2", 12), fin, [1, 2, 3])
    for k in range(1, 4):
        part = H.G.coeff_extract({"w": k})
        assert all(e == (0,) for e, _ in part.items()), k
    assert pullback(fin, H)


def test_solve_defining_examples():
    V = PHI_VARS + ("lam",)
    rhs = MultiSeries(V, {(4, 4, 0, 0): 1}, 12)
    assert solve_defining(rhs, 1).phi == phi("abs2(z)^4", 12)
    with pytest.raises(NotSolvable):
        solve_defining(rhs, 0)
    # ell = 2 with a lam-dependent term: substituting back leaves no residual
    rhs = MultiSeries(V, {(1, 1, 0, 0): 1, (1, 1, 1, 1): 1}, 10)
    lam = solve_defining(rhs, 2).phi
    lhs = lam.scale(2)
    back = (phi("z*zb") + phi("z*zb*s") * lam)
    assert lhs == back.truncate(lhs.trunc)


def test_jet_dependence_surface_has_predicted_terms():
    M = jet_dependence_surface(5, 4, 2, 3, 4, 16)
    a = M.phi.coeff((4, 4, 2))
    b = M.phi.coeff((2, 4, 3))
    assert not a.is_zero() and not b.is_zero()
    # the implicit solve carries the 1/ell factor of the relation
    assert a == GaussRat(Fraction(1, 5))
