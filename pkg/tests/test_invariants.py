from fractions import Fraction

import pytest

from conftest import random_phi
from formalcr.families import (admissible, linear_term_example, maximal_group_example,
                               one_parameter_example, prime_pair_example, quadric,
                               two_prime_family)
from formalcr.hypersurface import (PHI_VARS, FormalMap, check_map, jet_dependence_surface,
                                   phi_to_q, pullback, validate_phi)
from formalcr.invariants import (check_transform, finite_type_order, invariant_pairs, lambda_set,
                                 m0, precedes, profile, provisional_pairs, support_pairs,
                                 tensor_coeff)
from formalcr.series import BeyondTruncation, GaussRat, MultiSeries


def test_precedes():
    assert precedes((1, 1), (2, 1))
    assert not precedes((4, 0), (1, 1)) and not precedes((1, 1), (4, 0))
    assert precedes((3, 2), (3, 2), strict=False)
    assert not precedes((3, 2), (3, 2))


def test_support_pairs():
    assert support_pairs(linear_term_example(4)) == {(1, 1), (2, 1), (4, 0)}
    assert support_pairs(quadric()) == {(1, 0)}
    assert support_pairs(validate_phi(MultiSeries.zero(PHI_VARS, 8))) == set()


def test_invariant_pairs_examples():
    assert invariant_pairs(linear_term_example(4)) == {(1, 1), (4, 0)}
    assert invariant_pairs(maximal_group_example(1, 2, 1)) == {(1, 3), (4, 1)}
    assert invariant_pairs(quadric()) == {(1, 0)}
    assert lambda_set(quadric()) == {(1, 1, 0)}


@pytest.mark.parametrize("M, expected", [
    (prime_pair_example(3, 1, 3, 5, 0), {(3, 6, 0), (1, 6, 1)}),
    (two_prime_family(5, 1, 0, 3, 3, 5), {(5, 8, 0), (1, 6, 3)}),
    (linear_term_example(4), {(1, 2, 1), (4, 4, 0)}),
    (maximal_group_example(1, 2, 1), {(1, 3, 3), (4, 6, 1)}),
    (one_parameter_example(3, 2, 1), {(3, 3, 2), (1, 11, 3)}),
], ids=["two-primes", "two-primes-general", "linear-term", "maximal-group", "one-parameter"])
def test_lambda_of_example_families(M, expected):
    assert lambda_set(M) == expected
    assert lambda_set(phi_to_q(M)) == expected


def test_lambda_of_jet_dependence_surface():
    assert {(4, 4, 2), (2, 4, 3)} <= lambda_set(jet_dependence_surface(5, 4, 2, 3, 4, 16))


def test_tensor_scalars():
    assert tensor_coeff(quadric(), (1, 1, 0)) == GaussRat(0, 2)
    M = linear_term_example(4)
    assert tensor_coeff(M, (1, 2, 1)) == GaussRat(0, 1)
    assert tensor_coeff(M, (4, 4, 0)) == GaussRat(0, 2)
    with pytest.raises(ValueError):
        tensor_coeff(M, (1, 1, 0))


def test_low_truncation_sees_nothing():
    prof = profile(linear_term_example(4, D=3))
    assert prof.lam == frozenset() and prof.gamma0 == BeyondTruncation(3)


def test_finite_type_and_m0():
    M = linear_term_example(4)
    assert finite_type_order(M) == 4 and m0(M) == 2
    assert finite_type_order(quadric()) == 1 and m0(quadric()) == 1
    rigid = validate_phi(MultiSeries(PHI_VARS, {(1, 1, 1): 1}, 12))
    assert finite_type_order(rigid) == BeyondTruncation(12)
    assert m0(rigid) == 2


def test_provisional_pairs_flag_low_truncation():
    # |z|^2 s^5 at D = 8: a pair (6, 0) below (1, 5) would first show at degree 12
    M = admissible({(1, 1, 5): 1}, 8)
    assert profile(M).provisional == {(1, 5)}
    assert not provisional_pairs(linear_term_example(4, D=16))


def test_transform_law_examples():
    fin = phi_to_q(maximal_group_example(1, 2, 1))
    assert check_transform(fin, fin, FormalMap.linear(-1, 1, 16))
    Q = phi_to_q(quadric())
    H = FormalMap.linear(GaussRat(0, 1), 1, 16)
    assert check_transform(Q, Q, H)
    assert check_transform(Q, Q, FormalMap.identity(16))


def test_transform_law_under_random_linear_maps(rng):
    for _ in range(10):
        Mt = phi_to_q(random_phi(rng))
        c = GaussRat(Fraction(rng.randint(1, 5), rng.randint(1, 5)), Fraction(rng.randint(-5, 5), 3))
        r = Fraction(rng.choice([-1, 1]) * rng.randint(1, 5), rng.randint(1, 5))
        H = FormalMap.linear(c, r, Mt.trunc)
        M = pullback(Mt, H)
        assert check_map(M, Mt, H)
        verdict = check_transform(M, Mt, H)
        assert verdict.holds and verdict.same_lambda, verdict.failures


def test_triples_satisfy_n_at_least_alpha_and_reality(rng):
    for _ in range(10):
        M = random_phi(rng)
        prof = profile(M)
        for (a, n, m), T in prof.tensors.items():
            assert n >= a
            if n == a:
                assert T.re == 0
