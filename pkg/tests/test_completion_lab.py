import random
from fractions import Fraction

import pytest

from metabench.completion_lab import (
    TruncatedRing,
    alpha_power,
    binomial_coeff_rational,
    commutator,
    identity_suite,
    in_power_of_augmentation,
    power_congruence_by_membership,
    theta,
    theta_by_factors,
    verify_power_congruence,
    wedge_completion_model,
)
from metabench.module_engine import MatrixActionModule
from metabench.ring_kernel import AbelianStructure, CoefficientRing, DomainError, Inconclusive, make_group_algebra


def test_binomial_coefficients():
    assert binomial_coeff_rational(5, 2) == 10
    assert binomial_coeff_rational(Fraction(1, 2), 2, (2,)) == Fraction(-1, 8)
    assert binomial_coeff_rational(-1, 3) == -1


def test_alpha_power_matches_integer_power():
    R = TruncatedRing(2, 5)
    x = R.group_element((1, -2))
    assert alpha_power(x, 3) == x.power(3)
    assert alpha_power(x, -1) * x == R.one()


def test_half_power_squares_back():
    R = TruncatedRing(1, 6, (2,))
    x = R.group_element((1,))
    h = alpha_power(x, Fraction(1, 2))
    assert h * h == x and h.denominators_ok()


def test_alpha_power_rejects_non_unipotent_and_bad_denominators():
    R = TruncatedRing(1, 4, (2,))
    with pytest.raises(DomainError):
        alpha_power(R.one().scale(2), 2)
    with pytest.raises(DomainError):
        alpha_power(R.group_element((1,)), Fraction(1, 3))


def test_theta_routes_agree():
    R = TruncatedRing(2, 5, (3,))
    for exps in [(1, 0), (2, -1), (-3, 4)]:
        assert theta(R, exps, Fraction(2, 3)) == theta_by_factors(R, exps, Fraction(2, 3))


def test_identity_suite_random():
    rng = random.Random(7)
    R = TruncatedRing(1, 5, (2,))
    for _ in range(20):
        x = R.random_unipotent(rng)
        assert all(identity_suite(R, x, Fraction(3, 4), Fraction(-5, 2)).values())


def test_commutators_trivial_and_augmentation_membership():
    R = TruncatedRing(2, 4)
    u, v = R.group_element((1, 0)), R.group_element((0, 1))
    assert commutator(u, v) == R.one()
    assert in_power_of_augmentation(R.u(0) * R.u(1), 2)
    assert not in_power_of_augmentation(R.u(0), 2)


def test_power_congruence_witnesses():
    pc = verify_power_congruence(2, 3)
    assert pc.passed
    assert [w[1] for w in pc.witnesses] == [128, 8128]
    assert power_congruence_by_membership(2, 3)


@pytest.mark.parametrize("n,i", [(3, 2), (4, 2), (6, 3)])
def test_power_congruence_routes_agree(n, i):
    assert verify_power_congruence(n, i).passed == power_congruence_by_membership(n, i) is True


def test_power_congruence_rejects_bad_arguments():
    with pytest.raises(ValueError):
        verify_power_congruence(1, 2)


def test_h_wedge_model_over_f2():
    alg = make_group_algebra(CoefficientRing.mod(2), AbelianStructure(1))
    M = MatrixActionModule(2, [[[0, 1], [1, 3]]]).presentation(alg, "H")
    wm = wedge_completion_model(M)
    assert not isinstance(wm, Inconclusive)
    assert wm.index <= 4 and wm.checks["window_equal"]
    assert str(wm.exterior_coinvariants) == "Z/2"


def test_wedge_model_outside_regime_is_inconclusive():
    alg = make_group_algebra(CoefficientRing.integers(), AbelianStructure(1))
    M = MatrixActionModule(1, [[[-1]]]).presentation(alg, "klein")
    assert isinstance(wedge_completion_model(M), Inconclusive)
