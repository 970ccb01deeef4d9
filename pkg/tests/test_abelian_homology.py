import pytest

from metabench.abelian_homology import (
    constant_tower,
    homology,
    homology_bar,
    homology_dense,
    homology_tower,
    lim_and_lim1,
    multiplication_tower,
    trivial_resolution,
)
from metabench.module_engine import KModuleInvariants, ModulePresentation, ideal_power_tower
from metabench.ring_kernel import AbelianStructure, CoefficientRing, augmentation_ideal, make_group_algebra

Z = CoefficientRing.integers()
F2 = CoefficientRing.mod(2)


def cyclic(K, A, coeffs):
    alg = make_group_algebra(K, A)
    return ModulePresentation(alg, 1, [[alg.from_laurent(coeffs)]], "cyclic")


def test_resolution_is_a_complex():
    alg = make_group_algebra(Z, AbelianStructure(1, [2]))
    F = trivial_resolution(alg, 3)
    for k in range(2, 4):
        D1, D0 = F.differentials[k], F.differentials[k - 1]
        for row in D1:
            for c in range(len(D0[0])):
                acc = alg.zero()
                for j, f in enumerate(row):
                    acc = alg.add(acc, alg.mul(f, D0[j][c]))
                assert not acc


def test_klein_module_homology():
    # Z with t acting by -1
    M = cyclic(Z, AbelianStructure(1), {(1,): 1, (0,): 1})
    assert str(homology(M, 0)) == "Z/2"
    assert homology(M, 1).is_zero


@pytest.mark.parametrize("k", [0, 1, 2])
def test_sign_module_over_c2_three_routes(k):
    M = cyclic(Z, AbelianStructure(0, [2]), {(1,): 1, (0,): 1})
    model = M.finite_model()
    a, b, c = homology(M, k), homology_dense(model, k), homology_bar(model, k)
    assert a == b == c
    assert str(a) == ("0" if k == 1 else "Z/2")


@pytest.mark.parametrize("k", [0, 1, 2])
def test_coprime_action_over_f2(k):
    M = cyclic(F2, AbelianStructure(0, [3]), {(2,): 1, (1,): 1, (0,): 1})
    model = M.finite_model()
    assert homology(M, k).is_zero
    assert homology_dense(model, k).is_zero
    assert homology_bar(model, k).is_zero


def test_limits():
    c = lim_and_lim1(constant_tower(KModuleInvariants(F2, 0, [2]), 3))
    assert c["lim1"] == "CertifiedZero" and str(c["lim"]) == "Z/2"
    m = lim_and_lim1(multiplication_tower(2, 3))
    assert m["lim1"] == "NotCertified" and m["lim"] is None


def test_homology_tower_of_h_module_mod_2():
    alg = make_group_algebra(F2, AbelianStructure(1))
    M = ModulePresentation(alg, 2, [[alg.gen(0), alg.const(1)], [alg.const(1), alg.sub(alg.gen(0), alg.const(3))]])
    tower = ideal_power_tower(M, augmentation_ideal(alg), 3)
    got = lim_and_lim1(homology_tower(tower, 0))
    assert got["lim1"] == "CertifiedZero"
