from metabench.linalg import abelian_invariants
from metabench.module_engine import (
    KModuleInvariants,
    MatrixActionModule,
    ModulePresentation,
    annihilator,
    coinvariants,
    exterior_coinvariants,
    exterior_square_action,
    ideal_power_tower,
    matrix_coinvariants,
    stabilization_index,
    submodule_presentation,
    tensor_over_algebra,
    tor_abelian,
    twisted,
    twisted_exterior_square,
)
from metabench.ring_kernel import AbelianStructure, CoefficientRing, augmentation_ideal, make_group_algebra

Z = CoefficientRing.integers()
F2 = CoefficientRing.mod(2)
H_ACTION = MatrixActionModule(2, [[[0, 1], [1, 3]]])


def cyclic(K, coeffs):
    alg = make_group_algebra(K, AbelianStructure(1))
    return ModulePresentation(alg, 1, [[alg.from_laurent(coeffs)]], "cyclic")


def test_invariants_over_various_rings():
    assert str(KModuleInvariants(Z, 1, [2, 4])) == str(KModuleInvariants(Z, 1, [4, 2]))
    assert KModuleInvariants(F2, 0, [4, 6]).dimension == 2
    assert KModuleInvariants(CoefficientRing.rationals(), 2, [5]).invariant_factors == ()
    assert KModuleInvariants(CoefficientRing.localized([2]), 0, [12]).invariant_factors == (3,)
    assert KModuleInvariants.from_relations(Z, [[2, 0], [0, 3]], 2).order == 6


def test_h_matrix_module_coinvariants():
    assert H_ACTION.determinants() == [-1]
    # B - 1 = [[-1, 1], [1, 2]] has determinant -3
    assert matrix_coinvariants(H_ACTION, Z).order == 3
    assert str(exterior_coinvariants(H_ACTION, Z)) == "Z/2"
    assert exterior_square_action([[0, 1], [1, 3]]) == [[-1]]


def test_presentation_matches_matrix_action():
    alg = make_group_algebra(Z, AbelianStructure(1))
    M = H_ACTION.presentation(alg, "H")
    assert coinvariants(M) == matrix_coinvariants(H_ACTION, Z)
    assert M.verify()


def test_finite_model_and_additive_structure_agree():
    M = cyclic(Z, {(2,): 1, (1,): -3, (0,): -1}).with_relations([[make_group_algebra(Z, AbelianStructure(1)).const(6)]])
    add = M.additive_structure()
    model = M.finite_model()
    assert add.order == 36
    free, facs = abelian_invariants(model.lattice, model.dim)
    assert free == 0 and add == KModuleInvariants(Z, 0, facs)


def test_tower_stabilizes_for_bs_module():
    # Lambda/(t - 2): t - 1 acts as 1, so M I = M and every stage is zero
    M = cyclic(Z, {(1,): 1, (0,): -2})
    idx = stabilization_index(M, augmentation_ideal(M.algebra))
    assert idx.index == 0 and idx.certificate["double_inclusion"]
    tower = ideal_power_tower(M, augmentation_ideal(M.algebra), 3)
    assert tower.certificate["status"] == "Stabilized"
    assert all(s.is_zero() for s in tower.stages)


def test_annihilator_and_twist():
    M = cyclic(Z, {(1,): 1, (0,): -2})
    ann = annihilator(M)
    alg = M.algebra
    assert ann.contains(alg.from_laurent({(1,): 1, (0,): -2}))
    Ms = twisted(M)
    assert Ms.contains([alg.from_laurent({(-1,): 1, (0,): -2})])


def test_tensor_and_submodule():
    M = cyclic(F2, {(1,): 1, (0,): 1})
    T = tensor_over_algebra(M, M)
    assert T.n_gens == 1 and coinvariants(T).dimension == 1
    alg = M.algebra
    S = submodule_presentation(M, [[alg.const(1)]])
    assert coinvariants(S) == coinvariants(M)


def test_tor_abelian_of_torsion_free_is_zero():
    M = cyclic(Z, {(1,): 1, (0,): -2})
    assert tor_abelian(M, 3).n_gens == 0


def test_wedge_of_cyclic_module_vanishes():
    M = cyclic(F2, {(2,): 1, (1,): 1, (0,): 1})
    W = twisted_exterior_square(M)
    assert W.stabilized and W.module.is_zero()
