from fractions import Fraction

import pytest

from metabench import ring_kernel
from metabench.ring_kernel import (
    AbelianStructure,
    CoefficientRing,
    DomainError,
    IdealHandle,
    MonomialOrder,
    StaleBasisError,
    augmentation_ideal,
    ideal_intersection,
    ideal_power,
    make_group_algebra,
    normal_form,
    quotient_structure,
)

Z = CoefficientRing.integers()


def test_abelian_structure_canonical():
    A = AbelianStructure(1, [6, 4])
    assert A.torsion_orders == (2, 12)
    assert AbelianStructure(0, [2, 3]).torsion_orders == (6,)
    assert A.torsion_exponent_T(2) == 2
    assert AbelianStructure(0, [3]).order == 3


def test_coefficient_rings():
    assert CoefficientRing.mod(6).canonical(-1) == 5
    assert CoefficientRing.localized([2]).canonical(Fraction(3, 4)) == Fraction(3, 4)
    with pytest.raises(DomainError):
        CoefficientRing.localized([2]).canonical(Fraction(1, 3))
    with pytest.raises(DomainError):
        Z.canonical(Fraction(1, 2))


def test_laurent_arithmetic_and_torsion():
    alg = make_group_algebra(Z, AbelianStructure(1, [3]))
    t, s = alg.gen(0), alg.gen(1)
    assert alg.mul(t, alg.gen(0, -1)) == alg.one()
    assert alg.power(s, 3) == alg.one()
    f = alg.from_laurent({(2, 1): 3, (-1, 0): -1})
    assert alg.deserialize(alg.serialize(f)) == f


def test_format_names():
    alg1 = make_group_algebra(Z, AbelianStructure(1))
    assert "t" in alg1.format(alg1.gen(0))
    alg2 = make_group_algebra(Z, AbelianStructure(2))
    assert "a2" in alg2.format(alg2.gen(1))


def test_ideal_membership_and_unit():
    alg = make_group_algebra(Z, AbelianStructure(1))
    t = alg.gen(0)
    ideal = IdealHandle(alg, [alg.sub(t, alg.const(2)), alg.sub(alg.gen(0, -1), alg.const(2))])
    # t = 2 and t^-1 = 2 force 4 = 1, so 3 lies in the ideal
    assert ideal.contains(alg.const(3))
    assert not ideal.is_unit_ideal()
    assert quotient_structure(ideal)[0] == "finite"


def test_augmentation_powers_and_intersection():
    alg = make_group_algebra(Z, AbelianStructure(1))
    I = augmentation_ideal(alg)
    I2 = ideal_power(I, 2)
    u = alg.sub(alg.gen(0), alg.one())
    assert I.contains(u) and not I2.contains(u)
    assert I2.contains(alg.mul(u, u))
    inter = ideal_intersection(I, IdealHandle(alg, [alg.const(2)]))
    assert inter.contains(alg.scale(u, 2)) and not inter.contains(u)


def test_stale_basis_rejected():
    alg = make_group_algebra(Z, AbelianStructure(2))
    I = augmentation_ideal(alg)
    other = MonomialOrder(alg.nvars, [3, 1, 0, 2])
    assert other.signature() != I.order_signature
    with pytest.raises(StaleBasisError):
        normal_form(alg.gen(0), I, other)


class _MemoryCache:
    def __init__(self):
        self.store = {}

    def get(self, key):
        return self.store.get(key)

    def put(self, key, basis):
        self.store[key] = basis


def test_basis_cache_hits_and_rejects_corrupt_entries():
    cache = _MemoryCache()
    ring_kernel.set_basis_cache(cache)
    try:
        alg = make_group_algebra(Z, AbelianStructure(1))
        gens = [alg.sub(alg.gen(0), alg.const(3))]
        before = dict(ring_kernel.CACHE_STATS)
        IdealHandle(alg, gens)
        IdealHandle(alg, gens)
        assert ring_kernel.CACHE_STATS["hits"] == before["hits"] + 1
        for key in cache.store:
            cache.store[key] = []
        IdealHandle(alg, gens)
        assert ring_kernel.CACHE_STATS["rejected"] == before["rejected"] + 1
    finally:
        ring_kernel.set_basis_cache(None)
