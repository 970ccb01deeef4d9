import pytest

from metabench.module_engine import MatrixActionModule, ModulePresentation
from metabench.ring_kernel import AbelianStructure, CoefficientRing, make_group_algebra
from metabench.sigma_tame import (
    ValuationRay,
    default_rays,
    finite_generation_certificate,
    sigma_ray_test,
    tameness_report,
    v_monic,
)

Z = CoefficientRing.integers()


def rank_one(K=Z):
    return make_group_algebra(K, AbelianStructure(1))


def bs_module():
    alg = rank_one()
    return ModulePresentation(alg, 1, [[alg.from_laurent({(1,): 1, (0,): -2})]], "bs12")


def h_module():
    return MatrixActionModule(2, [[[0, 1], [1, 3]]]).presentation(rank_one(), "H")


def klein_module():
    return MatrixActionModule(1, [[[-1]]]).presentation(rank_one(), "klein")


def lamplighter_module():
    alg = rank_one()
    return ModulePresentation(alg, 1, [[alg.const(2)]], "lamplighter")


def test_rays_are_primitive():
    assert ValuationRay([2, 4]).weights == (1, 2)
    assert (-ValuationRay([1, -3])).weights == (-1, 3)
    with pytest.raises(ValueError):
        ValuationRay([0, 0])
    assert len(default_rays(2)) == 8 and default_rays(0) == []


def test_v_monic():
    alg = rank_one()
    f = alg.from_laurent({(1,): 1, (0,): -2})
    assert v_monic(alg, f, ValuationRay([-1]))
    assert not v_monic(alg, f, ValuationRay([1]))


def test_bs_sigma_is_one_sided():
    M = bs_module()
    assert sigma_ray_test(M, ValuationRay([-1])).status == "InSigma"
    assert sigma_ray_test(M, ValuationRay([1])).status == "NotCertified"


def test_finiteness_certificates():
    fin = finite_generation_certificate(h_module())
    assert fin.status == "FiniteOverK" and fin.order == 36 and fin.length == 4
    assert finite_generation_certificate(bs_module()).order == 3
    assert finite_generation_certificate(lamplighter_module()).status == "NotFinite"


def test_trivial_group_is_always_finite():
    alg = make_group_algebra(Z, AbelianStructure(0, [2]))
    M = ModulePresentation(alg, 1, [], "free")
    assert finite_generation_certificate(M).status == "FiniteOverK"


@pytest.mark.parametrize(
    "module,expected",
    [
        (h_module, "TameCertified"),
        (bs_module, "TameCertified"),
        (klein_module, "TameCertified"),
        (lamplighter_module, "NotTame"),
    ],)
def test_tameness_discrimination(module, expected):
    M = module()
    rep = tameness_report(M)
    assert rep.overall == expected
    if expected == "NotTame":
        w = rep.witness
        assert w["both_rays"] == "NotCertified" and w["ray"] in ([1], [-1])


def test_witnesses_reverify():
    M = h_module()
    for v in tameness_report(M).verdicts:
        if v.status == "InSigma":
            alg = M.algebra
            assert all(M.contains([v.witness if i == j else alg.zero() for j in range(2)]) for i in range(2))
