"""One-sided certificates for the Bieri-Strebel invariant and tameness.

A ray [v] is certified in Sigma(M) by an annihilator element whose
v-minimal part is a single group element with a unit coefficient. Absence
of such an element among the candidates is reported as NotCertified, which
is never a proof of non-membership.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .module_engine import ModulePresentation, annihilator, twisted
from .ring_kernel import (
    DegreeBoundExceeded,
    IdealHandle,
    Inconclusive,
    antipode_ideal,
    ideal_sum,
)


@dataclass(frozen=True)
class ValuationRay:
    """Primitive integral weight vector on the free part of A."""

    weights: tuple

    def __init__(self, weights):
        ws = [Fraction(w) for w in weights]
        if not ws or not any(ws):
            raise ValueError("a ray needs a nonzero weight vector")
        den = 1
        for w in ws:
            den = den * w.denominator // gcd(den, w.denominator)
        ints = [int(w * den) for w in ws]
        g = 0
        for x in ints:
            g = gcd(g, abs(x))
        object.__setattr__(self, "weights", tuple(x // g for x in ints))

    def __neg__(self):
        return ValuationRay([-w for w in self.weights])

    def value(self, exps) -> int:
        """v on a group element given by (free exponents..., torsion residues...)."""
        return sum(w * e for w, e in zip(self.weights, exps))

    def __repr__(self):
        return f"ValuationRay{self.weights}"


def default_rays(rank: int) -> list:
    if rank == 0:
        return []
    if rank == 1:
        return [ValuationRay([1]), ValuationRay([-1])]
    if rank == 2:
        return [ValuationRay([a, b]) for a in (-1, 0, 1) for b in (-1, 0, 1) if a or b]
    rays = []
    for j in range(rank):
        for s in (1, -1):
            rays.append(ValuationRay([s if i == j else 0 for i in range(rank)]))
    return rays


def _is_unit(K, c) -> bool:
    return K.is_unit(c)


def v_monic(alg, f, ray: ValuationRay) -> bool:
    """Is the v-minimal part of f a unit times one group element?"""
    terms = alg.to_laurent(f)
    if not terms:
        return False
    vals = {e: ray.value(e[: alg.r]) for e in terms}
    low = min(vals.values())
    lowest = [e for e, v in vals.items() if v == low]
    if len(lowest) != 1:
        # several group elements on the minimal face; only one free class allowed
        return False
    return _is_unit(alg.coefficients, terms[lowest[0]])


def _candidates(ann: IdealHandle, ray: ValuationRay) -> list:
    alg = ann.algebra
    out = list(ann.generators) + [g for g in (alg.elem(b) for b in ann.basis) if g]
    # a second basis under a weight order aligned with -v
    weights = [-w for w in ray.weights] + list(ray.weights) + [0] * alg.s
    try:
        other = IdealHandle(alg.with_order(weights), list(ann.generators))
        out += [alg.elem(b) for b in other.basis if alg.elem(b)]
    except DegreeBoundExceeded:
        pass
    # pairwise products widen the search cheaply
    base = list(out)
    for i in range(len(base)):
        for j in range(i, min(len(base), i + 4)):
            out.append(alg.mul(base[i], base[j]))
    return out


@dataclass
class RayVerdict:
    ray: ValuationRay
    status: str
    witness: dict | None = None

    def to_dict(self, alg=None) -> dict:
        w = None
        if self.witness is not None:
            w = alg.serialize(self.witness) if alg is not None else str(self.witness)
        return {"ray": list(self.ray.weights), "status": self.status, "witness": w}


def sigma_ray_test(M: ModulePresentation, ray: ValuationRay, ann: IdealHandle | None = None) -> RayVerdict:
    """InSigma with a verified annihilator witness, or NotCertified."""
    alg = M.algebra
    if len(ray.weights) != alg.r:
        raise ValueError("ray dimension does not match the free rank")
    ann = ann if ann is not None else annihilator(M)
    for f in _candidates(ann, ray):
        if f and v_monic(alg, f, ray):
            # re-verify: f kills every generator of M
            if all(M.contains([alg.mul(f, alg.one()) if i == j else alg.zero() for j in range(M.n_gens)]) for i in range(M.n_gens)):
                return RayVerdict(ray, "InSigma", f)
    return RayVerdict(ray, "NotCertified")


@dataclass
class FiniteGenerationCertificate:
    status: str
    length: int | None = None
    order: int | None = None
    structure: dict | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "length": self.length,
            "order": self.order,
            "structure": self.structure,
            "detail": self.detail,
        }


def finite_generation_certificate(M: ModulePresentation) -> FiniteGenerationCertificate:
    """Is Lambda/(Ann M + sigma Ann M) finitely generated over the coefficients?

    Finite generation means finite length in every coefficient component
    (the rational part and each residue field). FiniteOverK reports the
    order and composition length when the quotient is finite, and its
    structure (free rank plus torsion) in all cases.
    """
    try:
        ann = annihilator(M)
        both = ideal_sum(ann, antipode_ideal(ann))
        quotient = ModulePresentation(M.algebra, 1, [[g] for g in both.generators], "regime")
        got = quotient.additive_structure()
    except DegreeBoundExceeded as exc:
        return FiniteGenerationCertificate("Unknown", detail={"reason": str(exc)})
    if isinstance(got, Inconclusive):
        if got.reason == "infinite staircase":
            return FiniteGenerationCertificate("NotFinite", detail=got.to_dict())
        return FiniteGenerationCertificate("Unknown", detail=got.to_dict())
    return FiniteGenerationCertificate("FiniteOverK", got.length, got.order, got.to_json())


@dataclass
class TamenessReport:
    verdicts: list
    flipped: list
    finiteness: FiniteGenerationCertificate
    overall: str
    witness: dict | None = None

    def to_dict(self, alg=None) -> dict:
        return {
            "verdicts": [v.to_dict(alg) for v in self.verdicts],
            "flipped": [v.to_dict(alg) for v in self.flipped],
            "finiteness": self.finiteness.to_dict(),
            "overall": self.overall,
            "witness": self.witness,
        }


def tameness_report(M: ModulePresentation, rays=None) -> TamenessReport:
    """Aggregate ray certificates, the sigma flip and the finiteness certificate.

    For each ray v the test on M at -v is complemented by the test on the
    twisted module at v (the twist negates Sigma).
    """
    alg = M.algebra
    rays = list(rays) if rays is not None else default_rays(alg.r)
    ann = annihilator(M)
    Ms = twisted(M)
    ann_s = antipode_ideal(ann)
    verdicts = {ray: sigma_ray_test(M, ray, ann) for ray in rays}
    for ray in rays:
        if -ray not in verdicts:
            verdicts[-ray] = sigma_ray_test(M, -ray, ann)
    flipped = [sigma_ray_test(Ms, ray, ann_s) for ray in rays]
    fin = finite_generation_certificate(M)
    uncovered = []
    for ray, flip in zip(rays, flipped):
        pos = verdicts[ray].status == "InSigma"
        neg = verdicts[-ray].status == "InSigma" or flip.status == "InSigma"
        if not (pos or neg):
            uncovered.append(ray)
    if not uncovered and fin.status == "FiniteOverK":
        overall, witness = "TameCertified", None
    elif uncovered and fin.status == "NotFinite":
        overall = "NotTame"
        witness = {
            "ray": list(uncovered[0].weights),
            "both_rays": "NotCertified",
            "finiteness": fin.detail,
        }
    else:
        overall = "Unknown"
        witness = {"uncovered": [list(r.weights) for r in uncovered], "finiteness": fin.status}
    return TamenessReport([verdicts[r] for r in rays], flipped, fin, overall, witness)
