"""Truncated binomial powers, the completion map theta, and finite models.

For A free abelian and coefficients Z[1/J], the quotient K[A]/I^m is the
truncated polynomial ring K[u_1..u_r]/(u)^m with u_j = t_j - 1. Elements
of the truncated completion are kept in these u-coordinates with exact
Fraction coefficients.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

from .linalg import factorize
from .module_engine import (
    FiniteModel,
    KModuleInvariants,
    MatrixActionModule,
    ModulePresentation,
    annihilator,
    exterior_coinvariants,
    quotient_by_ideal_power,
    stabilization_index,
    twisted_exterior_square,
)
from .ring_kernel import (
    AbelianStructure,
    AlgebraPresentation,
    CapabilityError,
    CoefficientRing,
    DomainError,
    IdealHandle,
    Inconclusive,
    antipode_ideal,
    augmentation_ideal,
    ideal_sum,
    make_group_algebra,
    quotient_structure,
)


# ---------------------------------------------------------------------------
# scalars


def _outside_support(q: Fraction, primes) -> list:
    return sorted(set(factorize(Fraction(q).denominator)) - set(primes))


def check_input_support(q: Fraction, primes) -> None:
    """User-supplied exponents must have denominators in J."""
    bad = _outside_support(q, primes)
    if bad:
        raise DomainError(f"denominator of {q} has primes {bad} outside {sorted(primes)}")


def check_support(q: Fraction, primes) -> None:
    """Computed values with denominators outside J indicate a bug."""
    bad = _outside_support(q, primes)
    if bad:
        raise AssertionError(f"denominator of {q} has primes {bad} outside {sorted(primes)}")


def binomial_coeff_rational(alpha, k: int, primes=()) -> Fraction:
    """alpha (alpha-1) ... (alpha-k+1) / k!, exactly.

    When primes is given the denominator of alpha is checked to lie in it,
    and then so must the result's.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    alpha = Fraction(alpha)
    num = Fraction(1)
    for j in range(k):
        num *= alpha - j
    out = num / factorial(k)
    if primes:
        check_input_support(alpha, primes)
        check_support(out, primes)
    return out


# ---------------------------------------------------------------------------
# truncated completion of K[Z^r]


class TruncatedRing:
    """Z[1/J][u_1..u_r] / (u)^m: the group algebra of Z^r modulo I^m."""

    def __init__(self, rank: int, level: int, primes=()):
        if level < 1:
            raise ValueError("truncation level must be at least 1")
        self.rank = rank
        self.level = level
        self.primes = tuple(sorted(set(primes)))

    def __eq__(self, other):
        return isinstance(other, TruncatedRing) and (self.rank, self.level, self.primes) == (
            other.rank,
            other.level,
            other.primes,
        )

    def __hash__(self):
        return hash((self.rank, self.level, self.primes))

    def element(self, coeffs) -> "TruncatedAlgebraElement":
        out = {}
        for mono, c in dict(coeffs).items():
            if sum(mono) < self.level and c:
                out[tuple(mono)] = out.get(tuple(mono), 0) + Fraction(c)
        return TruncatedAlgebraElement(self, {k: v for k, v in out.items() if v})

    def one(self):
        return self.element({(0,) * self.rank: 1})

    def zero(self):
        return self.element({})

    def u(self, j: int):
        return self.element({tuple(int(i == j) for i in range(self.rank)): 1})

    def group_element(self, exps) -> "TruncatedAlgebraElement":
        """prod t_j^e_j with (1+u)^e expanded as a binomial series."""
        out = self.one()
        for j, e in enumerate(exps):
            series = {
                tuple(k if i == j else 0 for i in range(self.rank)): binomial_coeff_rational(e, k)
                for k in range(self.level)
            }
            out = out * self.element(series)
        return out

    def from_laurent(self, terms) -> "TruncatedAlgebraElement":
        """Image of sum c * t^exps (dict exps -> c) in the truncation."""
        out = self.zero()
        for exps, c in terms.items():
            out = out + self.group_element(exps).scale(c)
        return out

    def random_unipotent(self, rng: random.Random, nterms: int = 3, spread: int = 2):
        """Random x in 1 + I coming from a Laurent polynomial."""
        terms = {}
        for _ in range(nterms):
            exps = tuple(rng.randint(-spread, spread) for _ in range(self.rank))
            terms[exps] = terms.get(exps, 0) + rng.randint(-3, 3)
        total = sum(terms.values())
        zero = (0,) * self.rank
        terms[zero] = terms.get(zero, 0) + 1 - total
        return self.from_laurent(terms)


@dataclass(frozen=True)
class TruncatedAlgebraElement:
    ring: TruncatedRing
    coeffs: dict

    def _check(self, other):
        if self.ring != other.ring:
            raise ValueError("elements of different truncations")

    def __add__(self, other):
        self._check(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return self.ring.element(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        return self.ring.element({k: v * c for k, v in self.coeffs.items()})

    def __mul__(self, other):
        self._check(other)
        level = self.ring.level
        out: dict = {}
        for a, x in self.coeffs.items():
            da = sum(a)
            for b, y in other.coeffs.items():
                if da + sum(b) < level:
                    key = tuple(i + j for i, j in zip(a, b))
                    out[key] = out.get(key, 0) + x * y
        return self.ring.element(out)

    def __eq__(self, other):
        return isinstance(other, TruncatedAlgebraElement) and self.ring == other.ring and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.ring, tuple(sorted(self.coeffs.items()))))

    def power(self, k: int):
        out = self.ring.one()
        for _ in range(k):
            out = out * self
        return out

    def augmentation(self) -> Fraction:
        return self.coeffs.get((0,) * self.ring.rank, Fraction(0))

    def antipode(self):
        """sigma: t_j -> t_j^-1, i.e. u_j -> (1+u_j)^-1 - 1."""
        R = self.ring
        images = [R.group_element(tuple(-1 if i == j else 0 for i in range(R.rank))) - R.one() for j in range(R.rank)]
        out = R.zero()
        for mono, c in self.coeffs.items():
            term = R.one().scale(c)
            for j, e in enumerate(mono):
                term = term * images[j].power(e)
            out = out + term
        return out

    def denominators_ok(self) -> bool:
        primes = set(self.ring.primes)
        return all(set(factorize(c.denominator)) <= primes for c in self.coeffs.values())

    def __repr__(self):
        terms = " + ".join(f"{c}*u^{m}" for m, c in sorted(self.coeffs.items()))
        return f"<{terms or 0} mod I^{self.ring.level}>"


def alpha_power(x: TruncatedAlgebraElement, alpha) -> TruncatedAlgebraElement:
    """x^[alpha] = sum_{k<m} binom(alpha, k) (x-1)^k for x in 1 + I."""
    if x.augmentation() != 1:
        raise DomainError("alpha powers need x in 1 + I")
    R = x.ring
    alpha = Fraction(alpha)
    if alpha.denominator != 1:
        check_input_support(alpha, R.primes)
    y = x - R.one()
    out = R.zero()
    yk = R.one()
    for k in range(R.level):
        out = out + yk.scale(binomial_coeff_rational(alpha, k, R.primes))
        yk = yk * y
    return out


def theta(ring: TruncatedRing, exps, alpha=1) -> TruncatedAlgebraElement:
    """theta(a x alpha) = a^[alpha] for the group element a = t^exps."""
    return alpha_power(ring.group_element(exps), alpha)


def theta_by_factors(ring: TruncatedRing, exps, alpha=1) -> TruncatedAlgebraElement:
    """Second route: product over generators of t_j^[alpha e_j]."""
    out = ring.one()
    for j, e in enumerate(exps):
        unit = tuple(int(i == j) for i in range(ring.rank))
        out = out * alpha_power(ring.group_element(unit), Fraction(alpha) * e)
    return out


def commutator(u: TruncatedAlgebraElement, v: TruncatedAlgebraElement) -> TruncatedAlgebraElement:
    """u v u^-1 v^-1 in the (commutative) truncation; inverses via x^[-1]."""
    return u * v * alpha_power(u, -1) * alpha_power(v, -1)


def in_power_of_augmentation(x: TruncatedAlgebraElement, n: int) -> bool:
    """Is x in I^n (all u-monomials of degree < n vanish)?"""
    return all(sum(m) >= n for m in x.coeffs)


def identity_suite(ring: TruncatedRing, x, alpha, beta) -> dict:
    """The three binomial power identities, each as an exact equality."""
    xa = alpha_power(x, alpha)
    return {
        "power_of_power": alpha_power(xa, beta) == alpha_power(x, Fraction(alpha) * Fraction(beta)),
        "product": xa * alpha_power(x, beta) == alpha_power(x, Fraction(alpha) + Fraction(beta)),
        "inverse": x * alpha_power(x, -1) == ring.one(),
    }


# ---------------------------------------------------------------------------
# power congruence


@dataclass(frozen=True)
class PowerCongruence:
    passed: bool
    n: int
    i: int
    witnesses: tuple
    counterexample: tuple | None = None

    def to_dict(self) -> dict:
        return {
            "status": "Pass" if self.passed else "Fail",
            "n": self.n,
            "i": self.i,
            "witnesses": [list(w) for w in self.witnesses],
            "counterexample": list(self.counterexample) if self.counterexample else None,
        }


def verify_power_congruence(n: int, i: int) -> PowerCongruence:
    """t^(n^(2i+1)) - 1 in (n, t-1)^i via n^(i-k) | C(N, k) for 1 <= k < i."""
    if n < 2 or i < 1:
        raise ValueError("need n >= 2 and i >= 1")
    N = n ** (2 * i + 1)
    witnesses = []
    for k in range(1, i):
        c = comb(N, k)
        d = n ** (i - k)
        if c % d:
            return PowerCongruence(False, n, i, tuple(witnesses), (k, c, d))
        witnesses.append((k, c, d, c // d))
    return PowerCongruence(True, n, i, tuple(witnesses))


def power_congruence_by_membership(n: int, i: int) -> bool:
    """Second route: reduce t^N - 1 modulo a basis of (n, t-1)^i over Z.

    t^N is formed by square-and-multiply with reduction at every step.
    """
    alg = make_group_algebra(CoefficientRing.integers(), AbelianStructure(1))
    t = alg.gen(0)
    base = alg.sub(t, alg.one())
    from .ring_kernel import power_generators

    ideal = IdealHandle(alg, power_generators(alg, [alg.const(n), base], i))
    N = n ** (2 * i + 1)
    result = alg.one()
    square = ideal.reduce(t)
    while N:
        if N & 1:
            result = ideal.reduce(alg.mul(result, square))
        N >>= 1
        if N:
            square = ideal.reduce(alg.mul(square, square))
    return not ideal.reduce(alg.sub(result, alg.one()))


def theta_mod_n_exponent(n: int, i: int) -> int:
    """Integer exponent used for theta over Z/n at stage i: n^(2i+1)."""
    return n ** (2 * i + 1)


# ---------------------------------------------------------------------------
# finite models of the completed twisted wedge


@dataclass
class WedgeCompletionModel:
    index: int
    model: ModulePresentation
    invariants: KModuleInvariants
    exterior_coinvariants: KModuleInvariants | None
    checks: dict

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "invariants": self.invariants.to_json(),
            "exterior_coinvariants": self.exterior_coinvariants.to_json() if self.exterior_coinvariants else None,
            "checks": self.checks,
        }


def certified_regime(M: ModulePresentation):
    """K-structure of Lambda/(Ann M + sigma Ann M) when it has finite length, else Inconclusive."""
    ann = annihilator(M)
    both = ideal_sum(ann, antipode_ideal(ann))
    quotient = ModulePresentation(M.algebra, 1, [[g] for g in both.generators], "regime")
    got = quotient.additive_structure()
    if isinstance(got, Inconclusive):
        return Inconclusive("quotient by the annihilators is not finitely generated", got.detail)
    if got.length is None:
        return Inconclusive("quotient by the annihilators has infinite length", {"structure": got.to_json()})
    return got


def _dense_exterior_coinvariants(M: ModulePresentation):
    """(wedge^2_K M)_A from the dense model when M is free over K."""
    fm = M.finite_model()
    if isinstance(fm, Inconclusive):
        return None
    K = M.algebra.coefficients
    modulus = fm.modulus or 0
    free_lattice = all(
        sum(1 for x in r if x) == 1 and max(abs(x) for x in r) in (modulus,) for r in fm.lattice
    )
    if not free_lattice or len(fm.lattice) != (fm.dim if modulus else 0):
        return None
    alg = M.algebra
    mats = [fm.actions[j] for j in range(alg.r)] + [fm.actions[2 * alg.r + k] for k in range(alg.s)]
    if not mats:
        return None
    return exterior_coinvariants(MatrixActionModule(fm.dim, mats), K)


def wedge_completion_model(M: ModulePresentation, bound: int = 8, max_radius: int = 4):
    """Stable index m of the twisted wedge and the model wedge(M / M I^m)."""
    regime = certified_regime(M)
    if isinstance(regime, Inconclusive):
        return regime
    I = augmentation_ideal(M.algebra)
    wedge = twisted_exterior_square(M, max_radius)
    if not wedge.stabilized:
        return Inconclusive("diagonal submodule did not stabilize", wedge.certificate)
    idx = stabilization_index(wedge.module, I, bound)
    if isinstance(idx, Inconclusive):
        return idx
    m = idx.index
    window = []
    for j in range(m, m + 3):
        w = twisted_exterior_square(quotient_by_ideal_power(M, I, j), max_radius)
        window.append(w.module.additive_structure())
    model = twisted_exterior_square(quotient_by_ideal_power(M, I, m), max_radius).module
    inv = model.additive_structure()
    checks = {
        "regime": regime.to_json(),
        "wedge_certificate": wedge.certificate,
        "stabilization": idx.certificate,
        "window_equal": all(w == window[0] for w in window),
    }
    return WedgeCompletionModel(m, model, inv, _dense_exterior_coinvariants(M), checks)
