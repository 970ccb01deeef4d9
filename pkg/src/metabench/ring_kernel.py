"""Coefficient rings, finitely generated abelian groups and their group algebras.

The group algebra K[A] of A = Z^r + Z/m_1 + ... + Z/m_s is modelled as the
polynomial quotient K[x_1..x_r, y_1..y_r, t_1..t_s] / (x_j y_j - 1, t_k^m_k - 1).
Elements are dicts mapping exponent tuples to coefficients, always kept in the
canonical Laurent form (no monomial contains both x_j and y_j, torsion
exponents reduced). Groebner bases are strong bases over Z (with the modulus
added as a generator for Z/p^k) and ordinary bases over fields.
"""

from __future__ import annotations

import heapq
import hashlib
import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm

from .linalg import factorize, is_prime, smith_diagonal, xgcd

DEFAULT_DEGREE_BOUND = 64


class CapabilityError(Exception):
    """The requested computation is outside the supported coefficient matrix."""


class StaleBasisError(Exception):
    """A cached basis was computed under a different monomial order."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class DegreeBoundExceeded(Exception):
    """Raised inside Groebner loops when the configured degree bound is hit."""


@dataclass(frozen=True)
class Inconclusive:
    """Typed 'no answer within bounds' result. Never a wrong certificate."""

    reason: str
    detail: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"status": "Inconclusive", "reason": self.reason, **self.detail}


# ---------------------------------------------------------------------------
# coefficient rings


class CoefficientRing:
    """One of Z, Q, Z/m or Z[J^-1]."""

    def __init__(self, kind: str, modulus: int | None = None, primes: tuple[int, ...] = ()):
        if kind not in ("Z", "Q", "Zmod", "ZJ"):
            raise ValueError(f"unknown coefficient kind {kind!r}")
        if kind == "Zmod" and (modulus is None or modulus < 2):
            raise ValueError("Z/m needs m >= 2")
        if kind == "ZJ":
            primes = tuple(sorted(set(primes)))
            for p in primes:
                if not is_prime(p):
                    raise ValueError(f"{p} is not prime")
        self.kind = kind
        self.modulus = modulus if kind == "Zmod" else None
        self.primes = primes if kind == "ZJ" else ()

    @classmethod
    def integers(cls):
        return cls("Z")

    @classmethod
    def rationals(cls):
        return cls("Q")

    @classmethod
    def mod(cls, m: int):
        return cls("Zmod", modulus=m)

    @classmethod
    def localized(cls, primes):
        return cls("ZJ", primes=tuple(primes))

    def __eq__(self, other):
        return isinstance(other, CoefficientRing) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def _key(self):
        return (self.kind, self.modulus, self.primes)

    def __repr__(self):
        if self.kind == "Zmod":
            return f"Z/{self.modulus}"
        if self.kind == "ZJ":
            return "Z[1/" + ",1/".join(map(str, self.primes)) + "]"
        return self.kind

    @property
    def is_field(self) -> bool:
        return self.kind == "Q" or (self.kind == "Zmod" and is_prime(self.modulus))

    @property
    def is_artinian(self) -> bool:
        return self.kind == "Zmod" or self.kind == "Q"

    @property
    def prime_power(self) -> tuple[int, int] | None:
        if self.kind != "Zmod":
            return None
        f = factorize(self.modulus)
        if len(f) != 1:
            return None
        (p, k), = f.items()
        return p, k

    def ideal_chain(self) -> list[int]:
        """Generators p, p^2, ..., p^k of the ideal chain of Z/p^k."""
        pk = self.prime_power
        if pk is None:
            raise CapabilityError(f"{self} is not a prime-power residue ring")
        p, k = pk
        return [p ** j for j in range(1, k + 1)]

    def canonical(self, x):
        if self.kind == "Z":
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise DomainError(f"{x} is not an integer")
                x = x.numerator
            return int(x)
        if self.kind == "Zmod":
            if isinstance(x, Fraction):
                x = x.numerator * pow(x.denominator, -1, self.modulus)
            return int(x) % self.modulus
        x = Fraction(x)
        if self.kind == "ZJ":
            d = x.denominator
            for p in self.primes:
                while d % p == 0:
                    d //= p
            if d != 1:
                raise DomainError(f"{x} has a denominator outside {self.primes}")
        return x

    def is_unit(self, x) -> bool:
        if x == 0:
            return False
        if self.kind == "Z":
            return abs(x) == 1
        if self.kind == "Q":
            return True
        if self.kind == "Zmod":
            return gcd(int(x), self.modulus) == 1
        num = abs(Fraction(x).numerator)
        for p in self.primes:
            while num % p == 0:
                num //= p
        return num == 1

    def gb_domain(self) -> tuple[str, int | None]:
        """How Groebner computations run over this ring.

        ('Z', None) strong bases over Z, ('Z', p^k) strong bases with p^k
        adjoined, ('Fp', p) field bases mod p, ('Q', None) rational bases.
        """
        if self.kind == "Z":
            return ("Z", None)
        if self.kind == "Q":
            return ("Q", None)
        if self.kind == "Zmod":
            m = self.modulus
            if is_prime(m):
                return ("Fp", m)
            if self.prime_power is not None:
                return ("Z", m)
            raise CapabilityError(
                f"Groebner bases over {self} are not supported; split Z/{m} into "
                f"prime-power components {sorted(factorize(m))} by CRT first"
            )
        raise CapabilityError(f"Groebner bases over {self} are not supported")

    def to_json(self):
        if self.kind == "Zmod":
            return {"kind": "Zmod", "modulus": self.modulus}
        if self.kind == "ZJ":
            return {"kind": "ZJ", "primes": list(self.primes)}
        return {"kind": self.kind}


# ---------------------------------------------------------------------------
# abelian groups


class AbelianStructure:
    """Z^r + Z/m_1 + ... + Z/m_s with m_1 | m_2 | ... (canonicalized)."""

    def __init__(self, free_rank: int = 0, torsion_orders=()):
        if free_rank < 0:
            raise ValueError("free rank must be non-negative")
        tors = [int(m) for m in torsion_orders]
        if any(m < 1 for m in tors):
            raise ValueError("torsion orders must be positive")
        diag = smith_diagonal([[m if i == j else 0 for j in range(len(tors))] for i, m in enumerate(tors)], len(tors))
        self.free_rank = free_rank
        self.torsion_orders = tuple(m for m in diag if m > 1)

    def __eq__(self, other):
        return isinstance(other, AbelianStructure) and (self.free_rank, self.torsion_orders) == (
            other.free_rank,
            other.torsion_orders,
        )

    def __hash__(self):
        return hash((self.free_rank, self.torsion_orders))

    def __repr__(self):
        parts = ["Z"] * self.free_rank + [f"Z/{m}" for m in self.torsion_orders]
        return " + ".join(parts) if parts else "0"

    @property
    def ngens(self) -> int:
        return self.free_rank + len(self.torsion_orders)

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    @property
    def order(self) -> int | None:
        if not self.is_finite:
            return None
        out = 1
        for m in self.torsion_orders:
            out *= m
        return out

    def torsion_exponent_T(self, n: int) -> int:
        """Least T with: a^(n^(T+1)) = 1 implies a^(n^T) = 1 for every a."""
        if n < 2:
            raise ValueError("n must be at least 2")
        t = 0
        while any(gcd(n ** t, m) != gcd(n ** (t + 1), m) for m in self.torsion_orders):
            t += 1
        return t

    def elements(self):
        """All elements of a finite group as exponent tuples."""
        if not self.is_finite:
            raise DomainError("infinite group")
        return itertools.product(*(range(m) for m in self.torsion_orders))

    def to_json(self):
        return {"free_rank": self.free_rank, "torsion_orders": list(self.torsion_orders)}


# ---------------------------------------------------------------------------
# monomial orders


class MonomialOrder:
    """Degree-compatible order: total degree, then weight, then reverse lex."""

    def __init__(self, nvars: int, weights=None):
        self.nvars = nvars
        if weights is None:
            self.weights = None
        else:
            ws = [Fraction(w) for w in weights]
            if len(ws) != nvars:
                raise ValueError("weight vector has the wrong length")
            den = lcm(*(w.denominator for w in ws)) if ws else 1
            self.weights = tuple(int(w * den) for w in ws)
        self.key = lru_cache(maxsize=None)(self._key)

    def _key(self, mono):
        deg = sum(mono)
        rev = tuple(-e for e in reversed(mono))
        if self.weights is None:
            return (deg, rev)
        return (deg, sum(w * e for w, e in zip(self.weights, mono)), rev)

    def signature(self) -> str:
        return f"grevlex{self.nvars}" + ("" if self.weights is None else f"w{self.weights}")

    def __eq__(self, other):
        return isinstance(other, MonomialOrder) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())


# ---------------------------------------------------------------------------
# group algebra


def _mono_div(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


class AlgebraPresentation:
    """K[A] as a Laurent-type quotient ring with a fixed monomial order."""

    def __init__(self, coefficients: CoefficientRing, group: AbelianStructure, weights=None):
        self.coefficients = coefficients
        self.group = group
        self.r = group.free_rank
        self.s = len(group.torsion_orders)
        self.nvars = 2 * self.r + self.s
        self.order = MonomialOrder(self.nvars, weights)
        self.var_names = (
            [f"x{j + 1}" for j in range(self.r)]
            + [f"y{j + 1}" for j in range(self.r)]
            + [f"t{k + 1}" for k in range(self.s)]
        )

    # -- identity -----------------------------------------------------------
    def signature(self) -> str:
        return f"{self.coefficients}|{self.group}|{self.order.signature()}"

    def __eq__(self, other):
        return isinstance(other, AlgebraPresentation) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())

    def __repr__(self):
        return f"{self.coefficients}[{self.group}]"

    def with_order(self, weights) -> "AlgebraPresentation":
        return AlgebraPresentation(self.coefficients, self.group, weights)

    def with_coefficients(self, coefficients: CoefficientRing) -> "AlgebraPresentation":
        return AlgebraPresentation(coefficients, self.group, self.order.weights)

    # -- monomials ----------------------------------------------------------
    def canonical_mono(self, mono) -> tuple:
        r = self.r
        m = list(mono)
        for j in range(r):
            a, b = m[j], m[r + j]
            if a and b:
                if a >= b:
                    m[j], m[r + j] = a - b, 0
                else:
                    m[j], m[r + j] = 0, b - a
        for k, mk in enumerate(self.group.torsion_orders):
            m[2 * r + k] %= mk
        return tuple(m)

    def laurent(self, mono) -> tuple:
        """Group element of a monomial: (free exponents..., torsion residues...)."""
        r = self.r
        return tuple(mono[j] - mono[r + j] for j in range(r)) + tuple(
            mono[2 * r + k] % mk for k, mk in enumerate(self.group.torsion_orders)
        )

    def mono_of(self, exps) -> tuple:
        r = self.r
        exps = list(exps)
        if len(exps) != self.r + self.s:
            raise ValueError("group element has the wrong length")
        m = [0] * self.nvars
        for j in range(r):
            if exps[j] >= 0:
                m[j] = exps[j]
            else:
                m[r + j] = -exps[j]
        for k, mk in enumerate(self.group.torsion_orders):
            m[2 * r + k] = exps[r + k] % mk
        return tuple(m)

    # -- elements -----------------------------------------------------------
    def elem(self, terms) -> dict:
        """Canonical element from {monomial: coeff} in polynomial coordinates."""
        out: dict = {}
        canon = self.coefficients.canonical
        for mono, c in terms.items():
            mm = self.canonical_mono(mono)
            out[mm] = out.get(mm, 0) + c
        res = {}
        for mm, c in out.items():
            c = canon(c)
            if c != 0:
                res[mm] = c
        return res

    def from_laurent(self, terms) -> dict:
        """Element from {group exponent tuple: coeff}."""
        acc: dict = {}
        for exps, c in terms.items():
            m = self.mono_of(exps)
            acc[m] = acc.get(m, 0) + c
        return self.elem(acc)

    def to_laurent(self, f) -> dict:
        return {self.laurent(m): c for m, c in f.items()}

    def zero(self) -> dict:
        return {}

    def one(self) -> dict:
        return self.const(1)

    def const(self, c) -> dict:
        return self.elem({(0,) * self.nvars: c})

    def group_element(self, exps) -> dict:
        return self.from_laurent({tuple(exps): 1})

    def gen(self, i: int, power: int = 1) -> dict:
        """The i-th group generator (free ones first) raised to power."""
        e = [0] * (self.r + self.s)
        e[i] = power
        return self.group_element(e)

    def add(self, f, g) -> dict:
        out = dict(f)
        canon = self.coefficients.canonical
        for m, c in g.items():
            v = canon(out.get(m, 0) + c)
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return out

    def neg(self, f) -> dict:
        return self.scale(f, -1)

    def sub(self, f, g) -> dict:
        return self.add(f, self.neg(g))

    def scale(self, f, c) -> dict:
        canon = self.coefficients.canonical
        out = {}
        for m, v in f.items():
            w = canon(v * c)
            if w:
                out[m] = w
        return out

    def mul(self, f, g) -> dict:
        acc: dict = {}
        for m1, c1 in f.items():
            for m2, c2 in g.items():
                mm = self.canonical_mono(tuple(a + b for a, b in zip(m1, m2)))
                acc[mm] = acc.get(mm, 0) + c1 * c2
        canon = self.coefficients.canonical
        out = {}
        for m, c in acc.items():
            c = canon(c)
            if c:
                out[m] = c
        return out

    def power(self, f, k: int) -> dict:
        out = self.one()
        for _ in range(k):
            out = self.mul(out, f)
        return out

    def sum(self, elems) -> dict:
        out: dict = {}
        for e in elems:
            out = self.add(out, e)
        return out

    def augmentation(self, f):
        """Image under the ring map sending every group element to 1."""
        return self.coefficients.canonical(sum(f.values()))

    def antipode(self, f) -> dict:
        """The involution induced by a -> a^-1."""
        return self.from_laurent({tuple(-e for e in self.laurent(m)): c for m, c in f.items()})

    def degree(self, f) -> int:
        return max((sum(m) for m in f), default=0)

    def random_element(self, rng: random.Random, max_degree: int = 2, nterms: int = 3, coeff_bound: int = 3) -> dict:
        terms = {}
        for _ in range(nterms):
            exps = [rng.randint(-max_degree, max_degree) for _ in range(self.r)]
            exps += [rng.randrange(m) for m in self.group.torsion_orders]
            terms[tuple(exps)] = terms.get(tuple(exps), 0) + rng.randint(-coeff_bound, coeff_bound)
        return self.from_laurent(terms)

    def defining_relations(self) -> list[dict]:
        """x_j y_j - 1 and t_k^m_k - 1, written without canonicalization."""
        rels = []
        zero = (0,) * self.nvars
        for j in range(self.r):
            m = [0] * self.nvars
            m[j] = 1
            m[self.r + j] = 1
            rels.append({tuple(m): 1, zero: -1})
        for k, mk in enumerate(self.group.torsion_orders):
            m = [0] * self.nvars
            m[2 * self.r + k] = mk
            rels.append({tuple(m): 1, zero: -1})
        return rels

    # -- serialization --------------------------------------------------------
    def serialize(self, f) -> list:
        """Canonical list of (coefficient, group exponent vector) pairs."""
        items = []
        for m, c in f.items():
            cc = str(c) if isinstance(c, Fraction) else int(c)
            items.append((cc, list(self.laurent(m))))
        items.sort(key=lambda t: (t[1], str(t[0])))
        return items

    def deserialize(self, items) -> dict:
        return self.from_laurent({tuple(e): Fraction(c) if isinstance(c, str) else c for c, e in items})

    def format(self, f) -> str:
        if not f:
            return "0"
        names = [f"a{i + 1}" for i in range(self.r + self.s)] if self.r + self.s > 1 else ["t"]
        parts = []
        for c, exps in self.serialize(f):
            mono = "*".join(
                f"{names[i]}" + (f"^{e}" if e != 1 else "") for i, e in enumerate(exps) if e != 0
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts)


def make_group_algebra(K: CoefficientRing, A: AbelianStructure, weights=None) -> AlgebraPresentation:
    """Build K[A]; the Groebner capability of K is checked eagerly for Z/m."""
    alg = AlgebraPresentation(K, A, weights)
    if K.kind == "Zmod":
        K.gb_domain()  # raises CapabilityError for composite non-prime-power moduli
    return alg


# ---------------------------------------------------------------------------
# Groebner engine over vectors {(component, monomial): coeff}


class GroebnerEngine:
    """Strong Groebner bases of submodules of A^ncomps, position-over-term.

    Component 0 is the largest position, so elements whose leading term sits
    in the last component have no entries in earlier components; this is
    what elimination and transporter computations rely on.
    """

    def __init__(self, algebra: AlgebraPresentation, ncomps: int, degree_bound: int = DEFAULT_DEGREE_BOUND):
        self.alg = algebra
        self.ncomps = ncomps
        self.domain, self.modulus = algebra.coefficients.gb_domain()
        self.order = algebra.order
        self.degree_bound = degree_bound
        okey = self.order.key
        self._key = lru_cache(maxsize=None)(lambda km: (-km[0], okey(km[1])))

    # -- coefficient arithmetic ----------------------------------------------
    def _norm(self, c):
        if self.domain == "Fp":
            return c % self.modulus
        if self.domain == "Q":
            return Fraction(c)
        return c

    def _clean(self, f: dict) -> dict:
        out = {}
        for k, c in f.items():
            c = self._norm(c)
            if c:
                out[k] = c
        return out

    def lead(self, f: dict):
        km = max(f, key=self._key)
        return km, f[km]

    def _monic(self, f: dict) -> dict:
        if not f:
            return f
        _, c = self.lead(f)
        if self.domain == "Fp":
            inv = pow(c, -1, self.modulus)
            return {k: (v * inv) % self.modulus for k, v in f.items()}
        if self.domain == "Q":
            return {k: v / c for k, v in f.items()}
        if c < 0:
            return {k: -v for k, v in f.items()}
        return f

    def _shift_sub(self, f: dict, q, shift, g: dict) -> None:
        """f -= q * x^shift * g, in place."""
        for (comp, mono), c in g.items():
            key = (comp, tuple(a + b for a, b in zip(mono, shift)))
            v = self._norm(f.get(key, 0) - q * c)
            if v:
                f[key] = v
            else:
                f.pop(key, None)

    def _find_reducer(self, km, basis):
        comp, mono = km
        best = None
        for b in basis:
            bcomp, bmono = b[0]
            if bcomp == comp and _mono_div(bmono, mono):
                if self.domain != "Z":
                    return b
                if best is None or b[1] < best[1]:
                    best = b
                    if best[1] == 1:
                        break
        return best

    def reduce(self, f: dict, basis) -> dict:
        """Full (tail) reduction; Euclidean on coefficients over Z."""
        f = self._clean(f)
        out = {}
        while f:
            km = max(f, key=self._key)
            c = f[km]
            red = self._find_reducer(km, basis)
            if red is None:
                out[km] = f.pop(km)
                continue
            (bcomp, bmono), lc, g = red
            if self.domain == "Z":
                q = c // lc
                if q == 0:
                    out[km] = f.pop(km)
                    continue
            elif self.domain == "Fp":
                q = c * pow(lc, -1, self.modulus) % self.modulus
            else:
                q = c / lc
            shift = tuple(a - b for a, b in zip(km[1], bmono))
            self._shift_sub(f, q, shift, g)
            if self.domain == "Z" and km in f:
                out[km] = f.pop(km)
        return out

    def _entry(self, f):
        f = self._monic(f)
        km, c = self.lead(f)
        return (km, c, f)

    def compute(self, gens, extra_ring_relations: bool = True) -> list[dict]:
        """Reduced strong Groebner basis of the submodule spanned by gens."""
        polys = [self._clean(g) for g in gens]
        if extra_ring_relations:
            for comp in range(self.ncomps):
                for rel in self.alg.defining_relations():
                    polys.append({(comp, m): c for m, c in rel.items()})
                if self.modulus is not None:
                    polys.append({(comp, (0,) * self.alg.nvars): self.modulus})
        basis: list = []
        pairs: list = []
        counter = itertools.count()

        def add(f):
            f = self.reduce(f, basis)
            if not f:
                return
            entry = self._entry(f)
            km = entry[0]
            if sum(km[1]) > self.degree_bound:
                raise DegreeBoundExceeded(f"basis element of degree {sum(km[1])}")
            for other in basis:
                if other[0][0] != km[0]:
                    continue
                l = tuple(max(a, b) for a, b in zip(km[1], other[0][1]))
                heapq.heappush(pairs, (sum(l), next(counter), entry, other))
            basis.append(entry)

        # seed with the generators sorted small-first for determinism
        for f in sorted((p for p in polys if p), key=lambda p: self._key(self.lead(p)[0])):
            add(f)
        while pairs:
            _, _, e1, e2 = heapq.heappop(pairs)
            if not any(e1 is b for b in basis) or not any(e2 is b for b in basis):
                # entries are never removed, so this only guards reuse
                pass
            for s in self._pair_polys(e1, e2):
                add(s)
        return self._interreduce(basis)

    def _pair_polys(self, e1, e2):
        (comp, m1), a, f = e1
        (_, m2), b, g = e2
        l = tuple(max(x, y) for x, y in zip(m1, m2))
        s1 = tuple(x - y for x, y in zip(l, m1))
        s2 = tuple(x - y for x, y in zip(l, m2))
        coprime = all(x == 0 or y == 0 for x, y in zip(m1, m2))
        out = []
        if self.domain != "Z":
            if coprime and self.ncomps == 1:
                return out
            s = {}
            self._shift_sub(s, -1, s1, f)
            self._shift_sub(s, 1, s2, g)
            out.append(s)
            return out
        if coprime and a == 1 and b == 1 and self.ncomps == 1:
            return out
        L = a * b // gcd(a, b)
        s = {}
        self._shift_sub(s, -(L // a), s1, f)
        self._shift_sub(s, L // b, s2, g)
        out.append(s)
        if a % b != 0 and b % a != 0:
            d, u, v = xgcd(a, b)
            gp = {}
            self._shift_sub(gp, -u, s1, f)
            self._shift_sub(gp, -v, s2, g)
            out.append(gp)
        return out

    def _interreduce(self, basis) -> list[dict]:
        # drop elements whose leading term is divisible by another's
        keep = []
        for i, (km, c, f) in enumerate(basis):
            redundant = False
            for j, (km2, c2, _) in enumerate(basis):
                if i == j or km2[0] != km[0] or not _mono_div(km2[1], km[1]):
                    continue
                divides = (self.domain != "Z") or (c % c2 == 0)
                if not divides:
                    continue
                if km2 != km or c2 != c or j < i:
                    redundant = True
                    break
            if not redundant:
                keep.append((km, c, f))
        out = []
        for i, (km, c, f) in enumerate(keep):
            others = keep[:i] + keep[i + 1:]
            tail = {k: v for k, v in f.items() if k != km}
            red = self.reduce(tail, others)
            g = dict(red)
            g[km] = c
            out.append(self._entry(self._clean(g)))
        out.sort(key=lambda e: (self._key(e[0]), str(e[1])), reverse=True)
        return [e[2] for e in out]

    def basis_entries(self, basis: list[dict]):
        return [self._entry(f) for f in basis]


# ---------------------------------------------------------------------------
# ideals


def _poly_to_vec(f, comp=0):
    return {(comp, m): c for m, c in f.items()}


def _vec_to_poly(v):
    return {m: c for (_, m), c in v.items()}


class IdealTag:
    """Descriptive tags: Augmentation, AugmentationModN(n), Power(base, k), General."""

    def __init__(self, kind: str, n: int | None = None, base: "IdealTag | None" = None, k: int | None = None):
        self.kind, self.n, self.base, self.k = kind, n, base, k

    def __repr__(self):
        if self.kind == "AugmentationModN":
            return f"AugmentationModN({self.n})"
        if self.kind == "Power":
            return f"Power({self.base!r}, {self.k})"
        return self.kind


# optional persistent cache of bases; set by the command-line front end
_BASIS_CACHE = None
CACHE_STATS = {"hits": 0, "misses": 0, "rejected": 0}


def set_basis_cache(cache) -> None:
    global _BASIS_CACHE
    _BASIS_CACHE = cache


def _cache_key(algebra: AlgebraPresentation, ncomps: int, gens) -> str:
    payload = json.dumps(
        {
            "ring": algebra.signature(),
            "ncomps": ncomps,
            "gens": sorted(
                json.dumps(sorted([[c, list(k[1]), k[0]] for k, c in g.items()], key=str), default=str)
                for g in gens
            ),
        },
        sort_keys=True,
        default=str,
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def compute_basis(algebra: AlgebraPresentation, ncomps: int, gens, degree_bound: int = DEFAULT_DEGREE_BOUND):
    """Reduced basis of the submodule of A^ncomps generated by gens (vectors)."""
    eng = GroebnerEngine(algebra, ncomps, degree_bound)
    key = None
    if _BASIS_CACHE is not None:
        key = _cache_key(algebra, ncomps, gens)
        cached = _BASIS_CACHE.get(key)
        if cached is not None:
            entries = eng.basis_entries(cached)
            # re-verify before use: every generator must reduce to zero
            if all(not eng.reduce(g, entries) for g in gens):
                CACHE_STATS["hits"] += 1
                return eng, cached
            CACHE_STATS["rejected"] += 1
        CACHE_STATS["misses"] += 1
    basis = eng.compute(gens)
    if _BASIS_CACHE is not None and key is not None:
        _BASIS_CACHE.put(key, basis)
    return eng, basis


class IdealHandle:
    """An ideal of K[A] with a cached Groebner basis and the order it used."""

    def __init__(self, algebra: AlgebraPresentation, generators, tag: IdealTag | None = None,
                 degree_bound: int = DEFAULT_DEGREE_BOUND):
        self.algebra = algebra
        self.generators = tuple(algebra.elem(g) for g in generators)
        self.generators = tuple(g for g in self.generators if g)
        self.tag = tag or IdealTag("General")
        self.order_signature = algebra.order.signature()
        self._engine, basis = compute_basis(
            algebra, 1, [_poly_to_vec(g) for g in self.generators], degree_bound
        )
        self._entries = self._engine.basis_entries(basis)
        self.basis = tuple(_vec_to_poly(b) for b in basis)

    def __repr__(self):
        return f"IdealHandle({self.tag!r}, {len(self.basis)} basis elements)"

    def reduce(self, f) -> dict:
        f = self.algebra.elem(f)
        return self.algebra.elem(_vec_to_poly(self._engine.reduce(_poly_to_vec(f), self._entries)))

    def contains(self, f) -> bool:
        return not self.reduce(f)

    def is_unit_ideal(self) -> bool:
        return self.contains(self.algebra.one())

    def verify(self) -> bool:
        """All input generators reduce to zero against the cached basis."""
        return all(self.contains(g) for g in self.generators)

    def is_subset_of(self, other: "IdealHandle") -> bool:
        return all(other.contains(g) for g in self.generators)

    def equals(self, other: "IdealHandle") -> bool:
        return self.is_subset_of(other) and other.is_subset_of(self)

    def leading_data(self):
        """(leading monomial, leading coefficient) of each basis element."""
        return [(km[1], c) for km, c, _ in self._entries]


def normal_form(elem, ideal: IdealHandle, order: MonomialOrder | None = None) -> dict:
    """Unique reduced representative of elem modulo ideal."""
    active = order if order is not None else ideal.algebra.order
    if active.signature() != ideal.order_signature:
        raise StaleBasisError(
            f"basis computed under {ideal.order_signature}, requested {active.signature()}"
        )
    return ideal.reduce(elem)


def groebner_basis(algebra: AlgebraPresentation, gens, tag: IdealTag | None = None,
                   degree_bound: int = DEFAULT_DEGREE_BOUND) -> IdealHandle:
    return IdealHandle(algebra, gens, tag, degree_bound)


def augmentation_ideal(algebra: AlgebraPresentation) -> IdealHandle:
    gens = [algebra.sub(algebra.gen(i), algebra.one()) for i in range(algebra.r + algebra.s)]
    return IdealHandle(algebra, gens, IdealTag("Augmentation"))


def augmentation_ideal_mod(algebra: AlgebraPresentation, n: int) -> IdealHandle:
    """I_n = I + (n), the kernel of K[A] -> K/n."""
    gens = [algebra.sub(algebra.gen(i), algebra.one()) for i in range(algebra.r + algebra.s)]
    gens.append(algebra.const(n))
    return IdealHandle(algebra, gens, IdealTag("AugmentationModN", n=n))


def power_generators(algebra: AlgebraPresentation, gens, k: int) -> list[dict]:
    """All k-fold products of gens (multisets), canonicalized."""
    if k == 0:
        return [algebra.one()]
    out = []
    seen = set()
    for combo in itertools.combinations_with_replacement(range(len(gens)), k):
        f = algebra.one()
        for i in combo:
            f = algebra.mul(f, gens[i])
        key = tuple(sorted(f.items(), key=str))
        if f and key not in seen:
            seen.add(key)
            out.append(f)
    return out


def ideal_power(ideal: IdealHandle, k: int) -> IdealHandle:
    """The k-th power, generated by k-fold products of the generators."""
    alg = ideal.algebra
    if k == 1:
        return ideal
    gens = power_generators(alg, list(ideal.generators), k)
    return IdealHandle(alg, gens, IdealTag("Power", base=ideal.tag, k=k))


def ideal_sum(a: IdealHandle, b: IdealHandle) -> IdealHandle:
    return IdealHandle(a.algebra, list(a.generators) + list(b.generators))


def ideal_product(a: IdealHandle, b: IdealHandle) -> IdealHandle:
    alg = a.algebra
    return IdealHandle(alg, [alg.mul(f, g) for f in a.generators for g in b.generators])


def transporter(algebra: AlgebraPresentation, ncomps: int, submodule_vectors, vector) -> IdealHandle:
    """{lam : vector*lam in submodule} for a submodule of A^ncomps.

    Eliminates the first ncomps positions from the module generated by
    (vector, 1) and (s, 0) for s in the submodule.
    """
    last = ncomps
    gens = [dict(s) for s in submodule_vectors]
    v = dict(vector)
    v[(last, (0,) * algebra.nvars)] = 1
    gens.append(v)
    eng, basis = compute_basis(algebra, ncomps + 1, gens)
    quot = []
    for b in basis:
        if all(k[0] == last for k in b):
            quot.append({m: c for (_, m), c in b.items()})
    return IdealHandle(algebra, quot)


def ideal_quotient(a: IdealHandle, b: IdealHandle) -> IdealHandle:
    """(a : b) = {f : f*b in a}, as an intersection of single transporters."""
    alg = a.algebra
    avecs = [_poly_to_vec(g) for g in a.generators]
    result = None
    for g in b.generators:
        q = transporter(alg, 1, avecs, _poly_to_vec(g))
        result = q if result is None else ideal_intersection(result, q)
    return result if result is not None else IdealHandle(alg, [alg.one()])


def ideal_intersection(a: IdealHandle, b: IdealHandle) -> IdealHandle:
    alg = a.algebra
    one = (0,) * alg.nvars
    subs = [_poly_to_vec(g, 0) for g in a.generators] + [_poly_to_vec(g, 1) for g in b.generators]
    vec = {(0, one): 1, (1, one): 1}
    return transporter(alg, 2, subs, vec)


def antipode_ideal(ideal: IdealHandle) -> IdealHandle:
    alg = ideal.algebra
    return IdealHandle(alg, [alg.antipode(g) for g in ideal.generators])


def quotient_structure(ideal: IdealHandle, max_monomials: int = 20000):
    """Additive structure of K[A]/ideal from the basis staircase.

    Returns ('finite', factors) with the cyclic factor orders over Z (or the
    K-dimension over a field), or ('infinite', witness) when the staircase of
    unit-leading-coefficient terms is infinite.
    """
    alg = ideal.algebra
    dom, _ = alg.coefficients.gb_domain()
    lead = ideal.leading_data()
    unit = [m for m, c in lead if dom != "Z" or c == 1]
    nv = alg.nvars
    if any(not any(m) for m in unit):
        return ("finite", [])
    # finite staircase iff every variable has a pure power among unit leads
    bounds = []
    for v in range(nv):
        pures = [m[v] for m in unit if all(m[u] == 0 for u in range(nv) if u != v) and m[v] > 0]
        if not pures:
            return ("infinite", {"variable": alg.var_names[v]})
        bounds.append(min(pures))
    factors = []
    count = 0
    for mono in itertools.product(*(range(b) for b in bounds)):
        if any(_mono_div(m, mono) for m in unit):
            continue
        count += 1
        if count > max_monomials:
            raise DegreeBoundExceeded("staircase too large")
        if dom == "Z":
            lcs = [c for m, c in lead if _mono_div(m, mono)]
            if not lcs:
                return ("infinite", {"monomial": mono})
            factors.append(min(lcs))
        else:
            factors.append(0)
    return ("finite", factors)
