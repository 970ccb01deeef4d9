"""Finitely presented right modules over a group algebra K[A].

A module is Lambda^n / (row span of the relation matrix); rows are vectors
of ring elements and the action is by right multiplication. Groebner data
for the relation submodule is computed lazily and cached on the instance.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field

from .linalg import abelian_invariants, factorize
from .ring_kernel import (
    AlgebraPresentation,
    CapabilityError,
    CoefficientRing,
    DegreeBoundExceeded,
    DomainError,
    IdealHandle,
    Inconclusive,
    _mono_div,
    compute_basis,
    power_generators,
    transporter,
    ideal_intersection,
)


# ---------------------------------------------------------------------------
# invariants of modules over the coefficient ring


class KModuleInvariants:
    """Isomorphism type of a finitely generated module over Z, Q, Z/m or Z[J^-1].

    Stored as free_rank copies of the coefficient ring plus a divisor chain
    of invariant factors (each > 1). Over Z/p a d-dimensional space has
    invariant factors (p,)*d.
    """

    def __init__(self, coefficients: CoefficientRing, free_rank: int = 0, invariant_factors=()):
        self.coefficients = coefficients
        facs = [int(f) for f in invariant_factors if int(f) != 1]
        if coefficients.kind == "Zmod":
            m = coefficients.modulus
            facs = [f for f in (_gcd_mod(f, m) for f in facs) if f != 1]
            facs += [m] * free_rank
            free_rank = 0
        if coefficients.kind == "Q":
            facs = []
        if coefficients.kind == "ZJ":
            facs = [_strip_primes(f, coefficients.primes) for f in facs]
            facs = [f for f in facs if f != 1]
        _, chain = abelian_invariants([[f if i == j else 0 for j in range(len(facs))] for i, f in enumerate(facs)], len(facs))
        self.free_rank = free_rank
        self.invariant_factors = tuple(chain)

    @classmethod
    def from_relations(cls, coefficients: CoefficientRing, rows, ngens: int) -> "KModuleInvariants":
        """Invariants of K^ngens / rowspan(rows) with integer (or residue) entries."""
        rows = [[_as_int(v) for v in r] for r in rows]
        if coefficients.kind == "Zmod":
            m = coefficients.modulus
            rows = rows + [[m if i == j else 0 for j in range(ngens)] for i in range(ngens)]
        if coefficients.kind == "Q":
            from .linalg import integer_rank

            return cls(coefficients, ngens - integer_rank(rows, ngens))
        free, facs = abelian_invariants(rows, ngens)
        return cls(coefficients, free, facs)

    def __eq__(self, other):
        return (
            isinstance(other, KModuleInvariants)
            and self.coefficients == other.coefficients
            and self.free_rank == other.free_rank
            and self.invariant_factors == other.invariant_factors
        )

    def __hash__(self):
        return hash((self.coefficients, self.free_rank, self.invariant_factors))

    def __repr__(self):
        parts = [str(self.coefficients)] * self.free_rank + [f"Z/{f}" for f in self.invariant_factors]
        return " + ".join(parts) if parts else "0"

    @property
    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.invariant_factors

    @property
    def order(self) -> int | None:
        if self.free_rank:
            return None
        out = 1
        for f in self.invariant_factors:
            out *= f
        return out

    @property
    def length(self) -> int | None:
        """Composition length; None when infinite."""
        if self.coefficients.kind == "Q":
            return self.free_rank
        if self.free_rank:
            return None
        return sum(sum(factorize(f).values()) for f in self.invariant_factors)

    @property
    def dimension(self) -> int:
        if self.coefficients.kind == "Q":
            return self.free_rank
        if not self.coefficients.is_field:
            raise DomainError(f"dimension is only defined over a field, not {self.coefficients}")
        return len(self.invariant_factors)

    def elementary_divisors(self) -> list[int]:
        out = []
        for f in self.invariant_factors:
            for p, e in factorize(f).items():
                out.append(p ** e)
        return sorted(out)

    def tensor(self, K: CoefficientRing) -> "KModuleInvariants":
        """self (an abelian group) tensored with a residue ring Z/m."""
        if K.kind != "Zmod":
            raise DomainError("tensor is implemented for residue rings")
        m = K.modulus
        facs = [_gcd_mod(f, m) for f in self.invariant_factors] + [m] * self.free_rank
        return KModuleInvariants(K, 0, facs)

    def tor(self, K: CoefficientRing) -> "KModuleInvariants":
        """Tor_1(self, Z/m) for an abelian group self."""
        m = K.modulus
        return KModuleInvariants(K, 0, [_gcd_mod(f, m) for f in self.invariant_factors])

    def direct_sum(self, other: "KModuleInvariants") -> "KModuleInvariants":
        return KModuleInvariants(
            self.coefficients, self.free_rank + other.free_rank, self.invariant_factors + other.invariant_factors
        )

    def to_json(self) -> dict:
        return {"free_rank": self.free_rank, "invariant_factors": list(self.invariant_factors)}


def _gcd_mod(f: int, m: int) -> int:
    from math import gcd

    return gcd(f, m)


def _strip_primes(f: int, primes) -> int:
    for p in primes:
        while f % p == 0:
            f //= p
    return f


def _as_int(v):
    from fractions import Fraction

    if isinstance(v, Fraction):
        if v.denominator != 1:
            raise DomainError("integral relation matrix expected")
        return v.numerator
    return int(v)


# ---------------------------------------------------------------------------
# vectors


def vec_from_rows(row) -> dict:
    """List of ring elements -> engine vector {(component, monomial): coeff}."""
    out = {}
    for i, f in enumerate(row):
        for m, c in f.items():
            out[(i, m)] = c
    return out


def rows_from_vec(alg: AlgebraPresentation, v: dict, n: int) -> list:
    row = [dict() for _ in range(n)]
    for (i, m), c in v.items():
        row[i][m] = row[i].get(m, 0) + c
    return [alg.elem(f) for f in row]


def unit_vector(alg: AlgebraPresentation, n: int, i: int, coeff=None) -> list:
    row = [alg.zero() for _ in range(n)]
    row[i] = alg.one() if coeff is None else alg.elem(coeff)
    return row


# ---------------------------------------------------------------------------
# presentations


class ModulePresentation:
    """Lambda^n_gens / relations over an AlgebraPresentation."""

    def __init__(self, algebra: AlgebraPresentation, n_gens: int, relations=(), name: str = ""):
        self.algebra = algebra
        self.n_gens = n_gens
        rows = []
        for r in relations:
            if len(r) != n_gens:
                raise ValueError("relation row has the wrong length")
            row = tuple(algebra.elem(f) for f in r)
            if any(row):
                rows.append(row)
        self.relations = tuple(rows)
        self.name = name
        self._gb = None

    def __repr__(self):
        return f"ModulePresentation({self.name or '?'}: {self.n_gens} gens, {len(self.relations)} relations over {self.algebra})"

    # -- Groebner data -------------------------------------------------------
    def _groebner(self):
        if self._gb is None:
            eng, basis = compute_basis(self.algebra, self.n_gens, [vec_from_rows(r) for r in self.relations])
            self._gb = (eng, eng.basis_entries(basis), basis)
        return self._gb

    def reduce(self, row) -> list:
        eng, entries, _ = self._groebner()
        v = vec_from_rows([self.algebra.elem(f) for f in row])
        return rows_from_vec(self.algebra, eng.reduce(v, entries), self.n_gens)

    def contains(self, row) -> bool:
        """Is the vector zero in the module (i.e. in the relation submodule)?"""
        return not any(self.reduce(row))

    def verify(self) -> bool:
        return all(self.contains(r) for r in self.relations)

    def canonical_rows(self) -> list:
        _, _, basis = self._groebner()
        rows = [rows_from_vec(self.algebra, b, self.n_gens) for b in basis]
        return [r for r in rows if any(r)]

    def content_hash(self) -> str:
        payload = json.dumps(
            {
                "ring": self.algebra.signature(),
                "n": self.n_gens,
                "rows": [[self.algebra.serialize(f) for f in r] for r in self.canonical_rows()],
            },
            sort_keys=True,
            default=str,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def is_zero(self) -> bool:
        return all(self.contains(unit_vector(self.algebra, self.n_gens, i)) for i in range(self.n_gens))

    def same_submodule(self, other: "ModulePresentation") -> bool:
        """Equal relation submodules of the same free module (double inclusion)."""
        return (
            self.n_gens == other.n_gens
            and all(other.contains(r) for r in self.relations)
            and all(self.contains(r) for r in other.relations)
        )

    def with_relations(self, extra, name: str = "") -> "ModulePresentation":
        return ModulePresentation(self.algebra, self.n_gens, list(self.relations) + list(extra), name or self.name)

    def change_coefficients(self, K: CoefficientRing) -> "ModulePresentation":
        """M tensor K for a quotient ring K of the current coefficients."""
        alg = self.algebra.with_coefficients(K)
        return ModulePresentation(alg, self.n_gens, [[alg.elem(f) for f in r] for r in self.relations], self.name)

    def to_json(self) -> dict:
        return {
            "coefficients": self.algebra.coefficients.to_json(),
            "group": self.algebra.group.to_json(),
            "n_gens": self.n_gens,
            "relations": [[self.algebra.serialize(f) for f in r] for r in self.relations],
        }

    # -- additive structure --------------------------------------------------
    def _staircase(self, max_monomials: int = 5000):
        """Standard monomials and the triangular lattice they satisfy.

        Returns (std, rows) or Inconclusive. Over fields rows is empty.
        """
        alg = self.algebra
        eng, entries, _ = self._groebner()
        dom = eng.domain
        nv = alg.nvars
        std: list = []
        for comp in range(self.n_gens):
            leads = [(km[1], c) for km, c, _ in entries if km[0] == comp]
            unit = [m for m, c in leads if dom != "Z" or c == 1]
            if any(not any(m) for m in unit):
                continue
            bounds = []
            for v in range(nv):
                pures = [m[v] for m in unit if m[v] > 0 and all(m[u] == 0 for u in range(nv) if u != v)]
                if not pures:
                    return Inconclusive("infinite staircase", {"component": comp, "variable": alg.var_names[v]})
                bounds.append(min(pures))
            for mono in itertools.product(*(range(b) for b in bounds)):
                if not any(_mono_div(m, mono) for m in unit):
                    std.append((comp, mono))
                    if len(std) > max_monomials:
                        return Inconclusive("staircase too large", {"limit": max_monomials})
        if dom != "Z":
            return std, []
        index = {k: i for i, k in enumerate(std)}
        rows = []
        for comp, mono in std:
            cands = [(c, km, f) for km, c, f in entries if km[0] == comp and _mono_div(km[1], mono)]
            if not cands:
                continue
            c, km, f = min(cands, key=lambda t: t[0])
            shift = tuple(a - b for a, b in zip(mono, km[1]))
            shifted = {}
            eng._shift_sub(shifted, -1, shift, f)
            # shifted = c*mono + tail; express the tail in standard monomials
            tail = {k: v for k, v in shifted.items() if k != (comp, mono)}
            row = self._coords(index, eng.reduce(tail, entries))
            row[index[(comp, mono)]] += c
            rows.append(row)
        return std, rows

    @staticmethod
    def _coords(index, vec) -> list:
        row = [0] * len(index)
        for k, v in vec.items():
            if k not in index:
                raise AssertionError("normal form left the staircase")
            row[index[k]] += _as_int(v)
        return row

    def additive_structure(self, max_monomials: int = 5000):
        """KModuleInvariants of the underlying coefficient module, or Inconclusive.

        Uses the staircase of the relation basis: standard monomials span the
        quotient and the basis elements give a triangular relation lattice,
        whose Smith form yields exact invariants.
        """
        got = self._staircase(max_monomials)
        if isinstance(got, Inconclusive):
            return got
        std, rows = got
        K = self.algebra.coefficients
        if self._groebner()[0].domain != "Z":
            if K.kind == "Q":
                return KModuleInvariants(K, len(std))
            return KModuleInvariants(K, 0, [K.modulus] * len(std))
        return KModuleInvariants.from_relations(K, rows, len(std))

    def finite_model(self, max_monomials: int = 5000):
        """Dense model: (FiniteModel) of the underlying coefficient module, or Inconclusive."""
        K = self.algebra.coefficients
        if K.kind not in ("Z", "Zmod"):
            raise CapabilityError("dense models need coefficients Z or Z/m")
        got = self._staircase(max_monomials)
        if isinstance(got, Inconclusive):
            return got
        std, rows = got
        alg = self.algebra
        eng, entries, _ = self._groebner()
        index = {k: i for i, k in enumerate(std)}
        if K.kind == "Zmod":
            n = len(std)
            rows = rows + [[K.modulus * int(i == j) for j in range(n)] for i in range(n)]
        actions = []
        for v in range(alg.nvars):
            mat = []
            for comp, mono in std:
                shifted = {}
                shift = tuple(int(u == v) for u in range(alg.nvars))
                eng._shift_sub(shifted, -1, shift, {(comp, mono): 1})
                mat.append(self._coords(index, eng.reduce(eng._clean(shifted), entries)))
            actions.append(mat)
        return FiniteModel(alg, len(std), rows, actions, std)

def cyclic_module(algebra: AlgebraPresentation, relations, name: str = "") -> ModulePresentation:
    return ModulePresentation(algebra, 1, [[f] for f in relations], name)


def free_module(algebra: AlgebraPresentation, n: int = 1) -> ModulePresentation:
    return ModulePresentation(algebra, n, [], f"free{n}")


class FiniteModel:
    """Underlying coefficient module as Z^dim / lattice with action matrices.

    actions[v] is the matrix of the v-th algebra variable acting on row
    vectors (v -> v @ B). Over Z/m the lattice contains m Z^dim.
    """

    def __init__(self, algebra: AlgebraPresentation, dim: int, lattice, actions, basis_labels=()):
        self.algebra = algebra
        self.dim = dim
        self.lattice = [list(r) for r in lattice]
        self.actions = actions
        self.basis_labels = list(basis_labels)

    @property
    def modulus(self) -> int | None:
        K = self.algebra.coefficients
        return K.modulus if K.kind == "Zmod" else None

    def _reduce(self, mat):
        m = self.modulus
        return [[x % m for x in r] for r in mat] if m else mat

    def element_matrix(self, f) -> list:
        """Matrix of multiplication by an algebra element."""
        alg = self.algebra
        n = self.dim
        total = [[0] * n for _ in range(n)]
        powers: dict = {}
        for mono, c in alg.elem(f).items():
            mat = identity(n)
            for v, e in enumerate(mono):
                if e:
                    key = (v, e)
                    if key not in powers:
                        powers[key] = self._reduce(mat_pow(self.actions[v], e))
                    mat = self._reduce(matmul(mat, powers[key]))
            c = _as_int(c)
            total = [[a + c * b for a, b in zip(r1, r2)] for r1, r2 in zip(total, mat)]
        return self._reduce(total)

    def invariants(self) -> "KModuleInvariants":
        return KModuleInvariants.from_relations(self.algebra.coefficients, self.lattice, self.dim)


class MatrixActionModule:
    """A module that is finitely generated as an abelian group.

    The group generators of A act on Z^rank (or K^rank) by integer matrices
    on row vectors: e_i * a_k = row i of matrices[k].
    """

    def __init__(self, rank: int, matrices, group=None):
        self.rank = rank
        self.matrices = [[[int(v) for v in row] for row in mat] for mat in matrices]
        for mat in self.matrices:
            if len(mat) != rank or any(len(row) != rank for row in mat):
                raise ValueError("action matrix has the wrong shape")
        for a, b in itertools.combinations(self.matrices, 2):
            if matmul(a, b) != matmul(b, a):
                raise ValueError("action matrices do not commute")
        self.group = group

    def presentation(self, algebra: AlgebraPresentation, name: str = "") -> ModulePresentation:
        n = self.rank
        if len(self.matrices) != algebra.r + algebra.s:
            raise ValueError("need one action matrix per group generator")
        rels = []
        for k, mat in enumerate(self.matrices):
            g = algebra.gen(k)
            for i in range(n):
                row = [algebra.const(-mat[i][j]) for j in range(n)]
                row[i] = algebra.add(row[i], g)
                rels.append(row)
        return ModulePresentation(algebra, n, rels, name)

    def determinants(self) -> list[int]:
        return [det(m) for m in self.matrices]

    def to_json(self) -> dict:
        return {"kind": "matrix_action", "rank": self.rank, "matrices": self.matrices}


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def det(m) -> int:
    from fractions import Fraction

    n = len(m)
    a = [[Fraction(v) for v in row] for row in m]
    d = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            d = -d
        d *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return int(d)


def identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def mat_sub(a, b):
    return [[x - y for x, y in zip(r, s)] for r, s in zip(a, b)]


def mat_pow(a, k):
    out = identity(len(a))
    for _ in range(k):
        out = matmul(out, a)
    return out


# ---------------------------------------------------------------------------
# towers


@dataclass
class ModuleTower:
    """Stages M/M a^i for i = 0..depth linked by the canonical projections."""

    stages: list
    ideal: IdealHandle
    certificate: dict
    maps_onto: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"depth": len(self.stages) - 1, "certificate": self.certificate}


def quotient_by_ideal_power(M: ModulePresentation, ideal: IdealHandle, i: int) -> ModulePresentation:
    """Presentation of M / M a^i (rows e_j * g for g generating a^i appended)."""
    alg = M.algebra
    gens = power_generators(alg, list(ideal.generators), i)
    extra = [unit_vector(alg, M.n_gens, j, g) for j in range(M.n_gens) for g in gens]
    return M.with_relations(extra, f"{M.name}/a^{i}")


def ideal_power_tower(M: ModulePresentation, ideal: IdealHandle, depth: int, depth_bound: int = 32) -> ModuleTower:
    truncated = depth > depth_bound
    depth = min(depth, depth_bound)
    stages = [quotient_by_ideal_power(M, ideal, i) for i in range(depth + 1)]
    onto = []
    for i in range(depth):
        # the kernel of stage i+1 -> stage i is generated by the extra rows of stage i
        onto.append(all(stages[i].contains(r) for r in stages[i + 1].relations))
    cert: dict = {"status": "EpimorphicTail"}
    for i in range(depth):
        if stages[i].same_submodule(stages[i + 1]):
            cert = {"status": "Stabilized", "at": i}
            break
    if truncated and cert["status"] != "Stabilized":
        cert = {"status": "Inconclusive", "reason": "depth bound"}
    return ModuleTower(stages, ideal, cert, onto)


@dataclass(frozen=True)
class StabilizationIndex:
    index: int
    certificate: dict


def _power_submodule(M: ModulePresentation, ideal: IdealHandle, i: int) -> ModulePresentation:
    return quotient_by_ideal_power(M, ideal, i)


def stabilization_index(M: ModulePresentation, ideal: IdealHandle, bound: int = 12):
    """Least n with M a^n = M a^(n+1), certified by double inclusion."""
    try:
        prev = _power_submodule(M, ideal, 0)
        for n in range(bound + 1):
            nxt = _power_submodule(M, ideal, n + 1)
            forward = all(nxt.contains(r) for r in prev.relations)
            backward = all(prev.contains(r) for r in nxt.relations)
            if forward and backward:
                return StabilizationIndex(n, {"double_inclusion": True, "checked": [n, n + 1]})
            prev = nxt
    except DegreeBoundExceeded as exc:
        return Inconclusive("degree bound", {"detail": str(exc)})
    return Inconclusive("bound reached", {"bound": bound})


# ---------------------------------------------------------------------------
# annihilators, tensor products, twists


def annihilator(M: ModulePresentation) -> IdealHandle:
    """Intersection over generators of the transporters (relations : e_i)."""
    alg = M.algebra
    sub = [vec_from_rows(r) for r in M.relations]
    result = None
    for i in range(M.n_gens):
        q = transporter(alg, M.n_gens, sub, vec_from_rows(unit_vector(alg, M.n_gens, i)))
        result = q if result is None else ideal_intersection(result, q)
    if result is None:
        return IdealHandle(alg, [alg.one()])
    return result


def tensor_over_algebra(M: ModulePresentation, N: ModulePresentation) -> ModulePresentation:
    """M tensor_Lambda N on generators e_i x f_j (index i*N.n_gens + j)."""
    alg = M.algebra
    if N.algebra != alg:
        raise ValueError("modules over different algebras")
    a, b = M.n_gens, N.n_gens
    rows = []
    for rel in M.relations:
        for j in range(b):
            row = [alg.zero() for _ in range(a * b)]
            for i in range(a):
                row[i * b + j] = rel[i]
            rows.append(row)
    for rel in N.relations:
        for i in range(a):
            row = [alg.zero() for _ in range(a * b)]
            for j in range(b):
                row[i * b + j] = rel[j]
            rows.append(row)
    return ModulePresentation(alg, a * b, rows, f"({M.name} x {N.name})")


def twisted(M: ModulePresentation) -> ModulePresentation:
    """M with the action twisted by the antipode."""
    alg = M.algebra
    return ModulePresentation(alg, M.n_gens, [[alg.antipode(f) for f in r] for r in M.relations], f"{M.name}_s")


def submodule_presentation(M: ModulePresentation, vectors) -> ModulePresentation:
    """Presentation of the submodule of M generated by the given vectors.

    Relations are the syzygies {c : sum c_j v_j in relations(M)}, found by
    eliminating the ambient block.
    """
    alg = M.algebra
    n, k = M.n_gens, len(vectors)
    one = (0,) * alg.nvars
    gens = []
    for j, v in enumerate(vectors):
        vec = vec_from_rows(v)
        vec[(n + j, one)] = 1
        gens.append(vec)
    for r in M.relations:
        gens.append(vec_from_rows(r))
    eng, basis = compute_basis(alg, n + k, gens)
    syz = []
    for b in basis:
        if all(key[0] >= n for key in b):
            syz.append(rows_from_vec(alg, {(c - n, m): v for (c, m), v in b.items()}, k))
    return ModulePresentation(alg, k, syz, f"sub({M.name})")


def tor_abelian(M: ModulePresentation, n: int) -> ModulePresentation:
    """{m in M : n m = 0} as a module."""
    alg = M.algebra
    K = alg.coefficients
    if K.kind not in ("Z", "Zmod") or (K.kind == "Zmod" and K.prime_power is None):
        raise DomainError("tor_abelian needs coefficients Z or Z/p^k")
    g = M.n_gens
    one = (0,) * alg.nvars
    # transporter submodule {v : n v in R}
    gens = []
    for i in range(g):
        vec = {(i, one): n, (g + i, one): 1}
        gens.append(vec)
    for r in M.relations:
        gens.append(vec_from_rows(r))
    eng, basis = compute_basis(alg, 2 * g, gens)
    kernel_vecs = []
    for b in basis:
        if all(key[0] >= g for key in b):
            kernel_vecs.append(rows_from_vec(alg, {(c - g, m): v for (c, m), v in b.items()}, g))
    kernel_vecs = [v for v in kernel_vecs if not M.contains(v)]
    if not kernel_vecs:
        return ModulePresentation(alg, 0, [], f"tor({M.name},{n})")
    return submodule_presentation(M, kernel_vecs)


def _ball(alg: AlgebraPresentation, radius: int) -> list[tuple]:
    """Group elements of word length <= radius in the standard generators."""
    r, s = alg.r, alg.s
    tors = alg.group.torsion_orders
    out = set()
    for exps in itertools.product(*([range(-radius, radius + 1)] * r + [range(0, radius + 1)] * s)):
        length = sum(abs(e) for e in exps[:r]) + sum(min(e, tors[k] - e) if e < tors[k] else e for k, e in enumerate(exps[r:]))
        if length <= radius:
            norm = tuple(exps[:r]) + tuple(e % tors[k] for k, e in enumerate(exps[r:]))
            out.add(norm)
    return sorted(out)


def diagonal_generators(M: ModulePresentation, radius: int) -> list:
    """Generators of the diagonal submodule D(M) inside M x M_s.

    e_i x e_i for each i, and e_i x e_j * c + e_j x e_i * c^-1 for i < j and
    c in the word-length ball of the given radius.
    """
    alg = M.algebra
    n = M.n_gens
    out = []
    for i in range(n):
        out.append(unit_vector(alg, n * n, i * n + i))
    for c in _ball(alg, radius):
        ce = alg.group_element(c)
        ci = alg.group_element(tuple(-e for e in c))
        for i in range(n):
            for j in range(i + 1, n):
                row = [alg.zero() for _ in range(n * n)]
                row[i * n + j] = ce
                row[j * n + i] = ci
                out.append(row)
    return out


@dataclass
class WedgeResult:
    module: ModulePresentation
    certificate: dict

    @property
    def stabilized(self) -> bool:
        return self.certificate.get("status") == "Stabilized"


def twisted_exterior_square(M: ModulePresentation, max_radius: int = 4) -> WedgeResult:
    """(M x_Lambda M_s) / D(M), D(M) the Lambda-span of all m x m.

    D(M) is grown over word-length balls until two consecutive radii give
    the same submodule.
    """
    T = tensor_over_algebra(M, twisted(M))
    prev = T.with_relations(diagonal_generators(M, 0))
    for radius in range(1, max_radius + 1):
        cur = T.with_relations(diagonal_generators(M, radius))
        if prev.same_submodule(cur):
            return WedgeResult(
                ModulePresentation(M.algebra, cur.n_gens, cur.relations, f"wedge({M.name})"),
                {"status": "Stabilized", "radius": radius - 1},
            )
        prev = cur
    return WedgeResult(
        ModulePresentation(M.algebra, prev.n_gens, prev.relations, f"wedge({M.name})"),
        {"status": "Inconclusive", "reason": "ball radius bound", "radius": max_radius},
    )


def coinvariants(M: ModulePresentation) -> KModuleInvariants:
    """M/MI over the coefficient ring via the specialized relation matrix."""
    alg = M.algebra
    rows = [[alg.augmentation(f) for f in r] for r in M.relations]
    return KModuleInvariants.from_relations(alg.coefficients, rows, M.n_gens)


def exterior_square_action(mat):
    """Matrix of the induced action on the exterior square (basis e_i ^ e_j, i < j)."""
    n = len(mat)
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for i, j in pairs:
        row = []
        for k, l in pairs:
            row.append(mat[i][k] * mat[j][l] - mat[i][l] * mat[j][k])
        out.append(row)
    return out


def exterior_coinvariants(module: MatrixActionModule, K: CoefficientRing) -> KModuleInvariants:
    """(wedge^2 M)_A for M finitely generated as an abelian group, tensored with K."""
    n = module.rank
    dim = n * (n - 1) // 2
    rows = []
    for mat in module.matrices:
        w = exterior_square_action(mat)
        rows.extend(mat_sub(w, identity(dim)))
    return KModuleInvariants.from_relations(K, rows, dim)


def matrix_coinvariants(module: MatrixActionModule, K: CoefficientRing) -> KModuleInvariants:
    """M_A = M / sum (B_k - 1) M, by Smith normal form."""
    rows = []
    for mat in module.matrices:
        rows.extend(mat_sub(mat, identity(module.rank)))
    return KModuleInvariants.from_relations(K, rows, module.rank)
