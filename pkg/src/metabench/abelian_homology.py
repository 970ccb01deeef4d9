"""Homology of finitely generated abelian groups with module coefficients.

Three independent routes compute H_k(A, N):

* ``homology``: N tensor the Koszul/periodic resolution, with kernels and
  images computed as submodules over the group algebra (works for any
  finitely presented N whose homology is finitely generated).
* ``homology_dense``: the same complex built on a dense model of N
  (explicit basis and action matrices), solved by lattice or F_p ranks.
* ``homology_bar``: the normalized bar resolution for finite A, used as a
  brute-force oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    abelian_invariants,
    coordinates,
    is_prime,
    lattice_basis,
    left_kernel,
    rank_mod_p,
)
from .module_engine import (
    FiniteModel,
    KModuleInvariants,
    ModulePresentation,
    ModuleTower,
    rows_from_vec,
    vec_from_rows,
)
from .ring_kernel import (
    AlgebraPresentation,
    CapabilityError,
    DomainError,
    Inconclusive,
    compute_basis,
)

MAX_DEGREE = 3


# ---------------------------------------------------------------------------
# resolutions


@dataclass
class FreeComplex:
    """F_len -> ... -> F_0 -> K of free modules over an algebra.

    differentials[k] has ranks[k] rows and ranks[k-1] columns; a chain is a
    row vector and d_k(x) = x @ differentials[k].
    """

    algebra: AlgebraPresentation
    ranks: list
    differentials: dict
    labels: list = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.ranks) - 1

    def augmentation(self, f):
        return self.algebra.augmentation(f)

    def compose(self, k: int) -> list:
        """Matrix of d_{k-1} o d_k."""
        alg = self.algebra
        a, b = self.differentials[k], self.differentials[k - 1]
        out = []
        for row in a:
            out.append([alg.sum(alg.mul(row[j], b[j][c]) for j in range(len(b))) for c in range(self.ranks[k - 2])])
        return out

    def check_square_zero(self) -> bool:
        for k in range(2, self.length + 1):
            if any(any(e) for row in self.compose(k) for e in row):
                return False
        # F_1 -> F_0 -> K
        if 1 in self.differentials:
            if any(self.augmentation(row[0]) for row in self.differentials[1]):
                return False
        return True


def _factor_differential(alg: AlgebraPresentation, factor: int, degree: int):
    """Differential F_degree -> F_{degree-1} of the elementary complex of one generator."""
    r = alg.r
    t = alg.gen(factor)
    if factor < r:
        return alg.sub(t, alg.one()) if degree == 1 else None
    m = alg.group.torsion_orders[factor - r]
    if degree % 2 == 1:
        return alg.sub(t, alg.one())
    return alg.sum(alg.gen(factor, e) for e in range(m))


def trivial_resolution(algebra: AlgebraPresentation, length: int) -> FreeComplex:
    """Koszul complex on the free part tensored with periodic complexes.

    Basis of F_k: tuples of factor degrees summing to k (free factors have
    degree at most 1). Signs follow the Koszul rule.
    """
    if length > MAX_DEGREE + 1:
        raise ValueError("only degrees up to 4 are built")
    alg = algebra
    r, s = alg.r, alg.s
    nf = r + s
    bases = []
    for k in range(length + 1):
        labels = [
            d
            for d in itertools.product(*([range(2)] * r + [range(k + 1)] * s))
            if sum(d) == k
        ]
        bases.append(sorted(labels, reverse=True))
    index = [{lab: i for i, lab in enumerate(b)} for b in bases]
    diffs = {}
    for k in range(1, length + 1):
        mat = [[alg.zero() for _ in bases[k - 1]] for _ in bases[k]]
        for i, lab in enumerate(bases[k]):
            sign = 1
            for j in range(nf):
                if lab[j]:
                    g = _factor_differential(alg, j, lab[j])
                    target = lab[:j] + (lab[j] - 1,) + lab[j + 1 :]
                    col = index[k - 1][target]
                    mat[i][col] = alg.add(mat[i][col], alg.scale(g, sign))
                if lab[j] % 2:
                    sign = -sign
        diffs[k] = mat
    return FreeComplex(alg, [len(b) for b in bases], diffs, bases)


# ---------------------------------------------------------------------------
# route 1: submodules over the algebra


def _map_vectors(N: ModulePresentation, D: list, a: int, b: int):
    """Images in N^b of the generators e_(i,l) of N^a under x -> x @ D."""
    alg = N.algebra
    g = N.n_gens
    out = []
    for i in range(a):
        for l in range(g):
            row = [alg.zero() for _ in range(b * g)]
            for j in range(b):
                row[j * g + l] = D[i][j]
            out.append(row)
    return out


def _kernel_vectors(N: ModulePresentation, D: list, a: int, b: int) -> list:
    """Generators of {x in Lambda^(a g) : x @ D lies in relations^b}."""
    alg = N.algebra
    g = N.n_gens
    one = (0,) * alg.nvars
    images = _map_vectors(N, D, a, b)
    gens = []
    for idx, row in enumerate(images):
        vec = vec_from_rows(row)
        vec[(b * g + idx, one)] = 1
        gens.append(vec)
    for j in range(b):
        for rel in N.relations:
            gens.append({(j * g + l, m): c for l, f in enumerate(rel) for m, c in f.items()})
    _, basis = compute_basis(alg, b * g + a * g, gens)
    kernel = []
    for vec in basis:
        if all(key[0] >= b * g for key in vec):
            kernel.append(rows_from_vec(alg, {(c - b * g, m): v for (c, m), v in vec.items()}, a * g))
    return kernel


def _power_presentation(N: ModulePresentation, a: int, extra=()) -> ModulePresentation:
    alg = N.algebra
    g = N.n_gens
    rows = []
    for i in range(a):
        for rel in N.relations:
            row = [alg.zero() for _ in range(a * g)]
            row[i * g : (i + 1) * g] = list(rel)
            rows.append(row)
    return ModulePresentation(alg, a * g, rows + list(extra), f"{N.name}^{a}")


def homology_module(N: ModulePresentation, k: int) -> ModulePresentation:
    """H_k(A, N) presented as a module over the group algebra (killed by I)."""
    if not 0 <= k <= MAX_DEGREE:
        raise ValueError("degree out of range")
    alg = N.algebra
    F = trivial_resolution(alg, k + 1)
    a = F.ranks[k]
    if k == 0:
        kernel = [[alg.one() if c == i else alg.zero() for c in range(a * N.n_gens)] for i in range(a * N.n_gens)]
    else:
        kernel = _kernel_vectors(N, F.differentials[k], a, F.ranks[k - 1])
    images = _map_vectors(N, F.differentials[k + 1], F.ranks[k + 1], a)
    ambient = _power_presentation(N, a, images)
    from .module_engine import submodule_presentation

    kernel = [v for v in kernel if not ambient.contains(v)]
    if not kernel:
        return ModulePresentation(alg, 0, [], f"H{k}")
    return submodule_presentation(ambient, kernel)


def homology(N: ModulePresentation, k: int) -> KModuleInvariants:
    """H_k(A, N) as a module over the coefficient ring."""
    H = homology_module(N, k)
    if H.n_gens == 0:
        return KModuleInvariants(N.algebra.coefficients)
    got = H.additive_structure()
    if isinstance(got, Inconclusive):
        raise CapabilityError(f"homology is not finitely generated over the coefficients: {got.reason}")
    return got


# ---------------------------------------------------------------------------
# chain complexes of finite coefficient modules


@dataclass
class LatticeComplex:
    """Complex of groups Z^dims[k] / lattices[k] with integer differentials.

    differentials[k] is dims[k] x dims[k-1], acting on row vectors.
    """

    dims: list
    lattices: list
    differentials: dict
    prime_field: int | None = None

    def homology(self, k: int) -> KModuleInvariants:
        from .ring_kernel import CoefficientRing

        p = self.prime_field
        if p is not None:
            n = self.dims[k]
            rk_out = rank_mod_p(self.differentials[k], p) if k in self.differentials and n and self.dims[k - 1] else 0
            rk_in = (
                rank_mod_p(self.differentials[k + 1], p)
                if k + 1 in self.differentials and self.dims[k + 1] and n
                else 0
            )
            return KModuleInvariants(CoefficientRing.mod(p), 0, [p] * (n - rk_out - rk_in))
        return KModuleInvariants(_integers(), *abelian_invariants(self._relation_rows(k), len(self._cycles(k))))

    def _cycles(self, k: int) -> list:
        n = self.dims[k]
        if k == 0 or k not in self.differentials or self.dims[k - 1] == 0:
            return [[int(i == j) for j in range(n)] for i in range(n)]
        # x @ D in lattice_{k-1}: left kernel of the stacked matrix, projected
        D = self.differentials[k]
        stacked = [list(r) for r in D] + [[-x for x in r] for r in self.lattices[k - 1]]
        ker = left_kernel(stacked, self.dims[k - 1]) if stacked else []
        return lattice_basis([v[:n] for v in ker], n)

    def _relation_rows(self, k: int) -> list:
        basis = self._cycles(k)
        rels = list(self.lattices[k])
        if k + 1 in self.differentials:
            rels += [list(r) for r in self.differentials[k + 1]]
        return [coordinates(basis, r) for r in rels if any(r)]


def _integers():
    from .ring_kernel import CoefficientRing

    return CoefficientRing.integers()


def _block_matrix(model: FiniteModel, D: list, a: int, b: int) -> list:
    """Dense matrix of x -> x @ D on model^a -> model^b."""
    n = model.dim
    out = [[0] * (b * n) for _ in range(a * n)]
    cache: dict = {}
    for i in range(a):
        for j in range(b):
            f = D[i][j]
            if not f:
                continue
            key = tuple(sorted(f.items()))
            if key not in cache:
                cache[key] = model.element_matrix(f)
            blk = cache[key]
            for u in range(n):
                out[i * n + u][j * n : (j + 1) * n] = [
                    x + y for x, y in zip(out[i * n + u][j * n : (j + 1) * n], blk[u])
                ]
    return out


def _prime_field(model: FiniteModel) -> int | None:
    m = model.modulus
    return m if m and is_prime(m) else None


def _lattice_power(model: FiniteModel, a: int) -> list:
    n = model.dim
    rows = []
    for i in range(a):
        for r in model.lattice:
            row = [0] * (a * n)
            row[i * n : (i + 1) * n] = r
            rows.append(row)
    return rows


def _specialize(H: KModuleInvariants, model: FiniteModel) -> KModuleInvariants:
    # integral computation done, read back over the coefficient ring
    return KModuleInvariants(model.algebra.coefficients, H.free_rank, H.invariant_factors)


def homology_dense(model: FiniteModel, k: int) -> KModuleInvariants:
    """H_k(A, N) from the dense model through the Koszul/periodic resolution."""
    alg = model.algebra
    F = trivial_resolution(alg, k + 1)
    dims = [F.ranks[j] * model.dim for j in range(k + 2)]
    diffs = {j: _block_matrix(model, F.differentials[j], F.ranks[j], F.ranks[j - 1]) for j in range(max(1, k), k + 2)}
    p = _prime_field(model)
    lattices = [[] if p else _lattice_power(model, F.ranks[j]) for j in range(k + 2)]
    cx = LatticeComplex(dims, lattices, diffs, p)
    return _specialize(cx.homology(k), model)


# ---------------------------------------------------------------------------
# bar resolution oracle


BAR_DIMENSION_CAP = 60000


def homology_bar(model: FiniteModel, k: int) -> KModuleInvariants:
    """H_k(A, N) from the normalized bar resolution (A finite)."""
    alg = model.algebra
    if not alg.group.is_finite:
        raise DomainError("the bar oracle needs a finite group")
    elems = [e for e in alg.group.elements() if any(e)]
    ident = tuple(0 for _ in alg.group.torsion_orders)
    tors = alg.group.torsion_orders
    n = model.dim
    q = len(elems)
    if n * q ** (k + 1) > BAR_DIMENSION_CAP:
        raise CapabilityError("bar complex too large for the oracle")

    def mul(g, h):
        return tuple((a + b) % m for a, b, m in zip(g, h, tors))

    act = {g: model.element_matrix(alg.group_element(g)) for g in elems}
    cells = [list(itertools.product(elems, repeat=j)) for j in range(k + 2)]
    cell_index = [{c: i for i, c in enumerate(cs)} for cs in cells]

    def differential(j):
        rows_n, cols_n = len(cells[j]) * n, len(cells[j - 1]) * n
        mat = np.zeros((rows_n, cols_n), dtype=object)
        eye = np.identity(n, dtype=object)
        for ci, cell in enumerate(cells[j]):
            r0 = ci * n
            # n g1 x [g2|...]
            tgt = cell_index[j - 1][cell[1:]]
            mat[r0 : r0 + n, tgt * n : tgt * n + n] += np.array(act[cell[0]], dtype=object)
            for i in range(j - 1):
                prod = mul(cell[i], cell[i + 1])
                if prod == ident:
                    continue
                face = cell[:i] + (prod,) + cell[i + 2 :]
                tgt = cell_index[j - 1][face]
                mat[r0 : r0 + n, tgt * n : tgt * n + n] += (-1) ** (i + 1) * eye
            tgt = cell_index[j - 1][cell[:-1]]
            mat[r0 : r0 + n, tgt * n : tgt * n + n] += (-1) ** j * eye
        return mat

    p = _prime_field(model)
    diffs = {}
    for j in range(max(1, k), k + 2):
        d = differential(j)
        diffs[j] = (d % p).astype(np.int64) if p else d.tolist()
    dims = [len(cells[j]) * n for j in range(k + 2)]
    if p:
        lattices = [[] for _ in dims]
    else:
        lattices = [_lattice_power(model, len(cells[j])) for j in range(k + 2)]
    cx = LatticeComplex(dims, lattices, diffs, p)
    return _specialize(cx.homology(k), model)


# ---------------------------------------------------------------------------
# towers and limits


@dataclass
class TowerOfKInvariants:
    stages: list
    maps: list
    certificate: dict

    def to_json(self) -> dict:
        return {
            "stages": [s.to_json() for s in self.stages],
            "certificate": self.certificate,
        }


def homology_tower(tower: ModuleTower, k: int) -> TowerOfKInvariants:
    """Stagewise H_k along an ideal-power tower.

    Maps between stages are recorded as the surjectivity flags of the
    underlying module projections; the limit is only asserted for Artinian
    coefficients, where Mittag-Leffler holds automatically.
    """
    stages = [homology(M, k) for M in tower.stages]
    K = tower.stages[0].algebra.coefficients
    cert = dict(tower.certificate)
    cert["artinian"] = K.is_artinian
    return TowerOfKInvariants(stages, list(tower.maps_onto), cert)


def lim_and_lim1(tower: TowerOfKInvariants) -> dict:
    """lim and a certificate for lim^1 (never a guessed value)."""
    cert = tower.certificate
    status = cert.get("status")
    stages = tower.stages
    if status == "Stabilized":
        at = cert["at"]
        return {"lim": stages[min(at, len(stages) - 1)], "lim1": "CertifiedZero", "reason": "stabilized"}
    if status == "Constant" or (stages and all(s == stages[0] for s in stages) and cert.get("constant")):
        return {"lim": stages[0], "lim1": "CertifiedZero", "reason": "constant"}
    if status == "ZeroTail" or (stages and stages[-1].is_zero and cert.get("zero_tail")):
        return {"lim": KModuleInvariants(stages[-1].coefficients), "lim1": "CertifiedZero", "reason": "zero tail"}
    if status == "EpimorphicTail" and all(tower.maps) and all(s.order is not None for s in stages):
        # surjective maps: Mittag-Leffler holds, but the limit needs stabilization
        return {"lim": None, "lim1": "CertifiedZero", "reason": "epimorphic tower of finite modules"}
    return {"lim": None, "lim1": "NotCertified", "reason": status or "no certificate"}


def constant_tower(value: KModuleInvariants, depth: int) -> TowerOfKInvariants:
    return TowerOfKInvariants([value] * (depth + 1), [True] * depth, {"status": "Constant", "constant": True})


def multiplication_tower(factor: int, depth: int) -> TowerOfKInvariants:
    """Z <- Z <- ... with maps multiplication by factor (no certificate possible)."""
    Z = _integers()
    stages = [KModuleInvariants(Z, 1) for _ in range(depth + 1)]
    return TowerOfKInvariants(stages, [factor == 1] * depth, {"status": "Truncated", "depth": depth})
