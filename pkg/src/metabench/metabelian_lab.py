"""Split metabelian groups M x| A, their n-lower-central stages and H_2.

Stage groups are explicit finite groups W_j = (M / M I_n^j) x| (A-part),
with elements encoded as integers and multiplication vectorized in numpy.
Quotients of W are handled as permutation tables (right and left
multiplication by the images of the generators of G).

H_2(Q, K) of a finite group Q is computed from the Cayley graph: the cycle
space Z_1 is the relation module, H_0(Q, Z_1) is Z^(non-tree edges) modulo
the rows h.c - c, and H_2(Q) is the kernel of H_0(Q, Z_1) -> Z^gens. The
normalized bar complex serves as an independent oracle for small groups.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .abelian_homology import homology, homology_dense
from .completion_lab import wedge_completion_model
from .linalg import (
    abelian_invariants,
    factorize,
    hnf_with_transform,
    is_prime,
    rank_mod_p,
    sparse_abelian_invariants,
    sparse_rank_mod_p,
)
from .module_engine import (
    KModuleInvariants,
    MatrixActionModule,
    ModulePresentation,
    exterior_coinvariants,
    ideal_power_tower,
    identity,
    mat_pow,
    quotient_by_ideal_power,
    stabilization_index,
    submodule_presentation,
    unit_vector,
    vec_from_rows,
)
from .ring_kernel import (
    AbelianStructure,
    CapabilityError,
    CoefficientRing,
    Inconclusive,
    augmentation_ideal,
    augmentation_ideal_mod,
    make_group_algebra,
    power_generators,
)

DEFAULT_H2_CAP = 4096
DEFAULT_STAGE_CAP = 1 << 17
BAR_ORACLE_CAP = 64


class SizeCapExceeded(CapabilityError):
    """A finite group is larger than the configured cap."""

    def __init__(self, what: str, order: int, cap: int):
        super().__init__(f"{what} has order {order}, above the cap {cap}")
        self.order = order
        self.cap = cap


class OracleMismatch(AssertionError):
    """Two independent routes disagree."""


def _ring(K) -> CoefficientRing:
    if isinstance(K, CoefficientRing):
        return K
    return CoefficientRing.mod(int(K))


# ---------------------------------------------------------------------------
# data


@dataclass
class MetabelianDatum:
    """G = M x| A with a presentation of G on module and group generators.

    Generators are the module generators b_1.. of M followed by the group
    generators a_1.. of A. Relators are words: lists of (generator, exponent).
    complete_presentation is False when the relators only normally generate
    part of the relations (then image computations give lower bounds).
    """

    A: AbelianStructure
    M: ModulePresentation
    relators: list
    generator_names: list
    name: str = ""
    matrix_action: MatrixActionModule | None = None
    complete_presentation: bool = True
    split: bool = True

    def __post_init__(self):
        if self.M.algebra.group != self.A:
            raise ValueError("module algebra group does not match A")
        if self.M.algebra.coefficients.kind != "Z":
            raise ValueError("the module must be over Z[A]")
        if len(self.generator_names) != self.M.n_gens + self.A.ngens:
            raise ValueError("need one name per module generator and per generator of A")
        g = len(self.generator_names)
        for w in self.relators:
            if any(not 0 <= x < g for x, _ in w):
                raise ValueError("relator uses an unknown generator")

    @property
    def n_module_gens(self) -> int:
        return self.M.n_gens

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "A": self.A.to_json(),
            "module": self.matrix_action.to_json() if self.matrix_action else self.M.to_json(),
            "generators": list(self.generator_names),
            "relators": [[list(t) for t in w] for w in self.relators],
            "complete_presentation": self.complete_presentation,
        }


def _conj_word(k: int, power: int, x: int, e: int) -> list:
    """a_k^-power x^e a_k^power as a word."""
    out = []
    if power:
        out.append((k, -power))
    out.append((x, e))
    if power:
        out.append((k, power))
    return out


def _inverse_word(w) -> list:
    return [(x, -e) for x, e in reversed(w)]


def datum_from_matrix_action(A: AbelianStructure, module: MatrixActionModule, name: str = "") -> MetabelianDatum:
    """Datum with M = Z^rank and the standard finite presentation of M x| A."""
    alg = make_group_algebra(CoefficientRing.integers(), A)
    M = module.presentation(alg, name)
    d = module.rank
    gens = [f"b{i + 1}" for i in range(d)] + [f"a{k + 1}" for k in range(A.ngens)]
    rels = []
    for i in range(d):
        for j in range(i + 1, d):
            rels.append([(i, -1), (j, -1), (i, 1), (j, 1)])
    for k, mat in enumerate(module.matrices):
        a = d + k
        for i in range(d):
            target = [(j, mat[i][j]) for j in range(d) if mat[i][j]]
            rels.append([(a, -1), (i, 1), (a, 1)] + _inverse_word(target))
    for k in range(A.ngens):
        for l in range(k + 1, A.ngens):
            rels.append([(d + k, -1), (d + l, -1), (d + k, 1), (d + l, 1)])
    for k, m in enumerate(A.torsion_orders):
        rels.append([(d + A.free_rank + k, m)])
    return MetabelianDatum(A, M, rels, gens, name, module)


def klein_datum() -> MetabelianDatum:
    """Z x| Z with t acting by -1 (fundamental group of the Klein bottle)."""
    return datum_from_matrix_action(AbelianStructure(1), MatrixActionModule(1, [[[-1]]]), "klein")


def h_datum() -> MetabelianDatum:
    """Z^2 x| Z with t acting by the matrix [[0,1],[1,3]]."""
    return datum_from_matrix_action(AbelianStructure(1), MatrixActionModule(2, [[[0, 1], [1, 3]]]), "H")


def bs12_datum() -> MetabelianDatum:
    """BS(1,2) = Z[1/2] x| Z, presented as <b, a | a^-1 b a = b^2>."""
    A = AbelianStructure(1)
    alg = make_group_algebra(CoefficientRing.integers(), A)
    M = ModulePresentation(alg, 1, [[alg.sub(alg.gen(0), alg.const(2))]], "bs12")
    return MetabelianDatum(A, M, [[(1, -1), (0, 1), (1, 1), (0, -2)]], ["b", "a"], "bs12")


def lamplighter_datum(p: int = 2, commutator_range: int = 3) -> MetabelianDatum:
    """Z/p wr Z; the infinite presentation is truncated to a finite range."""
    A = AbelianStructure(1)
    alg = make_group_algebra(CoefficientRing.integers(), A)
    M = ModulePresentation(alg, 1, [[alg.const(p)]], f"lamplighter{p}")
    rels = [[(0, p)]]
    for k in range(1, commutator_range + 1):
        conj = _conj_word(1, k, 0, 1)
        rels.append([(0, -1)] + _inverse_word(conj) + [(0, 1)] + conj)
    return MetabelianDatum(A, M, rels, ["b", "a"], f"lamplighter{p}", complete_presentation=False)


BUNDLED_DATA = {
    "klein": klein_datum,
    "H": h_datum,
    "bs12": bs12_datum,
    "lamplighter": lamplighter_datum,
}


# ---------------------------------------------------------------------------
# integral lower central series of a split datum


@dataclass
class IntegralGammaTower:
    tower: object
    layers: list
    derivation: str

    def to_json(self) -> dict:
        return {
            "certificate": self.tower.certificate,
            "layers": [l.to_json() if hasattr(l, "to_json") else l for l in self.layers],
            "derivation": self.derivation,
        }


def _layer_invariants(M: ModulePresentation, ideal, i: int):
    """Additive structure of M I^i / M I^(i+1)."""
    alg = M.algebra
    stage = quotient_by_ideal_power(M, ideal, i + 1)
    vecs = [unit_vector(alg, M.n_gens, c, g) for c in range(M.n_gens) for g in power_generators(alg, list(ideal.generators), i)]
    vecs = [v for v in vecs if not stage.contains(v)]
    if not vecs:
        return KModuleInvariants(alg.coefficients)
    return submodule_presentation(stage, vecs).additive_structure()


def gamma_tower_ZJ(datum: MetabelianDatum, depth: int) -> IntegralGammaTower:
    """Tower M / M I^i with layers M I^i / M I^(i+1).

    For a split extension gamma_(i+1)(G) = M I^i for i >= 1, so G/gamma_(i+1)
    is (M / M I^i) x| A.
    """
    I = augmentation_ideal(datum.M.algebra)
    tower = ideal_power_tower(datum.M, I, depth)
    layers = [_layer_invariants(datum.M, I, i) for i in range(depth)]
    why = "split: gamma_2 = [M,A] = M I and [M I^i, G] = M I^(i+1), so gamma_(i+1) = M I^i"
    return IntegralGammaTower(tower, layers, why)


# ---------------------------------------------------------------------------
# finite stage groups


def _module_coordinates(pres: ModulePresentation, std: list, row) -> list:
    eng, entries, _ = pres._groebner()
    index = {k: i for i, k in enumerate(std)}
    nf = eng.reduce(vec_from_rows([pres.algebra.elem(f) for f in row]), entries)
    return ModulePresentation._coords(index, nf)


class FiniteStageGroup:
    """W_j = (M / M I_n^j) x| (A-part) as an explicit finite group.

    Elements are integers code = m_code * |A-part| + a_code, where m_code is
    the mixed-radix code of the canonical representative of m modulo the
    Hermite basis of the relation lattice. (m, a)(m', a') = (m a' + m', a a').

    exponent_policy "corollary" uses A-part exponent n^(2j+1); "tight" uses
    the least common multiple of n^j and the order of the action on the
    M-part (which still maps the kernel of G -> W_j into gamma_(j+1)).
    """

    def __init__(self, datum: MetabelianDatum, n: int, j: int, exponent_policy: str = "corollary",
                 cap: int = DEFAULT_STAGE_CAP):
        if n < 2:
            raise ValueError("n must be at least 2")
        if j < 0:
            raise ValueError("j must be non-negative")
        if exponent_policy not in ("corollary", "tight"):
            raise ValueError("exponent_policy is 'corollary' or 'tight'")
        self.datum, self.n, self.j, self.policy = datum, n, j, exponent_policy
        A = datum.A
        self.module_stage = quotient_by_ideal_power(datum.M, augmentation_ideal_mod(datum.M.algebra, n), j)
        model = self.module_stage.finite_model()
        if isinstance(model, Inconclusive):
            raise CapabilityError(f"stage module has no finite model: {model.reason}")
        self.model = model
        d = model.dim
        hnf, _, rank = hnf_with_transform(model.lattice, d) if d else ([], [], 0)
        if rank != d:
            raise CapabilityError("stage module is not finite")
        self.dim = d
        self.hnf = np.array(hnf[:d], dtype=np.int64).reshape(d, d)
        self.pivots = [int(self.hnf[c, c]) for c in range(d)]
        self.m_order = int(np.prod(self.pivots, dtype=object)) if d else 1
        # action matrices of the generators of A, entries reduced modulo |P|
        r = A.free_rank
        gen_mats = [model.actions[k] for k in range(r)] + [model.actions[2 * r + k] for k in range(len(A.torsion_orders))]
        self._gen_mats = [np.array(m, dtype=np.int64).reshape(d, d) % max(self.m_order, 1) for m in gen_mats]
        action_orders = [self._matrix_order(m) for m in self._gen_mats]
        if exponent_policy == "corollary":
            E = n ** (2 * j + 1)
        else:
            E = n ** j
            for o in action_orders:
                E = E * o // gcd(E, o)
        self.exponent = E
        self.a_orders = [E] * r + [gcd(m, E) for m in A.torsion_orders]
        for mat, o in zip(self._gen_mats, self.a_orders):
            if not self._is_identity(self._mat_pow(mat, o)):
                raise AssertionError("A-part exponent does not act trivially on the stage module")
        self.a_order = int(np.prod(self.a_orders, dtype=object)) if self.a_orders else 1
        self.order = self.m_order * self.a_order
        if self.order > cap:
            raise SizeCapExceeded(f"stage group W_{j} (n={n})", self.order, cap)
        self.m_strides = self._strides(self.pivots)
        self.a_strides = self._strides(self.a_orders)
        self._a_mats = self._all_a_matrices()
        self.identity = 0
        self.generators = self._generator_images()

    # -- helpers ---------------------------------------------------------------
    @staticmethod
    def _strides(radices) -> np.ndarray:
        out, s = [], 1
        for x in reversed(radices):
            out.append(s)
            s *= x
        return np.array(list(reversed(out)), dtype=np.int64)

    def _reduce_m(self, v: np.ndarray) -> np.ndarray:
        v = v.copy()
        for c in range(self.dim):
            q = np.floor_divide(v[:, c], self.pivots[c])
            v -= q[:, None] * self.hnf[c][None, :]
        return v

    def _is_identity(self, mat) -> bool:
        if not self.dim:
            return True
        diff = mat - np.identity(self.dim, dtype=np.int64)
        return not self._reduce_m(diff).any()

    def _mat_mul(self, a, b):
        mod = max(self.m_order, 1)
        return (a @ b) % mod

    def _mat_pow(self, mat, e: int):
        out = np.identity(self.dim, dtype=np.int64)
        base = mat
        while e:
            if e & 1:
                out = self._mat_mul(out, base)
            base = self._mat_mul(base, base)
            e >>= 1
        return out

    def _matrix_order(self, mat) -> int:
        cur = np.identity(self.dim, dtype=np.int64)
        for k in range(1, 10 ** 6):
            cur = self._mat_mul(cur, mat)
            if self._is_identity(cur):
                return k
        raise AssertionError("action order not found")

    def _all_a_matrices(self) -> np.ndarray:
        d = self.dim
        mats = np.zeros((self.a_order, d, d), dtype=np.int64)
        for code in range(self.a_order):
            exps = (code // self.a_strides) % np.array(self.a_orders, dtype=np.int64) if self.a_orders else []
            cur = np.identity(d, dtype=np.int64)
            for mat, e in zip(self._gen_mats, exps):
                cur = self._mat_mul(cur, self._mat_pow(mat, int(e)))
            mats[code] = cur
        return mats

    # -- encoding --------------------------------------------------------------
    def decode(self, codes):
        codes = np.asarray(codes, dtype=np.int64)
        a = codes % self.a_order
        mcode = codes // self.a_order
        m = (mcode[:, None] // self.m_strides[None, :]) % np.array(self.pivots, dtype=np.int64)[None, :] if self.dim else np.zeros((len(codes), 0), dtype=np.int64)
        return m, a

    def encode(self, m, a) -> np.ndarray:
        m = self._reduce_m(np.asarray(m, dtype=np.int64).reshape(-1, self.dim)) if self.dim else np.zeros((len(a), 0), dtype=np.int64)
        return (m @ self.m_strides if self.dim else 0) * self.a_order + np.asarray(a, dtype=np.int64)

    def a_exponents(self, a_codes) -> np.ndarray:
        a_codes = np.asarray(a_codes, dtype=np.int64)
        if not self.a_orders:
            return np.zeros((len(a_codes), 0), dtype=np.int64)
        return (a_codes[:, None] // self.a_strides[None, :]) % np.array(self.a_orders, dtype=np.int64)[None, :]

    def a_code(self, exps) -> np.ndarray:
        exps = np.asarray(exps, dtype=np.int64) % np.array(self.a_orders, dtype=np.int64)
        return exps @ self.a_strides

    def element(self, m, a_exps) -> int:
        """Code of (m, a) from module coordinates and A-part exponents."""
        return int(self.encode([m], [int(self.a_code(a_exps))])[0])

    # -- group operations (vectorized) -----------------------------------------
    def mul(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64))
        x, y = x.ravel(), y.ravel()
        mx, ax = self.decode(x)
        my, ay = self.decode(y)
        if self.dim:
            m = np.einsum("nd,nde->ne", mx, self._a_mats[ay]) + my
        else:
            m = mx
        ea = self.a_exponents(ax) + self.a_exponents(ay)
        return self.encode(m, self.a_code(ea) if self.a_orders else np.zeros(len(x), dtype=np.int64))

    def inv(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        m, a = self.decode(x)
        ai = self.a_code(-self.a_exponents(a)) if self.a_orders else np.zeros(len(x), dtype=np.int64)
        mm = -np.einsum("nd,nde->ne", m, self._a_mats[ai]) if self.dim else m
        return self.encode(mm, ai)

    def power(self, x, k: int) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        if k < 0:
            x, k = self.inv(x), -k
        out = np.zeros_like(x)
        base = x
        while k:
            if k & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            k >>= 1
        return out

    def conj(self, x, w) -> np.ndarray:
        """w^-1 x w."""
        return self.mul(self.mul(self.inv(w), x), w)

    def comm(self, x, w) -> np.ndarray:
        """[x, w] = x^-1 w^-1 x w."""
        return self.mul(self.inv(x), self.conj(x, w))

    def evaluate(self, word) -> int:
        out = np.array([self.identity], dtype=np.int64)
        for x, e in word:
            out = self.mul(out, self.power([self.generators[x]], e))
        return int(out[0])

    def _generator_images(self) -> list:
        d, A = self.dim, self.datum.A
        out = []
        for i in range(self.datum.n_module_gens):
            row = [self.datum.M.algebra.one() if c == i else self.datum.M.algebra.zero() for c in range(self.datum.n_module_gens)]
            coords = _module_coordinates(self.module_stage, self.model.basis_labels, row) if d else []
            out.append(self.element(coords, [0] * A.ngens))
        for k in range(A.ngens):
            out.append(self.element([0] * d, [int(u == k) for u in range(A.ngens)]))
        return out

    def m_part(self) -> np.ndarray:
        """Codes of the normal abelian subgroup (m, 1)."""
        return np.arange(self.m_order, dtype=np.int64) * self.a_order

    def module_element(self, row) -> int:
        """Code of (image of a vector of M, 1)."""
        coords = _module_coordinates(self.module_stage, self.model.basis_labels, row) if self.dim else []
        return self.element(coords, [0] * self.datum.A.ngens)

    # -- checks ----------------------------------------------------------------
    def check_group_axioms(self, exhaustive_limit: int = 512, samples: int = 10_000, seed: int = 0) -> dict:
        q = self.order
        els = np.arange(q, dtype=np.int64)
        ident = bool(np.all(self.mul(els, 0) == els) and np.all(self.mul(0, els) == els))
        inverses = bool(np.all(self.mul(els, self.inv(els)) == 0))
        if q <= exhaustive_limit:
            x, y = np.meshgrid(els, els, indexing="ij")
            xy = self.mul(x.ravel(), y.ravel()).reshape(q, q)
            assoc = True
            for z in range(q):
                left = self.mul(xy.ravel(), z)
                right = self.mul(x.ravel(), self.mul(y.ravel(), z))
                if not np.array_equal(left, right):
                    assoc = False
                    break
            mode = "exhaustive"
        else:
            rng = np.random.default_rng(seed)
            x, y, z = (rng.integers(0, q, samples) for _ in range(3))
            assoc = bool(np.array_equal(self.mul(self.mul(x, y), z), self.mul(x, self.mul(y, z))))
            mode = f"sampled {samples}"
        # the M-part is abelian and normal, and the relators of G hold
        mp = self.m_part()
        rng = np.random.default_rng(seed + 1)
        u, v = rng.choice(mp, 200), rng.choice(mp, 200)
        abelian = bool(np.array_equal(self.mul(u, v), self.mul(v, u)))
        normal = all(bool(np.all(self.conj(u, g) % self.a_order == 0)) for g in self.generators)
        relators = all(self.evaluate(w) == 0 for w in self.datum.relators)
        ok = ident and inverses and assoc and abelian and normal and relators
        return {"identity": ident, "inverses": inverses, "associativity": assoc, "mode": mode,
                "m_part_abelian": abelian, "m_part_normal": normal, "relators_hold": relators, "passed": ok}

    def to_json(self) -> dict:
        return {"n": self.n, "j": self.j, "policy": self.policy, "order": self.order,
                "m_part": self.m_order, "a_part": self.a_orders}


def finite_stage_group(datum: MetabelianDatum, n: int, j: int, exponent_policy: str = "corollary",
                       cap: int = DEFAULT_STAGE_CAP) -> FiniteStageGroup:
    return FiniteStageGroup(datum, n, j, exponent_policy, cap)


def project_stage(big: FiniteStageGroup, small: FiniteStageGroup, codes) -> np.ndarray:
    """The quotient map W_(j+k) -> W_j on element codes."""
    if big.datum is not small.datum or big.n != small.n:
        raise ValueError("stages of different data")
    m, a = big.decode(codes)
    # module part: map each staircase basis vector of the bigger stage
    alg = big.datum.M.algebra
    images = []
    for comp, mono in big.model.basis_labels:
        row = [alg.zero() for _ in range(big.datum.n_module_gens)]
        row[comp] = alg.elem({mono: 1})
        images.append(_module_coordinates(small.module_stage, small.model.basis_labels, row) if small.dim else [])
    img = np.array(images, dtype=np.int64).reshape(big.dim, small.dim)
    mm = m @ img if big.dim else np.zeros((len(a), small.dim), dtype=np.int64)
    ea = big.a_exponents(a)
    ac = small.a_code(ea) if small.a_orders else np.zeros(len(a), dtype=np.int64)
    return small.encode(mm % max(small.m_order, 1), ac)


def functoriality_check(datum: MetabelianDatum, n: int, j: int, samples: int = 1000, policy: str = "corollary",
                        cap: int = DEFAULT_STAGE_CAP, seed: int = 0) -> dict:
    """W_(j+1) -> W_j -> W_(j-1) agrees with the direct map, and maps are homomorphisms."""
    W2, W1, W0 = (FiniteStageGroup(datum, n, k, policy, cap) for k in (j + 1, j, j - 1))
    rng = np.random.default_rng(seed)
    x = rng.integers(0, W2.order, samples)
    y = rng.integers(0, W2.order, samples)
    comp = project_stage(W1, W0, project_stage(W2, W1, x))
    direct = project_stage(W2, W0, x)
    hom = np.array_equal(project_stage(W2, W1, W2.mul(x, y)),
                         W1.mul(project_stage(W2, W1, x), project_stage(W2, W1, y)))
    same = bool(np.array_equal(comp, direct))
    return {"composite_equals_direct": same, "homomorphism": bool(hom), "passed": same and bool(hom),
            "samples": samples, "orders": [W2.order, W1.order, W0.order]}


# ---------------------------------------------------------------------------
# subgroups


def closure(W: FiniteStageGroup, gens) -> np.ndarray:
    """Sorted elements of the subgroup generated by gens."""
    mask = np.zeros(W.order, dtype=bool)
    mask[W.identity] = True
    frontier = np.array([W.identity], dtype=np.int64)
    gens = np.unique(np.asarray(list(gens), dtype=np.int64))
    while len(frontier):
        new = np.unique(np.concatenate([W.mul(frontier, g) for g in gens])) if len(gens) else np.array([], dtype=np.int64)
        new = new[~mask[new]]
        mask[new] = True
        frontier = new
    return np.flatnonzero(mask)


def small_generators(W: FiniteStageGroup, elements, start=()) -> list:
    """A short generating list for the subgroup with the given elements."""
    gens = [int(g) for g in start]
    mask = np.zeros(W.order, dtype=bool)
    mask[closure(W, gens)] = True
    for x in np.asarray(elements, dtype=np.int64):
        if not mask[x]:
            gens.append(int(x))
            mask[closure(W, gens)] = True
    return gens


def normal_closure(W: FiniteStageGroup, seeds, conj_by=None) -> tuple:
    """(elements, generators) of the normal subgroup generated by seeds."""
    conj_by = W.generators if conj_by is None else conj_by
    gens = small_generators(W, seeds)
    while True:
        els = closure(W, gens)
        mask = np.zeros(W.order, dtype=bool)
        mask[els] = True
        extra = []
        for w in conj_by:
            c = W.conj(np.array(gens, dtype=np.int64), w) if gens else np.array([], dtype=np.int64)
            extra.extend(int(v) for v in c[~mask[c]])
        if not extra:
            return els, small_generators(W, els, gens[:0]) if len(gens) > 8 else gens
        gens = small_generators(W, np.unique(np.array(extra, dtype=np.int64)), gens)


@dataclass
class NSeries:
    """gamma^[n]_1 >= gamma^[n]_2 >= ... inside a stage group."""

    W: FiniteStageGroup
    n: int
    terms: list
    generators: list
    sandwich: dict = field(default_factory=dict)

    def order(self, i: int) -> int:
        return len(self.terms[i - 1])

    def to_json(self) -> dict:
        return {"orders": [len(t) for t in self.terms], "sandwich": self.sandwich}


def _module_power_chain(W: FiniteStageGroup, n: int, top: int) -> list:
    """Element sets of P I_n^i (i = 0..top) for the module part P of W."""
    a_gens = W.generators[W.datum.n_module_gens:]
    gens = W.generators[: W.datum.n_module_gens]
    chain = [closure(W, gens)]
    for _ in range(top):
        g = np.array(gens, dtype=np.int64) if gens else np.array([], dtype=np.int64)
        new = []
        if len(g):
            new += list(W.power(g, n))
            for a in a_gens:
                new += list(W.mul(W.conj(g, a), W.inv(g)))
        gens = small_generators(W, np.array(new, dtype=np.int64))
        chain.append(closure(W, gens))
    return chain


def _subset(a, b) -> bool:
    return bool(np.isin(a, b, assume_unique=True).all())


def n_lower_central_series(W: FiniteStageGroup, n: int, depth: int) -> NSeries:
    """gamma_1 = W, gamma_(i+1) = normal closure of {x^n, [x, w]} for x in gens(gamma_i).

    Also checks the sandwich inclusions for the module part P inside W:
    P I_n^i is contained in gamma_(i+1) and gamma_(2i+T+1) meets P inside
    P I_n^i, at the indices where W computes G/gamma faithfully.
    """
    terms = [np.arange(W.order, dtype=np.int64)]
    gens = [list(W.generators)]
    for _ in range(depth - 1):
        cur = np.array(gens[-1], dtype=np.int64)
        seeds = list(W.power(cur, n)) if len(cur) else []
        for w in W.generators:
            seeds += list(W.comm(cur, w)) if len(cur) else []
        els, g = normal_closure(W, np.unique(np.array(seeds, dtype=np.int64)))
        terms.append(els)
        gens.append(g)
    series = NSeries(W, n, terms, gens)
    faithful = W.j + 1
    P = W.m_part()
    chain = _module_power_chain(W, n, W.j)
    T = W.datum.A.torsion_exponent_T(n)
    lower, upper = {}, {}
    for i in range(0, W.j + 1):
        if i + 1 <= min(faithful, depth):
            lower[i] = _subset(chain[i], terms[i])
        k = 2 * i + T + 1
        if k <= min(faithful, depth):
            upper[i] = _subset(np.intersect1d(terms[k - 1], P), chain[i])
    exact2 = None
    if depth >= 2 and faithful >= 2:
        exact2 = bool(np.array_equal(np.intersect1d(terms[1], P), chain[1]))
    series.sandwich = {
        "T": T,
        "lower": lower,
        "upper": upper,
        "gamma2_meet_P_equals_P_In": exact2,
        "passed": all(lower.values()) and all(upper.values()) and exact2 is not False,
    }
    return series


# ---------------------------------------------------------------------------
# finite groups as permutation tables


class FiniteGroupTable:
    """A finite group given by right and left multiplication by generators.

    right[x][q] = q * g_x and left[x][q] = g_x * q on labels 0..order-1.
    """

    def __init__(self, right, left, identity: int = 0, names=None):
        self.right = np.asarray(right, dtype=np.int64)
        self.left = np.asarray(left, dtype=np.int64)
        self.ngens, self.order = self.right.shape
        self.identity = identity
        self.names = list(names) if names else [f"g{i}" for i in range(self.ngens)]
        self.right_inv = np.empty_like(self.right)
        for x in range(self.ngens):
            self.right_inv[x][self.right[x]] = np.arange(self.order)

    @classmethod
    def abelian(cls, orders) -> "FiniteGroupTable":
        orders = [int(m) for m in orders]
        size = int(np.prod(orders)) if orders else 1
        labels = np.arange(size)
        strides = FiniteStageGroup._strides(orders)
        right = []
        for k, m in enumerate(orders):
            digit = (labels // strides[k]) % m
            right.append(labels + (((digit + 1) % m) - digit) * strides[k])
        return cls(right, right)

    @classmethod
    def from_stage(cls, W: FiniteStageGroup, normal=None, gens=None) -> "FiniteGroupTable":
        """W / normal, generated by the images of gens (default: those of G)."""
        return quotient_table(W, normal if normal is not None else np.array([W.identity]), gens)[0]

    def word_of(self) -> tuple:
        """BFS spanning data: order of visit and (parent, generator) per element."""
        parent = np.full(self.order, -1, dtype=np.int64)
        via = np.full(self.order, -1, dtype=np.int64)
        seen = np.zeros(self.order, dtype=bool)
        seen[self.identity] = True
        order = [self.identity]
        frontier = [self.identity]
        while frontier:
            nxt = []
            for v in frontier:
                for x in range(self.ngens):
                    w = int(self.right[x][v])
                    if not seen[w]:
                        seen[w] = True
                        parent[w], via[w] = v, x
                        nxt.append(w)
                        order.append(w)
            frontier = nxt
        if not seen.all():
            raise ValueError("generators do not generate the group")
        return order, parent, via

    def multiplication_table(self) -> np.ndarray:
        """mult[u, v] = u * v."""
        order, parent, via = self.word_of()
        mult = np.empty((self.order, self.order), dtype=np.int64)
        mult[:, self.identity] = np.arange(self.order)
        for v in order[1:]:
            mult[:, v] = self.right[via[v]][mult[:, parent[v]]]
        return mult

    def walk(self, word, start=None) -> tuple:
        """Edge coefficients {(vertex, gen): c} of the path of a word, and its end."""
        v = self.identity if start is None else start
        edges: dict = {}
        for x, e in word:
            step = 1 if e > 0 else -1
            for _ in range(abs(e)):
                if step > 0:
                    edges[(v, x)] = edges.get((v, x), 0) + 1
                    v = int(self.right[x][v])
                else:
                    v = int(self.right_inv[x][v])
                    edges[(v, x)] = edges.get((v, x), 0) - 1
        return {k: c for k, c in edges.items() if c}, v


def quotient_table(W: FiniteStageGroup, normal, gens=None) -> tuple:
    """(FiniteGroupTable of W/normal, coset labels of all elements of W)."""
    gens = list(W.generators if gens is None else gens)
    normal = np.asarray(normal, dtype=np.int64)
    labels = np.full(W.order, -1, dtype=np.int64)
    reps = []
    for x in range(W.order):
        if labels[x] < 0:
            labels[W.mul(x, normal)] = len(reps)
            reps.append(x)
    reps = np.array(reps, dtype=np.int64)
    right = [labels[W.mul(reps, g)] for g in gens]
    left = [labels[W.mul(g, reps)] for g in gens]
    return FiniteGroupTable(right, left, int(labels[W.identity]), W.datum.generator_names if gens is W.generators else None), labels


# ---------------------------------------------------------------------------
# H_2 of finite groups


class CayleyCycles:
    """Spanning tree and fundamental cycles of the Cayley graph of a table."""

    def __init__(self, table: FiniteGroupTable):
        self.table = table
        g, q = table.ngens, table.order
        order, parent, via = table.word_of()
        self.tree_edge = {int(v): (int(parent[v]), int(via[v])) for v in order[1:]}
        tree_ids = {p * g + x for p, x in self.tree_edge.values()}
        self.nontree = [e for e in range(q * g) if e not in tree_ids]
        self.nt_index = {e: k for k, e in enumerate(self.nontree)}
        self.paths: dict = {table.identity: ()}
        for v in order[1:]:
            p, x = self.tree_edge[int(v)]
            self.paths[int(v)] = self.paths[p] + (p * g + x,)

    @property
    def rank(self) -> int:
        return len(self.nontree)

    def full_cycle(self, e: int) -> dict:
        """The fundamental cycle of a non-tree edge as {edge id: coefficient}."""
        g = self.table.ngens
        src, x = divmod(e, g)
        tgt = int(self.table.right[x][src])
        out = {e: 1}
        a, b = self.paths[src], self.paths[tgt]
        k = 0
        while k < min(len(a), len(b)) and a[k] == b[k]:
            k += 1
        for t in a[k:]:
            out[t] = out.get(t, 0) + 1
        for t in b[k:]:
            out[t] = out.get(t, 0) - 1
        return {t: c for t, c in out.items() if c}

    def restrict(self, edges: dict) -> dict:
        """Non-tree coordinates of a cycle given by edge coefficients."""
        out: dict = {}
        for e, c in edges.items():
            k = self.nt_index.get(e)
            if k is not None:
                out[k] = out.get(k, 0) + c
        return {k: c for k, c in out.items() if c}

    def coinvariant_rows(self) -> list:
        """Rows h.c - c for every fundamental cycle c and generator h."""
        tab = self.table
        g = tab.ngens
        rows = []
        for k, e in enumerate(self.nontree):
            cyc = self.full_cycle(e)
            for h in range(g):
                moved: dict = {}
                for t, c in cyc.items():
                    src, x = divmod(t, g)
                    tt = int(tab.left[h][src]) * g + x
                    moved[tt] = moved.get(tt, 0) + c
                row = self.restrict(moved)
                row[k] = row.get(k, 0) - 1
                row = {a: b for a, b in row.items() if b}
                if row:
                    rows.append(row)
        return rows

    def abelianized(self, rows) -> list:
        """Generator exponent sums of cycles given in non-tree coordinates."""
        if not hasattr(self, "_fund_ab"):
            g = self.table.ngens
            fund = []
            for e in self.nontree:
                v = [0] * g
                for t, c in self.full_cycle(e).items():
                    v[t % g] += c
                fund.append(v)
            self._fund_ab = fund
        g = self.table.ngens
        out = []
        for r in rows:
            v = [0] * g
            for k, c in r.items():
                for x, y in enumerate(self._fund_ab[k]):
                    v[x] += c * y
            out.append(v)
        return out

    def word_cycle(self, word) -> dict:
        edges, end = self.table.walk(word)
        if end != self.table.identity:
            raise ValueError("word is not a relator of this group")
        g = self.table.ngens
        return self.restrict({v * g + x: c for (v, x), c in edges.items()})


def _as_table(Q) -> FiniteGroupTable:
    if isinstance(Q, FiniteGroupTable):
        return Q
    if isinstance(Q, FiniteStageGroup):
        return FiniteGroupTable.from_stage(Q)
    raise TypeError("expected a FiniteGroupTable or FiniteStageGroup")


def _unit_rows(n: int) -> list:
    return [{k: 1} for k in range(n)]


@dataclass
class H2Data:
    """Cached linear algebra of H_2(Q, F_p) via the relation module."""

    cycles: CayleyCycles
    p: int
    rows: list
    rank_rows: int
    rank_ab: int

    @property
    def dimension(self) -> int:
        return self.cycles.rank - self.rank_rows - self.rank_ab

    def image_dimension(self, extra_rows) -> int:
        """dim of the image in H_2 of the span of the given cycles (non-tree coordinates)."""
        extra = [dict(r) for r in extra_rows if r]
        if not extra:
            return 0
        joint = sparse_rank_mod_p([dict(r) for r in self.rows] + extra, self.p)
        ab = self.cycles.abelianized(extra)
        rank_ab = rank_mod_p(np.array(ab, dtype=np.int64) % self.p, self.p) if ab else 0
        return joint - self.rank_rows - rank_ab


def h2_data(Q, p: int) -> H2Data:
    tab = _as_table(Q)
    cyc = CayleyCycles(tab)
    rows = cyc.coinvariant_rows()
    rank_rows = sparse_rank_mod_p([dict(r) for r in rows], p)
    ab = cyc.abelianized(_unit_rows(cyc.rank))
    rank_ab = rank_mod_p(np.array(ab, dtype=np.int64) % p, p) if ab else 0
    return H2Data(cyc, p, rows, rank_rows, rank_ab)


def h2_integral(Q) -> tuple:
    """(H_2(Q, Z) invariant factors, H_1(Q, Z) invariant factors)."""
    tab = _as_table(Q)
    cyc = CayleyCycles(tab)
    free, tors = sparse_abelian_invariants([dict(r) for r in cyc.coinvariant_rows()], cyc.rank)
    ab = cyc.abelianized(_unit_rows(cyc.rank))
    h1_free, h1 = abelian_invariants(ab, tab.ngens)
    if free != tab.ngens or h1_free:
        raise AssertionError("relation module coinvariants have the wrong rank")
    return tors, h1


def h2_bar(Q, p: int) -> int:
    """dim H_2(Q, F_p) from the normalized bar complex (brute force)."""
    tab = _as_table(Q)
    q = tab.order
    if q > BAR_ORACLE_CAP:
        raise SizeCapExceeded("bar oracle group", q, BAR_ORACLE_CAP)
    mult = tab.multiplication_table()
    e = tab.identity
    els = [x for x in range(q) if x != e]
    idx1 = {x: k for k, x in enumerate(els)}
    m = len(els)

    def c2(a, b):
        return idx1[a] * m + idx1[b]

    d2 = []
    for a in els:
        for b in els:
            row: dict = {}
            for t, s in ((b, 1), (int(mult[a, b]), -1), (a, 1)):
                if t != e:
                    row[idx1[t]] = row.get(idx1[t], 0) + s
            d2.append(row)
    d3 = []
    for a in els:
        for b in els:
            ab = int(mult[a, b])
            for c in els:
                bc = int(mult[b, c])
                row = {}
                for (u, v), s in (((b, c), 1), ((ab, c), -1), ((a, bc), 1), ((a, b), -1)):
                    if u != e and v != e:
                        k = c2(u, v)
                        row[k] = row.get(k, 0) + s
                d3.append(row)
    r2 = sparse_rank_mod_p(d2, p)
    r3 = sparse_rank_mod_p(d3, p)
    return m * m - r2 - r3


def h2_finite(Q, K, cap: int = DEFAULT_H2_CAP, cross_check: bool = True) -> KModuleInvariants:
    """H_2(Q, K) for a finite group Q and K = Z/m.

    Over a prime field the relation-module rank computation is used; other
    residue rings go through H_2(Q, Z) and H_1(Q, Z) and universal
    coefficients. Groups of order <= 64 are cross-checked with the bar
    complex when K is a prime field.
    """
    K = _ring(K)
    if K.kind != "Zmod":
        raise CapabilityError("h2_finite needs coefficients Z/m")
    tab = _as_table(Q)
    if tab.order > cap:
        raise SizeCapExceeded("group", tab.order, cap)
    m = K.modulus
    if is_prime(m):
        dim = h2_data(tab, m).dimension
        if cross_check and tab.order <= BAR_ORACLE_CAP:
            bar = h2_bar(tab, m)
            if bar != dim:
                raise OracleMismatch(f"H_2 over F_{m}: relation module {dim}, bar complex {bar}")
        return KModuleInvariants(K, 0, [m] * dim)
    h2z, h1z = h2_integral(tab)
    Z = CoefficientRing.integers()
    return KModuleInvariants(Z, 0, h2z).tensor(K).direct_sum(KModuleInvariants(Z, 0, h1z).tor(K))


# ---------------------------------------------------------------------------
# H_2 towers


@dataclass
class H2TowerReport:
    datum: str
    n: int
    coefficients: str
    depth: int
    stage_group: dict
    stages: list
    images: list
    images_from_next: list
    layers: list
    certificate: dict
    truncated: list
    series: dict

    def stable_window(self) -> list:
        at = self.certificate.get("from")
        if at is None:
            return []
        return [i for i in range(max(at, 2), self.depth + 1)]

    def to_json(self) -> dict:
        return {
            "datum": self.datum,
            "n": self.n,
            "K": self.coefficients,
            "depth": self.depth,
            "stage_group": self.stage_group,
            "stages": self.stages,
            "images": self.images,
            "images_from_next": self.images_from_next,
            "layers": self.layers,
            "certificate": self.certificate,
            "truncated": self.truncated,
            "series": self.series,
        }


def _layer_length(W: FiniteStageGroup, series: NSeries, i: int, p: int) -> dict:
    """(gamma_i / gamma_(i+1)) tensor F_p: gamma_i / gamma_(i+1) gamma_i^p."""
    top, below = series.terms[i - 1], series.terms[i]
    gens = list(series.generators[i]) + [int(v) for v in W.power(np.array(series.generators[i - 1], dtype=np.int64), p)]
    sub = closure(W, gens)
    index = len(top) // len(sub)
    f = factorize(index)
    if set(f) - {p}:
        raise AssertionError("layer tensor F_p is not a p-group")
    return {"order": len(top) // len(below), "length": f.get(p, 0)}


def _stable_certificate(images: list) -> dict:
    """First index from which three consecutive image dimensions agree and stay equal."""
    dims = [d for d in images]
    for s in range(1, len(dims) - 1):
        window = dims[s - 1 :]
        if None in window:
            continue
        if len(window) >= 3 and all(d == window[0] for d in window):
            return {"status": "Stable", "from": s, "value": window[0], "consecutive": len(window)}
    return {"status": "Inconclusive", "reason": "no three consecutive equal images within depth"}


def h2_tower(datum: MetabelianDatum, n: int, K=None, depth: int = 4, cap: int = DEFAULT_H2_CAP,
             stage_cap: int = DEFAULT_STAGE_CAP, exponent_policy: str = "tight",
             bar_checks: int = 2) -> H2TowerReport:
    """H_2(G / gamma^[n]_i, K) for i <= depth with the image chain of H_2(G, K).

    Im(xi_i) is computed from the relators of G (their classes span the image
    of H_2(G) in the relation-module coinvariants of Q_i) and, independently,
    as the image of H_2(Q_(i+1)) pushed down along Q_(i+1) -> Q_i. The
    smallest bar_checks nontrivial stages are cross-checked with the bar complex.
    """
    K = _ring(n if K is None else K)
    p = K.modulus
    if K.kind != "Zmod" or not is_prime(p):
        raise CapabilityError("image chains are computed over prime fields Z/p")
    W = FiniteStageGroup(datum, n, depth, exponent_policy, stage_cap)
    series = n_lower_central_series(W, n, depth + 1)
    tables = {}
    labels = {}
    for i in range(1, depth + 2):
        tables[i], labels[i] = quotient_table(W, series.terms[i - 1])
    stages, images, from_next, layers, truncated = [], [], [], [], []
    oracle_budget = bar_checks
    for i in range(1, depth + 1):
        tab = tables[i]
        entry = {"index": i, "order": tab.order}
        layers.append({"index": i, **_layer_length(W, series, i, p)})
        if tab.order > cap:
            entry["h2"] = None
            truncated.append({"index": i, "reason": f"order {tab.order} above cap {cap}"})
            stages.append(entry)
            images.append(None)
            from_next.append(None)
            continue
        data = h2_data(tab, p)
        entry["h2"] = KModuleInvariants(K, 0, [p] * data.dimension).to_json()
        entry["h2_length"] = data.dimension
        if 1 < tab.order <= BAR_ORACLE_CAP and oracle_budget > 0:
            oracle_budget -= 1
            bar = h2_bar(tab, p)
            entry["bar_oracle"] = bar
            if bar != data.dimension:
                raise OracleMismatch(f"stage {i}: relation module {data.dimension}, bar complex {bar}")
        stages.append(entry)
        rel_rows = [data.cycles.word_cycle(w) for w in datum.relators]
        images.append(data.image_dimension(rel_rows))
        # push the fundamental cycles of Q_(i+1) down to Q_i
        nxt = tables[i + 1]
        proj = labels[i][quotient_reps(labels[i + 1])]
        up = CayleyCycles(nxt)
        g = nxt.ngens
        pushed = []
        for e in up.nontree:
            cyc = up.full_cycle(e)
            moved: dict = {}
            for t, c in cyc.items():
                src, x = divmod(t, g)
                tt = int(proj[src]) * g + x
                moved[tt] = moved.get(tt, 0) + c
            pushed.append(data.cycles.restrict(moved))
        from_next.append(data.image_dimension(pushed))
    cert = _stable_certificate(images)
    if cert["status"] == "Stable" and not datum.complete_presentation:
        cert["note"] = "relators are a truncated presentation; images are lower bounds"
    return H2TowerReport(
        datum.name, n, str(K), depth, W.to_json(), stages, images, from_next, layers, cert, truncated,
        series.to_json(),
    )


def quotient_reps(labels) -> np.ndarray:
    """One representative element per coset label (the first occurrence)."""
    labels = np.asarray(labels)
    uniq, first = np.unique(labels, return_index=True)
    out = np.empty(len(uniq), dtype=np.int64)
    out[uniq] = first
    return out


# ---------------------------------------------------------------------------
# H_2(G) for cyclic A and M free abelian (Wang sequence)


def h2_by_wang(datum: MetabelianDatum, K) -> KModuleInvariants:
    """H_2(M x| Z, K) for M = Z^d: coker(wedge^2 B - 1) plus ker(B - 1) over K.

    Over a prime field the Wang sequence splits, so the result is exact;
    for other residue rings only the length is meaningful.
    """
    K = _ring(K)
    mod = datum.matrix_action
    if mod is None or datum.A.free_rank != 1 or datum.A.torsion_orders:
        raise CapabilityError("the Wang computation needs A = Z and a matrix action on Z^d")
    coker_wedge = exterior_coinvariants(mod, K)
    # ker(B - 1) on (Z/m)^d has the same order as its cokernel
    B = mod.matrices[0]
    d = mod.rank
    rows = [[B[i][j] - int(i == j) for j in range(d)] for i in range(d)]
    ker = KModuleInvariants.from_relations(K, rows, d)
    return coker_wedge.direct_sum(ker)


# ---------------------------------------------------------------------------
# verification reports


def _length(x) -> int | None:
    if x is None:
        return None
    if isinstance(x, int):
        return x
    return x.length


def bousfield_ses_report(datum: MetabelianDatum, n: int, K=None, depth: int = 4, h2_of_G=None,
                         cap: int = DEFAULT_H2_CAP, tower: H2TowerReport | None = None) -> dict:
    """Length bookkeeping of 0 -> Im(xi_i) -> H_2(Q_i) -> layer_i tensor K -> 0 on the stable window."""
    rep = tower if tower is not None else h2_tower(datum, n, K, depth, cap)
    checks = []
    for i in range(2, rep.depth + 1):
        st = rep.stages[i - 1]
        if st.get("h2_length") is None:
            continue
        lhs = st["h2_length"]
        im = rep.images[i - 1]
        lay = rep.layers[i - 1]["length"]
        checks.append({"index": i, "h2": lhs, "image": im, "image_from_next": rep.images_from_next[i - 1],
                       "layer": lay, "holds": lhs == im + lay, "in_window": i in rep.stable_window()})
    window = rep.stable_window()
    out = {
        "tower": rep.to_json(),
        "checks": checks,
        "stable_window": window,
    }
    if not window:
        out["status"] = "Inconclusive"
        out["reason"] = "no stable window within depth"
        return out
    stable = rep.certificate["value"]
    in_window = [c for c in checks if c["in_window"]]
    ok = bool(in_window) and all(c["holds"] for c in in_window)
    ok = ok and all(c["image"] == c["image_from_next"] for c in checks)
    out["stable_image_length"] = stable
    out["status"] = "Pass" if ok else "Fail"
    if h2_of_G is not None:
        total = _length(h2_of_G)
        out["h2_of_G_length"] = total
        out["phi_kernel_length"] = total - stable
        if total < stable:
            out["status"] = "Fail"
    return out


def _stage_dense(M: ModulePresentation, m: int):
    I = augmentation_ideal(M.algebra)
    return quotient_by_ideal_power(M, I, m)


def _exterior_of_model(model) -> KModuleInvariants:
    """(wedge^2_K N)_A for a dense model N over a prime field K."""
    from .module_engine import exterior_square_action, mat_sub

    alg = model.algebra
    K = alg.coefficients
    d = model.dim
    dim = d * (d - 1) // 2
    if dim == 0:
        return KModuleInvariants(K)
    r, s = alg.r, alg.s
    rows = []
    for v in list(range(r)) + [2 * r + k for k in range(s)]:
        rows.extend(mat_sub(exterior_square_action(model.actions[v]), identity(dim)))
    return KModuleInvariants.from_relations(K, rows, dim)


def e2_comparison(datum: MetabelianDatum, R="Z", K=2, depth: int = 4) -> dict:
    """E^2-level checks: H_k(A, M_K) against the stage tower, and wedge coinvariants.

    R is "Z" (I-adic stages) or an integer n (I_n-adic); with K = Z/p and p
    dividing n both give the stages M_K / M_K I^m.
    """
    K = _ring(K)
    if not is_prime(K.modulus):
        raise CapabilityError("e2_comparison works over prime fields")
    if R != "Z" and int(R) % K.modulus:
        raise CapabilityError("K must be a quotient of R")
    MK = datum.M.change_coefficients(K)
    I = augmentation_ideal(MK.algebra)
    idx = stabilization_index(MK, I, bound=max(depth, 4))
    out: dict = {"datum": datum.name, "R": str(R), "K": str(K), "depth": depth}
    if isinstance(idx, Inconclusive):
        out["status"] = "Inconclusive"
        out["reason"] = idx.reason
        return out
    m0 = idx.index
    out["stabilization_index"] = m0
    homol = []
    ok = True
    # a finite-length M_K splits as M_K I^m0 (where I acts invertibly) plus the stage
    finite = not isinstance(MK.finite_model(), Inconclusive)
    for k in range(3):
        direct = homology(MK, k)
        tower = [homology(_stage_dense(MK, m), k) for m in range(m0, m0 + 2)]
        stable = tower[0] == tower[1]
        agree = direct == tower[0]
        homol.append({"k": k, "direct": str(direct), "stage": str(tower[0]), "stable": stable,
                      "agree": agree, "finite_length": finite})
        if finite and not (stable and agree):
            ok = False
    out["homology"] = homol
    # wedge coinvariants of the stage modules
    wedges = []
    for m in range(0, m0 + 2):
        model = _stage_dense(MK, m).finite_model()
        if isinstance(model, Inconclusive):
            out["status"] = "Inconclusive"
            out["reason"] = "stage module has no finite model"
            return out
        wedges.append(_exterior_of_model(model))
    wm = wedge_completion_model(MK)
    out["stage_wedge_coinvariants"] = [str(w) for w in wedges]
    if isinstance(wm, Inconclusive):
        out["status"] = "Inconclusive"
        out["reason"] = wm.reason
        return out
    out["wedge_model"] = {"index": wm.index, "invariants": str(wm.invariants),
                          "uncompleted_exterior_coinvariants": str(wm.exterior_coinvariants)}
    last = _exterior_of_model(_stage_dense(MK, m0 + 1).finite_model())
    wedge_ok = wedges[-1] == wedges[-2] and last == wm.invariants
    out["wedge_agree"] = wedge_ok
    out["status"] = "Pass" if ok and wedge_ok else "Fail"
    return out


def telescope_comparison(datum: MetabelianDatum, n: int) -> dict:
    """H_i(A, M/n) against H_i(A, (M / M I^m)/n) at the stabilization index m, i <= 2."""
    K = CoefficientRing.mod(n)
    MK = datum.M.change_coefficients(K)
    I = augmentation_ideal(MK.algebra)
    idx = stabilization_index(MK, I)
    if isinstance(idx, Inconclusive):
        return {"status": "Inconclusive", "reason": idx.reason}
    m = idx.index
    stage = quotient_by_ideal_power(MK, I, m)
    rows = []
    ok = True
    for i in range(3):
        left = homology(MK, i)
        right = homology(stage, i)
        entry = {"i": i, "localized": str(left), "completed": str(right), "equal": left == right}
        model = stage.finite_model()
        if not isinstance(model, Inconclusive):
            dense = homology_dense(model, i)
            entry["dense_oracle"] = str(dense)
            entry["equal"] = entry["equal"] and dense == right
        ok = ok and entry["equal"]
        rows.append(entry)
    return {"datum": datum.name, "n": n, "stabilization_index": m, "rows": rows,
            "certificate": idx.certificate, "status": "Pass" if ok else "Fail"}


def pq_check(datum: MetabelianDatum, p: int, q: int, depth: int = 3, cap: int = DEFAULT_H2_CAP,
             stage_cap: int = DEFAULT_STAGE_CAP) -> dict:
    """H_2(G / gamma^[p]_m, Z/q) for m = 2..depth; all zero when p and q are coprime."""
    W = FiniteStageGroup(datum, p, max(depth - 1, 0), "tight", stage_cap)
    series = n_lower_central_series(W, p, depth)
    table = []
    for m in range(2, depth + 1):
        tab, _ = quotient_table(W, series.terms[m - 1])
        h2 = h2_finite(tab, q, cap, cross_check=(m == 2))
        table.append({"m": m, "order": tab.order, "h2": str(h2), "zero": h2.is_zero})
    expected_zero = gcd(p, q) == 1
    ok = all(r["zero"] for r in table) if expected_zero else True
    return {"datum": datum.name, "p": p, "q": q, "table": table, "expected_zero": expected_zero,
            "status": "Pass" if ok else "Fail"}
