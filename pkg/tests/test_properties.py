from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from metabench.cli import parse_polynomial
from metabench.completion_lab import TruncatedRing, identity_suite, verify_power_congruence
from metabench.linalg import abelian_invariants, integer_rank, rank_mod_p, smith_diagonal, sparse_abelian_invariants, sparse_rank_mod_p
from metabench.metabelian_lab import FiniteGroupTable, h2_bar, h2_finite
from metabench.ring_kernel import AbelianStructure, CoefficientRing, IdealHandle, make_group_algebra

Z = CoefficientRing.integers()
small = st.integers(-6, 6)
matrices = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(small, min_size=n, max_size=n), min_size=1, max_size=4)
)


@given(matrices)
def test_smith_diagonal_preserves_determinantal_data(rows):
    n = len(rows[0])
    diag = smith_diagonal(rows, n)
    nz = [d for d in diag if d]
    assert all(nz[k + 1] % nz[k] == 0 for k in range(len(nz) - 1))
    assert len(nz) == integer_rank(rows, n)


@given(matrices)
def test_sparse_and_dense_routes_agree(rows):
    n = len(rows[0])
    sparse = [{c: v for c, v in enumerate(r) if v} for r in rows]
    assert sparse_abelian_invariants(sparse, n) == abelian_invariants(rows, n)
    for p in (2, 3, 5):
        assert sparse_rank_mod_p(sparse, p) == rank_mod_p(np.array(rows) % p, p)


laurent = st.dictionaries(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), st.integers(-5, 5), max_size=5)


@given(laurent)
def test_serialization_round_trip(terms):
    alg = make_group_algebra(Z, AbelianStructure(1, [4]))
    f = alg.from_laurent(terms)
    assert alg.deserialize(alg.serialize(f)) == f


@given(laurent)
def test_format_and_parse_round_trip(terms):
    alg = make_group_algebra(Z, AbelianStructure(2))
    f = alg.from_laurent(terms)
    if f:
        assert parse_polynomial(alg.format(f), alg) == f


@given(laurent, laurent)
@settings(max_examples=30, deadline=None)
def test_ideal_contains_its_multiples(a, b):
    alg = make_group_algebra(Z, AbelianStructure(2))
    gens = [alg.from_laurent({(1, 0): 1, (0, 0): -2}), alg.from_laurent({(0, 1): 1, (1, 0): -1})]
    ideal = IdealHandle(alg, gens)
    f = alg.add(alg.mul(alg.from_laurent(a), gens[0]), alg.mul(alg.from_laurent(b), gens[1]))
    assert ideal.contains(f)


fractions = st.builds(lambda n, k: Fraction(n, 2**k), st.integers(-8, 8), st.integers(0, 3))


@given(st.randoms(use_true_random=False), fractions, fractions, st.integers(1, 5))
@settings(max_examples=40, deadline=None)
def test_binomial_power_identities(rng, alpha, beta, level):
    R = TruncatedRing(1, level, (2,))
    x = R.random_unipotent(rng)
    assert all(identity_suite(R, x, alpha, beta).values())


@given(st.integers(2, 9), st.integers(1, 6))
def test_power_congruence_everywhere(n, i):
    assert verify_power_congruence(n, i).passed


@given(st.lists(st.sampled_from([2, 3, 4, 6]), min_size=1, max_size=2), st.sampled_from([2, 3]))
@settings(max_examples=15, deadline=None)
def test_relation_module_matches_bar_on_abelian_groups(orders, p):
    Q = FiniteGroupTable.abelian(orders)
    if Q.order <= 36:
        assert h2_finite(Q, p, cross_check=False).dimension == h2_bar(Q, p)
