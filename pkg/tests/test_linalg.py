import numpy as np

from metabench.linalg import (
    abelian_invariants,
    factorize,
    hnf_with_transform,
    integer_rank,
    is_prime,
    left_kernel,
    nullspace_mod_p,
    rank_mod_p,
    smith_diagonal,
    sparse_abelian_invariants,
    sparse_rank_mod_p,
    xgcd,
)


def test_xgcd_and_factorize():
    g, s, t = xgcd(84, 30)
    assert g == 6 and 84 * s + 30 * t == 6
    assert factorize(360) == {2: 3, 3: 2, 5: 1}
    assert is_prime(97) and not is_prime(91)


def test_smith_diagonal_divisor_chain():
    assert smith_diagonal([[2, 0], [0, 3]], 2) == [1, 6]
    assert abelian_invariants([[2, 4], [6, 8]], 2) == (0, [2, 4])
    assert abelian_invariants([[2, 0]], 2) == (1, [2])


def test_rank_routes_agree():
    rows = [[1, 2, 3], [2, 4, 6], [0, 1, 1]]
    assert integer_rank(rows, 3) == 2
    assert rank_mod_p(np.array(rows), 5) == 2
    sparse = [{c: v for c, v in enumerate(r) if v} for r in rows]
    assert sparse_rank_mod_p(sparse, 5) == 2


def test_sparse_and_dense_invariants_agree():
    rows = [[4, 6, 0], [0, 2, 2], [2, 0, 8]]
    sparse = [{c: v for c, v in enumerate(r) if v} for r in rows]
    assert sparse_abelian_invariants(sparse, 3) == abelian_invariants(rows, 3)


def test_nullspace_mod_p():
    mat = np.array([[1, 1, 0], [0, 1, 1]])
    ns = nullspace_mod_p(mat, 2)
    assert ns.shape[0] == 1
    assert not ((mat @ ns.T) % 2).any()


def test_hnf_transform_and_kernel():
    rows = [[2, 4], [3, 6], [1, 1]]
    h, u, r = hnf_with_transform(rows, 2)
    assert (np.array(u, dtype=object) @ np.array(rows, dtype=object)).tolist() == h
    for k in left_kernel(rows, 2):
        assert all(sum(k[i] * rows[i][j] for i in range(3)) == 0 for j in range(2))
