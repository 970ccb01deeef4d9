"""Exact linear algebra over Z and over prime fields.

Integer routines are pure Python (arbitrary precision). Prime-field
routines use numpy int64 arrays, so the modulus must stay below 2**31.
"""

from __future__ import annotations

import heapq

from math import gcd

import numpy as np


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, u, v) with g = u*a + v*b and g >= 0."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a - (a // b) * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def factorize(n: int) -> dict[int, int]:
    """Trial-division factorization; inputs here are small."""
    n = abs(n)
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_prime(n: int) -> bool:
    return n >= 2 and factorize(n) == {n: 1}


def _divisor_chain(diag: list[int]) -> list[int]:
    # gcd/lcm sweeps turn any diagonal into a divisor chain
    d = [abs(x) for x in diag]
    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            a, b = d[i], d[j]
            if a == 0 and b == 0:
                continue
            g = gcd(a, b)
            if g == 0:
                continue
            d[i], d[j] = g, a * b // g
    # zeros (free summands) go to the end
    nonzero = sorted(x for x in d if x != 0)
    return nonzero + [0] * (len(d) - len(nonzero))


def smith_diagonal(rows: list[list[int]], ncols: int) -> list[int]:
    """Diagonal of the Smith normal form of an integer matrix.

    Returns the nonzero invariant factors in divisor-chain order; the rank
    is the length of the result.
    """
    a = [list(map(int, r)) for r in rows if any(r)]
    diag: list[int] = []
    while a:
        # pick the entry of least absolute value as pivot
        best = None
        for i, r in enumerate(a):
            for j, v in enumerate(r):
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, pi, pj = best
        a[0], a[pi] = a[pi], a[0]
        for r in a:
            r[0], r[pj] = r[pj], r[0]
        while True:
            p = a[0][0]
            done = True
            # clear first column
            for i in range(1, len(a)):
                v = a[i][0]
                if v:
                    q = v // p
                    ri, r0 = a[i], a[0]
                    for j in range(len(r0)):
                        if r0[j]:
                            ri[j] -= q * r0[j]
                    if ri[0]:
                        done = False
            # clear first row
            r0 = a[0]
            for j in range(1, len(r0)):
                v = r0[j]
                if v:
                    q = v // p
                    for r in a:
                        if r[0]:
                            r[j] -= q * r[0]
                    if r0[j]:
                        done = False
            if done:
                break
            # move the smallest nonzero entry of the first row/column to the corner
            cands = [(abs(a[i][0]), i, 0) for i in range(len(a)) if a[i][0]]
            cands += [(abs(a[0][j]), 0, j) for j in range(len(a[0])) if a[0][j]]
            _, i, j = min(cands)
            a[0], a[i] = a[i], a[0]
            for r in a:
                r[0], r[j] = r[j], r[0]
        diag.append(a[0][0])
        a = [r[1:] for r in a[1:]]
        a = [r for r in a if any(r)]
    return [x for x in _divisor_chain(diag) if x != 0]


def abelian_invariants(rows: list[list[int]], ngens: int) -> tuple[int, list[int]]:
    """Structure of Z^ngens / rowspan(rows) as (free_rank, invariant factors > 1)."""
    diag = smith_diagonal(rows, ngens)
    free = ngens - len(diag)
    return free, [d for d in diag if d != 1]


def integer_rank(rows: list[list[int]], ncols: int) -> int:
    return len(smith_diagonal(rows, ncols))


# ---------------------------------------------------------------------------
# prime fields


def rref_mod_p(mat, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over F_p; returns (nonzero rows, pivot columns)."""
    a = np.array(mat, dtype=np.int64) % p
    if a.ndim != 2 or a.size == 0:
        return a.reshape(0, a.shape[1] if a.ndim == 2 else 0), []
    nrows, ncols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        inv = pow(int(a[r, c]), -1, p)
        if inv != 1:
            a[r, c:] = (a[r, c:] * inv) % p
        col = a[:, c].copy()
        col[r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            a[hit, c:] = (a[hit, c:] - np.outer(col[hit], a[r, c:])) % p
        pivots.append(c)
        r += 1
    return a[:r], pivots


def rank_mod_p(mat, p: int) -> int:
    return len(rref_mod_p(mat, p)[1])


def nullspace_mod_p(mat, p: int) -> np.ndarray:
    """Basis (as rows) of {x : mat @ x = 0} over F_p."""
    a = np.array(mat, dtype=np.int64) % p
    ncols = a.shape[1]
    r, pivots = rref_mod_p(a, p)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = np.zeros((len(free), ncols), dtype=np.int64)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = (-r[i, f]) % p
    return basis


class EchelonSpace:
    """A subspace of F_p^n kept in reduced echelon form.

    Supports reduction of vectors modulo the subspace, which is how
    quotient classes are compared.
    """

    def __init__(self, p: int, n: int, rows=None):
        self.p = p
        self.n = n
        self.rows = np.zeros((0, n), dtype=np.int64)
        self.pivots: list[int] = []
        if rows is not None and len(rows):
            self.extend(rows)

    @property
    def dim(self) -> int:
        return len(self.pivots)

    def extend(self, rows) -> None:
        stacked = np.vstack([self.rows, np.array(rows, dtype=np.int64).reshape(-1, self.n)])
        self.rows, self.pivots = rref_mod_p(stacked, self.p)

    def reduce(self, vecs) -> np.ndarray:
        """Canonical representatives of vecs modulo the subspace."""
        v = np.array(vecs, dtype=np.int64).reshape(-1, self.n) % self.p
        for i, c in enumerate(self.pivots):
            coef = v[:, c].copy()
            hit = np.flatnonzero(coef)
            if hit.size:
                v[hit] = (v[hit] - np.outer(coef[hit], self.rows[i])) % self.p
        return v

    def contains(self, vec) -> bool:
        return not self.reduce(vec).any()


# ---------------------------------------------------------------------------
# integer lattices


def hnf_with_transform(rows: list[list[int]], ncols: int):
    """Row echelon form over Z with the unimodular transform.

    Returns (echelon rows, transform rows) with transform @ rows = echelon,
    where the echelon list includes the zero rows at the end.
    """
    a = [list(map(int, r)) for r in rows]
    m = len(a)
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    r = 0
    for c in range(ncols):
        if r == m:
            break
        while True:
            nz = [i for i in range(r, m) if a[i][c]]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(a[i][c]))
            a[r], a[piv] = a[piv], a[r]
            u[r], u[piv] = u[piv], u[r]
            done = True
            for i in range(r + 1, m):
                if a[i][c]:
                    q = a[i][c] // a[r][c]
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                    u[i] = [x - q * y for x, y in zip(u[i], u[r])]
                    if a[i][c]:
                        done = False
            if done:
                break
        if any(a[i][c] for i in range(r, m)):
            if a[r][c] < 0:
                a[r] = [-x for x in a[r]]
                u[r] = [-x for x in u[r]]
            # reduce entries above the pivot
            for i in range(r):
                q = a[i][c] // a[r][c]
                if q:
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                    u[i] = [x - q * y for x, y in zip(u[i], u[r])]
            r += 1
    return a, u, r


def lattice_basis(rows: list[list[int]], ncols: int) -> list[list[int]]:
    """Echelon basis of the Z-span of rows."""
    if not rows:
        return []
    a, _, r = hnf_with_transform(rows, ncols)
    return a[:r]


def left_kernel(rows: list[list[int]], ncols: int) -> list[list[int]]:
    """Basis of {x in Z^len(rows) : x @ rows = 0}."""
    if not rows:
        return []
    a, u, r = hnf_with_transform(rows, ncols)
    return lattice_basis(u[r:], len(rows)) if r < len(rows) else []


def coordinates(basis: list[list[int]], vec: list[int]) -> list[int]:
    """Integer coordinates of vec in an echelon lattice basis (must exist)."""
    from fractions import Fraction

    coords = []
    v = [Fraction(x) for x in vec]
    for b in basis:
        c = next(j for j, x in enumerate(b) if x)
        q = v[c] / b[c]
        if q.denominator != 1:
            raise ValueError("vector is not in the lattice")
        coords.append(int(q))
        if q:
            v = [x - q * y for x, y in zip(v, b)]
    if any(v):
        raise ValueError("vector is not in the lattice")
    return coords


# ---------------------------------------------------------------------------
# sparse elimination


def sparse_reduce(rows, modulus: int | None = None):
    """Eliminate unit pivots from a sparse matrix.

    rows: iterable of {column: value}. Over F_p (modulus prime) every
    nonzero entry is a unit. Returns (number of unit pivots, remaining rows
    as dicts) where the remaining rows have no unit entries left.
    """
    def norm(v):
        return v % modulus if modulus else v

    def is_unit(v):
        return v != 0 if modulus else v in (1, -1)

    live: dict[int, dict] = {}
    cols: dict[int, set] = {}
    for i, r in enumerate(rows):
        d = {c: norm(v) for c, v in r.items() if norm(v)}
        if d:
            live[i] = d
            for c in d:
                cols.setdefault(c, set()).add(i)
    # rows ordered by length (Markowitz-style); stale heap entries are skipped
    heap = [(len(r), i) for i, r in live.items()]
    heapq.heapify(heap)
    pivots = 0
    while heap:
        size, i = heapq.heappop(heap)
        r = live.get(i)
        if r is None or len(r) != size:
            continue
        units = [c for c, v in r.items() if is_unit(v)]
        if not units:
            continue
        c = min(units, key=lambda c: (len(cols[c]), c))
        prow = live.pop(i)
        for cc in prow:
            cols[cc].discard(i)
        pv = prow[c]
        inv = pow(pv, -1, modulus) if modulus else pv
        for j in sorted(cols[c]):
            r = live[j]
            f = norm(r[c] * inv)
            for cc, v in prow.items():
                nv = norm(r.get(cc, 0) - f * v)
                if nv:
                    if cc not in r:
                        cols.setdefault(cc, set()).add(j)
                    r[cc] = nv
                elif cc in r:
                    del r[cc]
                    cols[cc].discard(j)
            if r:
                heapq.heappush(heap, (len(r), j))
            else:
                del live[j]
        del cols[c]
        pivots += 1
    return pivots, list(live.values())


def sparse_rank_mod_p(rows, p: int) -> int:
    pivots, rest = sparse_reduce(rows, p)
    assert not rest
    return pivots


def sparse_abelian_invariants(rows, ncols: int) -> tuple[int, list[int]]:
    """(free rank, invariant factors > 1) of Z^ncols / rowspan(rows)."""
    pivots, rest = sparse_reduce(rows)
    used = sorted({c for r in rest for c in r})
    index = {c: k for k, c in enumerate(used)}
    dense = [[0] * len(used) for _ in rest]
    for k, r in enumerate(rest):
        for c, v in r.items():
            dense[k][index[c]] = v
    diag = smith_diagonal(dense, len(used)) if used else []
    free = ncols - pivots - len(diag)
    return free, [d for d in diag if d != 1]
