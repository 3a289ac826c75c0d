"""Exact linear algebra over a table field.

Matrices are numpy arrays of element codes. Subspaces are kept in reduced
row-echelon form (pivots 1, zeros above and below), which makes equality a
byte comparison and gives every subspace a stable integer key.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb

import numpy as np

from .gf import Field

__all__ = [
    "Subspace",
    "canonicalize",
    "rref",
    "rref_batch",
    "span_sum",
    "intersect",
    "matrix_rank",
    "null_space",
    "is_rational",
    "plucker_coords",
    "plucker_batch",
    "mat_mul",
    "subspace_keys",
    "rref_matrices",
    "pivots_of",
]


def _as_codes(field: Field, rows, N=None) -> np.ndarray:
    a = np.asarray(rows, dtype=np.int64)
    if a.ndim == 1:
        a = a.reshape(1, -1) if a.size else a.reshape(0, N or 0)
    if a.size and (a.min() < 0 or a.max() >= field.q):
        raise ValueError("entries are not element codes")
    return a.astype(field.dtype)


def rref(field: Field, rows, N=None):
    """Row-reduce a single matrix. Returns (R, pivots) with zero rows dropped."""
    M = _as_codes(field, rows, N).copy()
    nrows, ncols = M.shape
    pivots = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.nonzero(M[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + nz[0]
        if i != r:
            M[[r, i]] = M[[i, r]]
        M[r] = field.mul[field.inv_table[M[r, c]], M[r]]
        factors = M[:, c].copy()
        factors[r] = 0
        hit = np.nonzero(factors)[0]
        if hit.size:
            M[hit] = field.sub[M[hit], field.mul[factors[hit, None], M[r][None, :]]]
        pivots.append(c)
        r += 1
    return M[:r], tuple(pivots)


def rref_batch(field: Field, mats):
    """Row-reduce a stack (B, R, N). Returns (reduced stack, ranks); zero rows at the bottom."""
    M = np.array(mats, dtype=field.dtype, copy=True)
    B, R, N = M.shape
    r = np.zeros(B, dtype=np.int64)
    ar = np.arange(R)
    for c in range(N):
        nz = (M[:, :, c] != 0) & (ar[None, :] >= r[:, None])
        has = nz.any(axis=1)
        if not has.any():
            continue
        b = np.nonzero(has)[0]
        i = nz[b].argmax(axis=1)
        rb = r[b]
        swap = i != rb
        if swap.any():
            bs, is_, rs = b[swap], i[swap], rb[swap]
            tmp = M[bs, is_].copy()
            M[bs, is_] = M[bs, rs]
            M[bs, rs] = tmp
        prow = field.mul[field.inv_table[M[b, rb, c]][:, None], M[b, rb]]
        M[b, rb] = prow
        factors = M[b, :, c].copy()
        factors[np.arange(b.size), rb] = 0
        M[b] = field.sub[M[b], field.mul[factors[:, :, None], prow[:, None, :]]]
        r[b] += 1
    return M, r


def pivots_of(mats: np.ndarray) -> np.ndarray:
    """Pivot column of each row of a stack of full-rank RREF matrices."""
    return (mats != 0).argmax(axis=-1)


class Subspace:
    """Canonical (RREF) subspace of V(N, F). Hashable, compared by value."""

    __slots__ = ("field", "rows", "pivots", "N")

    def __init__(self, field: Field, rows: np.ndarray, pivots, N: int):
        rows = np.ascontiguousarray(rows, dtype=field.dtype).reshape(len(pivots), N)
        rows.setflags(write=False)
        self.field, self.rows, self.pivots, self.N = field, rows, tuple(pivots), N

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def __len__(self):
        return self.rank

    def __eq__(self, other):
        return (isinstance(other, Subspace) and self.N == other.N and self.field == other.field
                and self.rows.shape == other.rows.shape and bool(np.all(self.rows == other.rows)))

    def __hash__(self):
        return hash((self.N, self.rows.shape, self.rows.tobytes()))

    def __repr__(self):
        body = "; ".join(" ".join(self.field.element_str(x) for x in r) for r in self.rows)
        return f"<{body}>" if self.rank else "<0>"

    def to_json(self):
        return [[int(x) for x in r] for r in self.rows]

    def contains_vector(self, v) -> bool:
        v = np.asarray(v, dtype=self.field.dtype)
        if self.rank == 0:
            return not v.any()
        comb_ = _combine(self.field, v[list(self.pivots)], self.rows)
        return bool(np.all(comb_ == v))

    def contains(self, other: "Subspace") -> bool:
        return all(self.contains_vector(r) for r in other.rows)

    def vectors(self) -> np.ndarray:
        """All q^k vectors of the subspace (small k only)."""
        F = self.field
        if self.rank == 0:
            return np.zeros((1, self.N), dtype=F.dtype)
        coeffs = np.array(list(itertools.product(range(F.q), repeat=self.rank)), dtype=F.dtype)
        return mat_mul(F, coeffs, self.rows)

    def points(self) -> np.ndarray:
        """Normalized representatives of the projective points, leading entry 1."""
        v = self.vectors()
        v = v[v.any(axis=1)]
        lead = v[np.arange(len(v)), (v != 0).argmax(axis=1)]
        return v[lead == 1]


def _combine(field: Field, coeffs, rows) -> np.ndarray:
    out = np.zeros(rows.shape[1], dtype=field.dtype)
    for c, r in zip(coeffs, rows):
        if c:
            out = field.add[out, field.mul[c, r]]
    return out


def canonicalize(field: Field, rows, N: int | None = None) -> Subspace:
    a = _as_codes(field, rows, N)
    if N is None:
        N = a.shape[1]
    if a.shape[1] != N:
        raise ValueError("ambient dimension mismatch")
    R, piv = rref(field, a, N)
    return Subspace(field, R, piv, N)


def _check_pair(A: Subspace, B: Subspace):
    if A.N != B.N or A.field != B.field:
        raise ValueError("subspaces live in different ambient spaces")


def span_sum(A: Subspace, B: Subspace) -> Subspace:
    _check_pair(A, B)
    return canonicalize(A.field, np.vstack([A.rows, B.rows]), A.N)


def intersect(A: Subspace, B: Subspace) -> Subspace:
    """Zassenhaus: reduce [[A, A], [B, 0]]; rows with zero left half span A ∩ B."""
    _check_pair(A, B)
    F, N = A.field, A.N
    top = np.hstack([A.rows, A.rows])
    bot = np.hstack([B.rows, np.zeros_like(B.rows)])
    R, piv = rref(F, np.vstack([top, bot]), 2 * N)
    rows = [R[i, N:] for i, p in enumerate(piv) if p >= N]
    if not rows:
        return Subspace(F, np.zeros((0, N)), (), N)
    return canonicalize(F, np.array(rows), N)


def matrix_rank(field: Field, rows) -> int:
    a = _as_codes(field, rows)
    if a.size == 0:
        return 0
    return len(rref(field, a)[1])


def null_space(field: Field, M, N: int | None = None) -> np.ndarray:
    """Basis (rows) of {x : M x = 0}, in RREF."""
    a = _as_codes(field, M, N)
    N = a.shape[1] if N is None else N
    R, piv = rref(field, a, N)
    free = [c for c in range(N) if c not in piv]
    basis = np.zeros((len(free), N), dtype=field.dtype)
    for t, c in enumerate(free):
        basis[t, c] = 1
        for i, pc in enumerate(piv):
            basis[t, pc] = field.neg[R[i, c]]
    if len(basis):
        basis, _ = rref(field, basis, N)
    return basis


def is_rational(S: Subspace, subfield_mask: np.ndarray) -> bool:
    return bool(np.all(subfield_mask[S.rows]))


def mat_mul(field: Field, A, B) -> np.ndarray:
    """Matrix product over the field; leading axes broadcast."""
    A = np.asarray(A)
    B = np.asarray(B)
    shape = np.broadcast_shapes(A.shape[:-2], B.shape[:-2]) + (A.shape[-2], B.shape[-1])
    out = np.zeros(shape, dtype=field.dtype)
    for l in range(A.shape[-1]):
        out = field.add[out, field.mul[A[..., :, l, None], B[..., l, None, :]]]
    return out


# -- Plücker coordinates -------------------------------------------------

@lru_cache(maxsize=None)
def _perm_signs(k: int):
    perms = list(itertools.permutations(range(k)))
    signs = []
    for p in perms:
        inv = sum(1 for i in range(k) for j in range(i + 1, k) if p[i] > p[j])
        signs.append(inv % 2)
    return np.array(perms, dtype=np.int64), np.array(signs, dtype=bool)


def _det_batch(field: Field, M: np.ndarray) -> np.ndarray:
    """Leibniz determinant of a stack (..., k, k)."""
    k = M.shape[-1]
    perms, odd = _perm_signs(k)
    out = np.zeros(M.shape[:-2], dtype=field.dtype)
    for p, s in zip(perms, odd):
        term = np.ones(M.shape[:-2], dtype=field.dtype)
        for i in range(k):
            term = field.mul[term, M[..., i, p[i]]]
        out = field.sub[out, term] if s else field.add[out, term]
    return out


def plucker_batch(field: Field, mats: np.ndarray) -> np.ndarray:
    """k x k minors in lexicographic column order for a stack (B, k, N)."""
    mats = np.asarray(mats, dtype=field.dtype)
    B, k, N = mats.shape
    if k == 0:
        raise ValueError("Plücker coordinates of the zero subspace are undefined")
    cols = np.array(list(itertools.combinations(range(N), k)), dtype=np.int64)
    sub = mats[:, :, cols]                 # (B, k, C, k)
    sub = np.moveaxis(sub, 2, 1)           # (B, C, k, k)
    if k <= 5:
        return _det_batch(field, sub)
    out = np.zeros((B, len(cols)), dtype=field.dtype)
    for b in range(B):
        for c in range(len(cols)):
            out[b, c] = _det_single(field, sub[b, c])
    return out


def _det_single(field: Field, M) -> int:
    M = np.array(M, dtype=field.dtype)
    k = M.shape[0]
    det = 1
    for c in range(k):
        nz = np.nonzero(M[c:, c])[0]
        if nz.size == 0:
            return 0
        i = c + nz[0]
        if i != c:
            M[[c, i]] = M[[i, c]]
            det = int(field.neg[det])
        det = int(field.mul[det, M[c, c]])
        inv = field.inv_table[M[c, c]]
        for j in range(c + 1, k):
            f = field.mul[M[j, c], inv]
            if f:
                M[j] = field.sub[M[j], field.mul[f, M[c]]]
    return det


def plucker_coords(S: Subspace) -> np.ndarray:
    if S.rank == 0:
        raise ValueError("Plücker coordinates of the zero subspace are undefined")
    return plucker_batch(S.field, S.rows[None])[0]


# -- keys and enumeration --------------------------------------------------

@lru_cache(maxsize=None)
def _pattern_table(N: int, k: int):
    """Map pivot bitmask -> lexicographic rank of the pivot k-set."""
    table = np.full(1 << N, -1, dtype=np.int64)
    for idx, c in enumerate(itertools.combinations(range(N), k)):
        table[sum(1 << x for x in c)] = idx
    return table


def key_base(q: int, N: int, k: int) -> int:
    return q ** (k * (N - k))


def subspace_keys(field: Field, mats: np.ndarray, pivots: np.ndarray | None = None) -> np.ndarray:
    """Integer key of each full-rank RREF matrix in a stack (B, k, N).

    key = rank(pivot set) * q^(k(N-k)) + entries at non-pivot columns read
    as a base-q number, first row most significant.
    """
    mats = np.asarray(mats)
    B, k, N = mats.shape
    q = field.q
    if comb(N, k) * key_base(q, N, k) >= 2 ** 63:
        raise OverflowError("subspace keys do not fit in 64 bits for this instance")
    if k == 0:
        return np.zeros(B, dtype=np.int64)
    if pivots is None:
        pivots = pivots_of(mats)
    pivots = np.asarray(pivots, dtype=np.int64)
    mask = np.zeros((B, N), dtype=bool)
    np.put_along_axis(mask, pivots, True, axis=1)
    bits = (mask.astype(np.int64) << np.arange(N, dtype=np.int64)).sum(axis=1)
    pattern = _pattern_table(N, k)[bits]
    if (pattern < 0).any():
        raise ValueError("malformed RREF stack")
    free_cols = np.argsort(mask, axis=1, kind="stable")[:, : N - k]   # (B, N-k)
    free = np.take_along_axis(mats, free_cols[:, None, :].repeat(k, axis=1), axis=2)
    free = free.reshape(B, k * (N - k)).astype(np.int64)
    key = np.zeros(B, dtype=np.int64)
    for j in range(k * (N - k)):
        key = key * q + free[:, j]
    return pattern * key_base(q, N, k) + key


def rref_matrices(field: Field, k: int, N: int) -> np.ndarray:
    """All full-rank k x N RREF matrices, sorted by key."""
    q = field.q
    if k == 0:
        return np.zeros((1, 0, N), dtype=field.dtype)
    out = []
    for piv in itertools.combinations(range(N), k):
        free = [(i, c) for i in range(k) for c in range(piv[i] + 1, N) if c not in piv]
        n = q ** len(free)
        block = np.zeros((n, k, N), dtype=field.dtype)
        for i, c in enumerate(piv):
            block[:, i, c] = 1
        vals = np.arange(n, dtype=np.int64)
        for j, (i, c) in enumerate(reversed(free)):
            block[:, i, c] = (vals // q ** j) % q
        out.append(block)
    mats = np.concatenate(out)
    keys = subspace_keys(field, mats)
    return mats[np.argsort(keys, kind="stable")]
