import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polargrass.gf import get_field
from polargrass.linalg import (
    canonicalize,
    intersect,
    is_rational,
    mat_mul,
    matrix_rank,
    null_space,
    plucker_batch,
    plucker_coords,
    rref_matrices,
    span_sum,
    subspace_keys,
)


def gaussian_binomial(N, k, q):
    num = den = 1
    for i in range(k):
        num *= q ** (N - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


def vector_set(S):
    return {tuple(int(x) for x in v) for v in S.vectors()}


def matrices(q, rows, cols):
    return st.lists(st.lists(st.integers(0, q - 1), min_size=cols, max_size=cols),
                    min_size=rows, max_size=rows)


def test_spec_examples():
    F2, F3 = get_field(2), get_field(3)
    S = canonicalize(F2, [[0, 1, 0], [1, 0, 0]])
    assert S.rows.tolist() == [[1, 0, 0], [0, 1, 0]]
    assert canonicalize(F2, [[1, 1], [0, 1]]).rows.tolist() == [[1, 0], [0, 1]]
    T = canonicalize(F3, [[0, 2, 1], [0, 1, 2]])
    assert T.rank == 1 and T.rows.tolist() == [[0, 1, 2]]
    Z = canonicalize(F3, np.zeros((2, 3), dtype=int))
    assert Z.rank == 0


@settings(max_examples=60, deadline=None)
@given(matrices(9, 3, 6), matrices(9, 3, 3))
def test_rref_is_invariant_under_row_operations(A, T):
    F = get_field(9)
    A, T = np.array(A), np.array(T)
    if matrix_rank(F, T) < 3:
        return
    B = mat_mul(F, T.astype(F.dtype), A.astype(F.dtype))
    assert canonicalize(F, A, 6) == canonicalize(F, B, 6)


@settings(max_examples=60, deadline=None)
@given(matrices(3, 2, 4), matrices(3, 2, 4))
def test_sum_and_intersection_against_vector_sets(A, B):
    F = get_field(3)
    SA, SB = canonicalize(F, A, 4), canonicalize(F, B, 4)
    X, Y = intersect(SA, SB), span_sum(SA, SB)
    assert vector_set(X) == vector_set(SA) & vector_set(SB)
    assert vector_set(Y) >= vector_set(SA) | vector_set(SB)
    assert X.rank + Y.rank == SA.rank + SB.rank


def test_two_planes_through_a_line():
    F = get_field(2)
    A = canonicalize(F, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]])
    B = canonicalize(F, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    L = intersect(A, B)
    assert L == canonicalize(F, [[1, 0, 0, 0], [0, 1, 0, 0]])
    assert vector_set(L) == vector_set(A) & vector_set(B)
    e1, e2 = canonicalize(F, [[1, 0, 0, 0]]), canonicalize(F, [[0, 1, 0, 0]])
    assert span_sum(e1, e2) == L
    with pytest.raises(ValueError):
        intersect(A, canonicalize(F, [[1, 0, 0]]))


def test_rationality():
    F = get_field(4)
    sub = F.subfield_mask(1)
    assert not is_rational(canonicalize(F, [[1, F.eps, 0]]), sub)
    assert is_rational(canonicalize(F, [[1, 0, 0], [0, 1, 0]]), sub)
    assert is_rational(canonicalize(F, [[1, 0, 0], [0, 1, 0]]), F.subfield_mask(2))


@pytest.mark.parametrize("q,N,k", [(2, 5, 2), (3, 4, 2), (4, 4, 1), (2, 6, 3)])
def test_enumeration_counts_and_keys(q, N, k):
    F = get_field(q)
    mats = rref_matrices(F, k, N)
    assert len(mats) == gaussian_binomial(N, k, q)
    keys = subspace_keys(F, mats)
    assert np.all(np.diff(keys) > 0)
    for M in mats[:: max(1, len(mats) // 25)]:
        S = canonicalize(F, M, N)
        assert np.array_equal(S.rows, M)


def test_key_overflow_guard():
    F = get_field(9)
    with pytest.raises(OverflowError):
        subspace_keys(F, np.zeros((1, 8, 17), dtype=F.dtype))


def test_null_space():
    F = get_field(9)
    rng = np.random.default_rng(1)
    for _ in range(20):
        M = rng.integers(0, 9, size=(2, 5))
        K = null_space(F, M, 5)
        assert len(K) == 5 - matrix_rank(F, M)
        if len(K):
            assert not mat_mul(F, M.astype(F.dtype), K.T).any()


def test_plucker_examples():
    F = get_field(2)
    assert plucker_coords(canonicalize(F, [[1, 0, 0, 0], [0, 1, 0, 0]])).tolist() == [1, 0, 0, 0, 0, 0]
    assert plucker_coords(canonicalize(F, [[1, 0, 0, 0], [0, 0, 1, 0]])).tolist() == [0, 1, 0, 0, 0, 0]
    with pytest.raises(ValueError):
        plucker_coords(canonicalize(F, np.zeros((1, 4), dtype=int)))


def test_plucker_relation_and_scaling():
    F = get_field(9)
    rng = np.random.default_rng(2)
    for _ in range(30):
        A = rng.integers(0, 9, size=(2, 4)).astype(F.dtype)
        if matrix_rank(F, A) < 2:
            continue
        S = canonicalize(F, A, 4)
        raw = plucker_batch(F, A[None])[0]
        canon = plucker_coords(S)
        # same projective point: raw = c * canon
        j = int(np.nonzero(canon)[0][0])
        c = F.div[raw[j], canon[j]]
        assert np.array_equal(F.mul[c, canon], raw)
        # p12 p34 - p13 p24 + p14 p23 = 0
        p = dict(zip(itertools.combinations(range(4), 2), canon))
        a = F.mul[p[0, 1], p[2, 3]]
        b = F.mul[p[0, 2], p[1, 3]]
        c2 = F.mul[p[0, 3], p[1, 2]]
        assert F.add[F.sub[a, b], c2] == 0
