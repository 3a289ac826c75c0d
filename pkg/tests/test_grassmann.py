import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polargrass import kernels
from polargrass.gf import get_field
from polargrass.grassmann import (
    ClosureState,
    Geometry,
    IncrementalRank,
    _reverse_index,
    build_grassmannian,
    generating_subsets,
    generating_triples,
    greedy_minimize,
    is_generating,
    naive_closure,
    plucker_rank,
    span_closure,
)
from polargrass.linalg import canonicalize, intersect, matrix_rank, span_sum
from polargrass.polar import build_model

_GEOMS = {}


def geometry(desc, k):
    if (desc, k) not in _GEOMS:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _GEOMS[desc, k] = build_grassmannian(build_model(desc), k)
    return _GEOMS[desc, k]


def incidence_geometry(lines):
    """A Geometry built straight from a list of equal-size lines (no polar model)."""
    blocks = np.array(lines, dtype=np.int32)
    t = blocks.shape[1]
    npts = int(blocks.max()) + 1
    indptr, inc = _reverse_index(blocks, npts)
    return Geometry(None, 0, blocks, np.arange(t, dtype=np.int32)[None, :],
                    np.zeros((t, 1), dtype=np.int32), indptr, inc)


FANO = [(0, 1, 3), (1, 2, 4), (2, 3, 5), (3, 4, 6), (0, 4, 5), (1, 5, 6), (0, 2, 6)]
AG23 = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8),
        (0, 4, 8), (1, 5, 6), (2, 3, 7), (0, 5, 7), (1, 3, 8), (2, 4, 6)]


def brute_triples(geom):
    return [t for t in itertools.combinations(range(geom.npoints), 3)
            if naive_closure(geom, list(t)).all()]


# -- structure ------------------------------------------------------------------------

@pytest.mark.parametrize("desc,k,points,lines,size", [
    ("Qparab(3,2)", 2, 315, 945, 3),
    ("Qparab(3,2)", 1, 63, 315, 3),
    ("Qplus(3,3)", 2, 520, 80 * 13, 4),
    ("H(2,1,2)", 2, 297, 165, 9),
    ("Qparab(2,2)", 2, 15, 15, 3),
])
def test_counts(desc, k, points, lines, size):
    g = geometry(desc, k)
    assert (g.npoints, g.line_size) == (points, size)
    assert g.nlines == lines


def test_pencil_lines_are_complete_pencils():
    g = geometry("Qparab(3,3)", 2)
    F, N = g.model.field, g.model.N
    rows = g.point_rows
    for pts in g.line_points(np.arange(0, g.nlines, 211)):
        S = [canonicalize(F, rows[i], N) for i in pts]
        X = intersect(S[0], S[1])
        Z = span_sum(S[0], S[1])
        assert X.rank == 1 and Z.rank == 3
        assert g.model.is_totally_singular(Z.rows)
        assert all(Z.contains(T) and T.contains(X) for T in S)
        assert len(set(S)) == F.q + 1


def test_star_lines_of_a_dual_polar_space():
    g = geometry("H(2,1,2)", 2)
    F, N = g.model.field, g.model.N
    rows = g.point_rows
    for pts in g.line_points(np.arange(g.nlines)[::17]):
        S = [canonicalize(F, rows[i], N) for i in pts]
        X = S[0]
        for T in S[1:]:
            X = intersect(X, T)
        assert X.rank == 1
    assert g.is_dual


def test_thin_dual_warns():
    with pytest.warns(UserWarning, match="thin"):
        build_grassmannian(build_model("Qplus(2,3)"), 2)


def test_incidence_index_round_trip():
    g = geometry("Qparab(3,2)", 2)
    for pid in (0, 17, 200, 314):
        lines = g.lines_through(pid)
        assert len(lines) == len(set(lines.tolist()))
        assert np.all(np.any(g.line_points(lines) == pid, axis=1))
    total = sum(len(g.lines_through(p)) for p in range(g.npoints))
    assert total == g.nlines * g.line_size


def test_k_range():
    model = build_model("Qparab(2,3)")
    with pytest.raises(ValueError):
        build_grassmannian(model, 3)
    with pytest.raises(ValueError):
        build_grassmannian(model, 0)


# -- closure ----------------------------------------------------------------------------

def test_closure_examples():
    g = geometry("Qparab(3,2)", 2)
    r = span_closure(g, np.arange(g.npoints))
    assert r.generated_all and r.new_count == 0
    assert span_closure(g, []).size == 0
    line = g.line_points(5)[0]
    assert span_closure(g, line[:2]).closed[line].all()


@settings(max_examples=40, deadline=None)
@given(st.sets(st.integers(0, 314), min_size=1, max_size=6),
       st.sets(st.integers(0, 314), max_size=3))
def test_closure_operator_laws(a, extra):
    g = geometry("Qparab(3,2)", 2)
    a = sorted(a)
    b = sorted(set(a) | extra)
    ca, cb = span_closure(g, a).closed, span_closure(g, b).closed
    assert ca[a].all()
    assert np.all(cb[ca])
    assert np.array_equal(span_closure(g, np.nonzero(ca)[0]).closed, ca)
    assert np.array_equal(ca, naive_closure(g, a))


@settings(max_examples=25, deadline=None)
@given(st.sets(st.integers(0, 164), min_size=1, max_size=5))
def test_naive_oracle_on_points_of_h44(seed):
    g = geometry("H(2,1,2)", 1)
    assert np.array_equal(span_closure(g, sorted(seed)).closed, naive_closure(g, sorted(seed)))


@pytest.mark.parametrize("workers", [2, 4])
def test_parallel_matches_sequential(workers):
    g = geometry("Qparab(3,3)", 2)
    rng = np.random.default_rng(workers)
    for _ in range(5):
        seed = rng.choice(g.npoints, size=int(rng.integers(2, 12)), replace=False)
        assert np.array_equal(span_closure(g, seed, workers=workers).closed,
                              span_closure(g, seed).closed)


@pytest.mark.skipif(kernels.compiled is None, reason="compiled kernels not built")
def test_backends_agree():
    g = geometry("Qparab(3,3)", 2)
    rng = np.random.default_rng(3)
    for _ in range(8):
        seed = rng.choice(g.npoints, size=int(rng.integers(2, 25)), replace=False)
        a = span_closure(g, seed, backend="compiled")
        b = span_closure(g, seed, backend="python")
        assert np.array_equal(a.closed, b.closed)
    model = build_model("Qparab(3,3)", backend="python")
    assert np.array_equal(model.level(2).rows, g.point_rows)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get("fortran")


def test_restricted_closure_matches_masked_oracle():
    g = geometry("Qparab(3,3)", 2)
    rng = np.random.default_rng(11)
    allowed = rng.random(g.npoints) < 0.6
    lines = g.line_points(np.arange(g.nlines))
    ids = np.nonzero(allowed)[0]
    for _ in range(5):
        seed = rng.choice(ids, size=6, replace=False)
        want = np.zeros(g.npoints, dtype=bool)
        want[seed] = True
        while True:
            grow = lines[want[lines].sum(axis=1) >= 2].ravel()
            grow = grow[allowed[grow]]
            if want[grow].all():
                break
            want[grow] = True
        got = span_closure(g, seed, allowed=allowed).closed
        assert np.array_equal(got, want)
        assert not got[~allowed].any()
    with pytest.raises(ValueError):
        span_closure(g, np.nonzero(~allowed)[0][:1], allowed=allowed)


def test_incremental_state():
    g = geometry("Qparab(3,2)", 2)
    st_ = ClosureState(g)
    st_.add([0, 1])
    snap = st_.copy()
    st_.add([100, 200, 300])
    assert st_.size >= snap.size
    assert np.array_equal(st_.closed.astype(bool), span_closure(g, [0, 1, 100, 200, 300]).closed)
    r = span_closure(g, [0, 1], trace=True)
    assert r.trace is not None


# -- generating sets --------------------------------------------------------------------

@pytest.mark.parametrize("desc,k", [("Qplus(2,2)", 1), ("Qparab(2,2)", 1), ("Qparab(2,2)", 2),
                                    ("Qminus(2,2)", 1), ("H(2,0,2)", 1)])
def test_triples_against_brute_force_polar(desc, k):
    g = geometry(desc, k)
    got = generating_triples(g)
    assert bool(got["generating"]) == bool(brute_triples(g))


@pytest.mark.parametrize("lines", [FANO, AG23])
def test_triples_against_brute_force_planes(lines):
    g = incidence_geometry(lines)
    brute = brute_triples(g)
    got = generating_triples(g)
    assert brute and got["generating"]
    for t in got["generating"]:
        assert tuple(sorted(t)) in brute


def test_no_generating_triple_in_the_dual_of_h44():
    res = generating_triples(geometry("H(2,1,2)", 2), limit=1)
    assert res["generating"] == [] and res["pairs_tried"] > 0


def test_greedy_minimize():
    g = geometry("Qparab(3,2)", 1)
    gen = np.arange(0, g.npoints, 2)
    mini = greedy_minimize(g, gen)
    assert is_generating(g, mini)
    for x in mini:
        assert not is_generating(g, mini[mini != x])
    with pytest.raises(ValueError):
        greedy_minimize(g, [0, 1])
    assert generating_subsets(g, mini, len(mini)) == [tuple(mini.tolist())]
    with pytest.raises(ValueError):
        generating_subsets(g, np.arange(30), 3)


# -- rank certificates ------------------------------------------------------------------

def test_plucker_rank_pins_q63():
    pr = plucker_rank(geometry("Qparab(3,3)", 2))
    assert pr["rank"] == 21 and pr["width"] == 21 and pr["lines_embed"]


def test_plucker_rank_falls_short_in_characteristic_2():
    pr = plucker_rank(geometry("Qparab(3,2)", 2))
    assert pr["rank"] == 20 and pr["width"] == 21


def test_plucker_undefined_on_duals():
    with pytest.raises(ValueError):
        plucker_rank(geometry("H(2,1,2)", 2))


def test_incremental_rank_matches_rref():
    F = get_field(9)
    rng = np.random.default_rng(5)
    A = rng.integers(0, 9, size=(12, 8)).astype(F.dtype)
    A[6:] = A[:6]  # duplicates
    r = IncrementalRank(F, 8)
    for i in range(0, 12, 3):
        r.add(A[i:i + 3])
    assert r.rank == matrix_rank(F, A)
    assert not r.independent(A[0])
