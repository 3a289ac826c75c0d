import numpy as np
import pytest

from polargrass.grassmann import build_grassmannian, span_closure
from polargrass.linalg import canonicalize
from polargrass.polar import build_model
from polargrass.subfield import (
    SubfieldContext,
    cor54_adjoin,
    gset_predicate,
    omega_obstruction,
    points_on,
    rational_lines,
)


@pytest.fixture(scope="module")
def q64():
    geom = build_grassmannian(build_model("Qparab(3,4)"), 2)
    return SubfieldContext(geom, 1)


@pytest.fixture(scope="module")
def qplus54():
    geom = build_grassmannian(build_model("Qplus(3,4)"), 2)
    return SubfieldContext(geom, 1)


def _e(N, *idx):
    out = np.zeros((len(idx), N), dtype=np.int64)
    for r, i in enumerate(idx):
        out[r, i] = 1
    return out


def test_rational_lines_are_the_lines_over_f2(q64):
    small = build_model("Qparab(3,2)").level(2)
    rat = rational_lines(q64.geom, q64)
    assert len(rat) == len(small) == 315
    big_rows = q64.geom.point_rows[rat]
    assert np.array_equal(big_rows, small.rows)


def test_extension_map_is_injective(q64):
    small = build_model("Qparab(3,2)").level(2)
    ids = [q64.extend(r) for r in small.rows[::7]]
    assert len(set(ids)) == len(ids) and min(ids) >= 0
    with pytest.raises(ValueError):
        q64.extend([[1, 0, 0, 0, q64.field.eps, 0, 0]])


def test_restricted_closure_is_closure_over_the_subfield(q64):
    small_geom = build_grassmannian(build_model("Qparab(3,2)"), 2)
    rat = q64.rational_ids()
    rng = np.random.default_rng(0)
    for _ in range(10):
        seed = rng.choice(small_geom.npoints, size=int(rng.integers(2, 8)), replace=False)
        want = span_closure(small_geom, seed).closed
        got = span_closure(q64.geom, rat[seed], allowed=q64.rational).closed
        assert np.array_equal(got[rat], want)
        assert not got[~q64.rational].any()


def test_cor54_example(q64):
    F = q64.field
    e = F.eps
    adj = cor54_adjoin(q64, _e(7, 0, 4), _e(7, 1, 5))
    want = canonicalize(F, [[1, 0, 0, 0, e, 0, 0], [0, e, 0, 0, 0, F.neg[1], 0]], 7)
    assert np.array_equal(adj.rows, want.rows)
    assert adj.id == q64.model.subspace_id(want)
    # the rational points of l0 that come first are passed over
    model = q64.model
    rational_p = model.subspace_id(canonicalize(F, [[1, 0, 0, 0, 1, 0, 0]], 7))
    assert rational_p in adj.skipped
    assert all(q64.rational_points[s] for s in adj.skipped)
    assert q64.fully_irrational(adj.p)[0] and q64.fully_irrational(adj.q)[0]
    assert adj.to_json(F)["t"] == [["1", "0", "0", "0", "e", "0", "0"],
                                   ["0", "1", "0", "0", "0", "e^2", "0"]]


def test_cor54_preconditions(q64):
    with pytest.raises(ValueError, match="opposite"):
        cor54_adjoin(q64, _e(7, 0, 4), _e(7, 0, 2))
    irr = [[1, 0, 0, 0, q64.field.eps, 0, 0], [0, 0, 1, 0, 0, 0, 0]]
    with pytest.raises(ValueError, match="F0-rational"):
        cor54_adjoin(q64, irr, _e(7, 1, 5))
    with pytest.raises(ValueError, match="singular"):
        cor54_adjoin(q64, _e(7, 0, 1), _e(7, 2, 4))


def test_rational_lines_and_t_generate(q64):
    adj = cor54_adjoin(q64, _e(7, 0, 4), _e(7, 1, 5))
    rat = q64.rational_ids()
    assert span_closure(q64.geom, np.append(rat, adj.id)).generated_all
    # t is itself in the span of the rational lines, so they already generate
    alone = span_closure(q64.geom, rat)
    assert alone.closed[adj.id] and alone.generated_all


def test_lines_through_rational_points_are_in_the_span(q64):
    model = q64.model
    closed = span_closure(q64.geom, q64.rational_ids()).closed
    meets = q64.rational_points[points_on(model, q64.geom.point_rows)].any(axis=1)
    assert meets.sum() > len(q64.rational_ids())
    assert closed[meets].all()


def test_planes_with_two_rational_points(q64):
    model, geom = q64.model, q64.geom
    closed = span_closure(geom, q64.rational_ids()).closed
    planes = model.level(3).rows
    cnt = q64.rational_points[points_on(model, planes)].sum(axis=1)
    cand = np.nonzero(cnt >= 2)[0]
    rng = np.random.default_rng(3)
    for b in rng.choice(cand, size=min(60, len(cand)), replace=False):
        assert closed[geom.blocks[b]].all()


def test_gset_examples(q64, qplus54):
    ok, info = gset_predicate(q64, q64.rational_ids(), witness=True)
    assert ok and info["generates_over_F0"] and info["witness"] is not None
    w = info["witness"]
    assert q64.rational[w["l"]] and q64.rational[w["l_prime"]]
    ok, info = gset_predicate(qplus54, qplus54.rational_ids(), witness=True)
    assert not ok and info["generates_over_F0"]
    few = q64.rational_ids()[:3]
    ok, info = gset_predicate(q64, few, witness=True)
    assert not ok and not info["generates_over_F0"]
    with pytest.raises(ValueError):
        gset_predicate(q64, [int(np.nonzero(~q64.rational)[0][0])])


def test_omega_obstruction_q4(qplus54):
    rep = omega_obstruction(qplus54)
    assert rep.ok
    assert rep.total == 1785 and rep.proper
    assert rep.witness_outside and not rep.omega[rep.witness_id]
    assert [c for _, c in rep.witness_planes] == [1, 1]
    j = rep.to_json()
    assert j["omega"] == int(rep.omega.sum()) < 1785


def test_omega_obstruction_q9():
    geom = build_grassmannian(build_model("Qplus(3,9)"), 2)
    rep = omega_obstruction(SubfieldContext(geom, 1))
    assert rep.ok and rep.proper and rep.witness_outside


def test_omega_needs_hyperbolic_rank3(q64):
    with pytest.raises(ValueError):
        omega_obstruction(q64)


def test_context_errors():
    geom = build_grassmannian(build_model("Qparab(3,2)"), 2)
    with pytest.raises(ValueError):
        SubfieldContext(geom, 1)
    g16 = build_grassmannian(build_model("Qparab(2,16)"), 1)
    ctx = SubfieldContext(g16, 1)
    assert ctx.between == [1, 2]
    F = ctx.field
    x = np.array([[1, F.eps, 0, 0, 0]])
    sub4 = np.nonzero(F.subfield_mask(2))[0]
    y = np.array([[1, int(sub4[-1]), 0, 0, 0]])
    assert ctx.fully_irrational(x)[0] and not ctx.fully_irrational(y)[0]
