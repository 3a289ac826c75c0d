import warnings
from math import comb

import numpy as np
import pytest

from polargrass.grassmann import build_grassmannian, span_closure
from polargrass.gensets import (
    HypothesisError,
    apartment,
    contains_rows,
    genset_k,
    genset_k2,
    genset_singular,
    hermitian_genset,
    orth_q2_genset,
    polar_genset,
    random_triple,
)
from polargrass.linalg import canonicalize, intersect
from polargrass.polar import build_model, hyperplane


def _pair(model):
    """A point q and the least point p0 not collinear with it."""
    P, f = model.points, model.form
    q = P[0]
    return q, next(x for x in P if int(f.polar(q, x)))


@pytest.mark.parametrize("desc", ["Qplus(3,2)", "H(2,1,2)", "Qparab(3,3)", "Qminus(3,2)"])
def test_apartment_cliques(desc):
    model = build_model(desc)
    ap = apartment(model)
    n = model.n
    assert ap.size == 2 ** n
    F = model.field
    spaces = [canonicalize(F, r, model.N) for r in ap.rows]
    assert all(S.rank == n and model.is_totally_singular(S.rows) for S in spaces)
    # two apartment elements meet in the clique points they share
    for i, A in enumerate(spaces):
        for j, B in enumerate(spaces):
            assert intersect(A, B).rank == n - bin(i ^ j).count("1")


def test_apartment_of_thin_dual_does_not_generate():
    model = build_model("Qplus(3,2)")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        geom = build_grassmannian(model, 3)
    ap = apartment(model)
    r = span_closure(geom, ap.ids)
    assert r.size == ap.size and not r.generated_all


def test_apartment_generates_dual_of_h44():
    model = build_model("H(2,1,2)")
    r = span_closure(build_grassmannian(model, 2), apartment(model).ids)
    assert r.generated_all and r.size == 297


@pytest.mark.parametrize("desc", ["Qparab(3,2)", "Qplus(3,3)", "Qminus(2,3)", "H(2,1,3)",
                                  "Qminus(3,2)"])
def test_polar_genset(desc):
    model = build_model(desc)
    gs = polar_genset(model)
    assert gs.size == 2 * model.n + model.d
    assert gs.verify().generated_all


@pytest.mark.parametrize("desc,trials", [("Qparab(3,2)", 6), ("Qplus(4,2)", 4), ("Qparab(3,3)", 3)])
def test_genset_k2_random(desc, trials):
    model = build_model(desc)
    geom = build_grassmannian(model, 2)
    rng = np.random.default_rng(0)
    for _ in range(trials):
        H, p0, l0 = random_triple(model, rng)
        gs = genset_k2(model, H, p0, l0)
        assert span_closure(geom, gs.ids).generated_all
        assert set(gs.tag_counts()) <= {"S_k(H)", "S_k(p0)", "hat-Z"}


def test_genset_k_reduces_to_k2():
    model = build_model("Qparab(3,2)")
    H, p0, l0 = random_triple(model, np.random.default_rng(4))
    a = genset_k2(model, H, p0, l0)
    b = genset_k(model, H, p0, 2, l0=l0)
    assert np.array_equal(np.sort(a.ids), np.sort(b.ids))


def test_genset_k3_on_qplus42():
    model = build_model("Qplus(4,2)")
    geom = build_grassmannian(model, 3)
    H, p0, _ = random_triple(model, np.random.default_rng(1))
    gs = genset_k(model, H, p0, 3)
    assert gs.meta.get("inner_generates") is True
    assert span_closure(geom, gs.ids).generated_all


def test_genset_k2_hypotheses():
    model = build_model("Qparab(3,2)")
    form = model.form
    H, p0, l0 = random_triple(model, np.random.default_rng(2))
    # a line inside p0^perp
    lines = model.level(2).rows
    inside = next(L for L in lines if not form.polar(p0, L).any())
    with pytest.raises(HypothesisError) as exc:
        genset_k2(model, H, p0, inside)
    assert exc.value.condition == "l0 not in p0perp"
    inH = next(x for x in model.points if H.members[model.subspace_id(x[None])])
    with pytest.raises(HypothesisError) as exc:
        genset_k2(model, H, inH, l0)
    assert exc.value.condition == "p0 not in H"
    small = build_model("Qparab(2,3)")
    with pytest.raises(HypothesisError):
        genset_k2(small, hyperplane(small, "singular", small.points[0]), small.points[-1],
                  small.level(2).rows[0])
    with pytest.raises(HypothesisError, match="k range"):
        genset_k(model, H, p0, 3)


@pytest.mark.parametrize("desc,k", [("Qplus(4,2)", 2), ("Qparab(4,2)", 2)])
def test_genset_singular(desc, k):
    model = build_model(desc)
    q, p0 = _pair(model)
    gs = genset_singular(model, q, p0, k)
    assert gs.verify().generated_all


def test_genset_singular_top_case():
    model = build_model("Qparab(3,2)")
    q, p0 = _pair(model)
    with pytest.raises(HypothesisError, match="k < n-1"):
        genset_singular(model, q, p0, 2)
    gs = genset_singular(model, q, p0, 2, allow_top=True)
    assert gs.verify().generated_all
    near = next(x for x in model.points[1:] if int(model.form.polar(q, x)) == 0)
    with pytest.raises(HypothesisError, match="collinear"):
        genset_singular(model, q, near, 2, allow_top=True)


def test_hermitian_genset_small():
    gs = hermitian_genset(3, 2, 1, 1)
    assert gs.size == 5 and gs.verify().generated_all
    assert gs.meta["size_claim"] == "C(2n+d,k)"


def test_hermitian_genset_f4_claim_withheld():
    gs = hermitian_genset(2, 3, 1, 2)
    assert gs.size == comb(7, 2)
    assert gs.meta["size_claim"].startswith("withheld")
    assert gs.verify().generated_all
    gs0 = hermitian_genset(2, 3, 0, 2)
    assert gs0.size == comb(6, 2) and gs0.verify().generated_all


@pytest.mark.parametrize("q,n,d", [(2, 3, 1), (3, 3, 1), (2, 4, 0), (3, 3, 2)])
def test_orth_q2_genset(q, n, d):
    gs = orth_q2_genset(q, n, d)
    assert gs.size == comb(2 * n + d, 2)
    if d <= 1:
        assert gs.rational_mask(1).all()
    assert gs.meta["rationality_claimed"] == (d <= 1)
    assert gs.verify().generated_all


def test_orth_q2_genset_f4():
    gs = orth_q2_genset(4, 3, 1)
    assert gs.size == 21 and gs.rational_mask(1).all()
    assert gs.verify().generated_all


def test_orth_q2_genset_rejects():
    with pytest.raises(ValueError):
        orth_q2_genset(16, 3, 1)
    with pytest.raises(ValueError):
        orth_q2_genset(3, 3, 0)


def test_contains_rows():
    model = build_model("Qparab(3,2)")
    lines = model.level(2).rows
    p = model.points[7]
    mask = contains_rows(model.field, lines, p[None])
    want = [canonicalize(model.field, L).contains_vector(p) for L in lines]
    assert mask.tolist() == want


def test_genset_json():
    gs = polar_genset(build_model("Qparab(2,3)"))
    js = gs.to_json()
    assert js["size"] == 5 and len(js["elements"]) == 5
