import json

import pytest

from polargrass.fixtures import FIXTURES, FixtureMismatch, load_fixture, verify_fixture

COMBOS = [("m-gen", "F4"), ("m-gen", "F8"), ("m-gen", "F9"), ("t-gen-4", "F4"), ("t-gen-8", "F8"),
          ("t-gen-9", "F9"), ("not-gen", "F4"), ("not-gen", "F8"), ("not-gen", "F9")]


@pytest.mark.parametrize("name,field", COMBOS)
def test_shipped_bundles_pass(name, field):
    rep = verify_fixture(name, field)
    assert rep["passed"], rep["failed"]
    assert rep["field"] == field and rep["checks"]


def test_every_bundle_is_covered():
    assert {n for n, _ in COMBOS} == set(FIXTURES)
    for name in FIXTURES:
        b = load_fixture(name)
        assert set(b.fields) == {f for n, f in COMBOS if n == name}


def test_documented_coordinates():
    b = load_fixture("t-gen-4")
    assert b.subspaces["l1"] == [["1", "0", "0", "1", "1", "1", "1"], ["1", "e^2", "e", "e", "0", "1", "0"]]
    b9 = load_fixture("t-gen-9")
    assert b9.subspaces["l22"] == [["-1", "1", "0", "-1", "0", "0", "1"],
                                   ["0", "1", "-1", "-1", "e^5", "e^7", "0"]]
    m = load_fixture("m-gen")
    chain = {(i["target"], tuple(i["between"])) for i in m.identities if i["kind"] == "on_line"}
    assert {("t", ("s", "l_eps")), ("s", ("s1", "s2")), ("s1", ("s11", "s12")),
            ("s2", ("s21", "s22"))} <= chain


def test_parallel_report_is_identical():
    assert verify_fixture("m-gen", "F9", workers=3) == verify_fixture("m-gen", "F9")


def _tampered(tmp_path, name, edit):
    data = json.loads(json.dumps(load_fixture(name).raw))
    edit(data)
    path = tmp_path / f"{name}-tampered.json"
    path.write_text(json.dumps(data))
    return load_fixture(str(path))


def test_tampered_identity_is_named(tmp_path):
    def edit(d):
        d["subspaces"]["l2"][1][4] = "e"      # was e^2
    rep = verify_fixture(_tampered(tmp_path, "t-gen-4", edit))
    assert not rep["passed"]
    assert "l_eps in <l1,l2>" in rep["failed"]
    assert "l2 is totally singular" in rep["failed"]
    assert "l1 is totally singular" not in rep["failed"]


def test_tampered_count_is_named(tmp_path):
    def edit(d):
        for ident in d["identities"]:
            if ident["kind"] == "rational_point_count":
                ident["count"] += 1
                return
        raise AssertionError("bundle has no count identity")
    rep = verify_fixture(_tampered(tmp_path, "not-gen", edit), "F4")
    assert len(rep["failed"]) == 1 and "exactly" in rep["failed"][0]


def test_modulus_mismatch(tmp_path):
    def edit(d):
        d["fields"] = {"F4": [1, 0, 1]}
    with pytest.raises(FixtureMismatch):
        verify_fixture(_tampered(tmp_path, "t-gen-4", edit))
    with pytest.raises(FixtureMismatch):
        verify_fixture("t-gen-4", "F9")


def test_bad_schema(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"schema": 99}))
    with pytest.raises(ValueError):
        load_fixture(str(path))
