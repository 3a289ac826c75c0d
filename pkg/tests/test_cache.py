import json

import numpy as np
import pytest

from polargrass.cache import (
    CorruptCache,
    MissingCache,
    StaleCache,
    cache_dir,
    cached_geometry,
    load_geometry,
    load_model,
    save_geometry,
    save_model,
)
from polargrass.grassmann import build_grassmannian, span_closure
from polargrass.polar import build_model


def _entry(root, k=2):
    return root / ("Qparab_3_2-F2" + (f"-k{k}" if k is not None else ""))


def test_round_trip_keeps_ids(tmp_path):
    geom = build_grassmannian(build_model("Qparab(3,2)"), 2)
    save_geometry(geom, tmp_path)
    back = load_geometry("Qparab(3,2)", 2, tmp_path)
    assert (back.npoints, back.nlines) == (geom.npoints, geom.nlines)
    assert np.array_equal(back.point_rows, geom.point_rows)
    assert np.array_equal(back.blocks, geom.blocks)
    seed = [0, 50, 100, 200]
    assert np.array_equal(span_closure(back, seed).closed, span_closure(geom, seed).closed)


def test_model_round_trip(tmp_path):
    model = build_model("Qplus(3,3)")
    model.level(3)
    save_model(model, tmp_path)
    back = load_model("Qplus(3,3)", tmp_path)
    for k in (1, 2, 3):
        assert np.array_equal(back._levels[k].keys, model.level(k).keys)


def test_cached_geometry_builds_once(tmp_path):
    g1, src1 = cached_geometry("Qparab(3,2)", 2, root=tmp_path)
    g2, src2 = cached_geometry("Qparab(3,2)", 2, root=tmp_path)
    assert (src1, src2) == ("built", "cache")
    assert np.array_equal(g1.blocks, g2.blocks)
    _, src3 = cached_geometry("Qparab(3,2)", 2, root=tmp_path, use_cache=False)
    assert src3 == "built"


def test_missing_entry(tmp_path):
    with pytest.raises(MissingCache):
        load_geometry("Qparab(3,2)", 2, tmp_path)


def test_corrupted_file_is_refused(tmp_path):
    save_geometry(build_grassmannian(build_model("Qparab(3,2)"), 2), tmp_path)
    npz = _entry(tmp_path) / "arrays.npz"
    data = bytearray(npz.read_bytes())
    data[len(data) // 2] ^= 0xFF
    npz.write_bytes(bytes(data))
    with pytest.raises(CorruptCache):
        load_geometry("Qparab(3,2)", 2, tmp_path)
    with pytest.raises(CorruptCache):
        cached_geometry("Qparab(3,2)", 2, root=tmp_path)


def test_unreadable_manifest(tmp_path):
    save_geometry(build_grassmannian(build_model("Qparab(3,2)"), 2), tmp_path)
    (_entry(tmp_path) / "manifest.json").write_text("{not json")
    with pytest.raises(CorruptCache):
        load_geometry("Qparab(3,2)", 2, tmp_path)


@pytest.mark.parametrize("key,value", [("code_hash", "0" * 16), ("modulus", [1, 1, 1])])
def test_stale_entry_is_refused(tmp_path, key, value):
    save_geometry(build_grassmannian(build_model("Qparab(3,2)"), 2), tmp_path)
    path = _entry(tmp_path) / "manifest.json"
    man = json.loads(path.read_text())
    man[key] = value
    path.write_text(json.dumps(man))
    with pytest.raises(StaleCache) as exc:
        load_geometry("Qparab(3,2)", 2, tmp_path)
    if key == "code_hash":
        assert "rebuild" in str(exc.value)


def test_cache_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("POLARGRASS_CACHE", str(tmp_path / "c"))
    assert cache_dir() == tmp_path / "c"
    assert cache_dir(tmp_path) == tmp_path
