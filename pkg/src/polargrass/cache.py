"""On-disk cache for enumerated models and geometries.

Each entry is a directory holding arrays.npz and manifest.json. The manifest
records the descriptor, field modulus, counts, a hash of the enumeration code
and the sha256 of the array file; loads refuse anything that does not match.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .grassmann import Geometry, build_grassmannian
from .polar import Level, PolarModel, build_model

__all__ = ["CacheError", "MissingCache", "StaleCache", "CorruptCache", "cache_dir", "code_hash",
           "save_model", "load_model", "save_geometry", "load_geometry", "cached_geometry"]

SCHEMA = 1
_SOURCES = ("gf.py", "linalg.py", "forms.py", "polar.py", "grassmann.py")


class CacheError(RuntimeError):
    pass


class MissingCache(CacheError):
    pass


class StaleCache(CacheError):
    pass


class CorruptCache(CacheError):
    pass


def cache_dir(path: str | os.PathLike | None = None) -> Path:
    if path is None:
        path = os.environ.get("POLARGRASS_CACHE") or Path.home() / ".cache" / "polargrass"
    return Path(path)


def code_hash() -> str:
    """Hash of the version and of the modules that decide IDs."""
    h = hashlib.sha256(__version__.encode())
    pkg = resources.files("polargrass")
    for name in _SOURCES:
        h.update(pkg.joinpath(name).read_bytes())
    return h.hexdigest()[:16]


def _slug(desc: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", desc).strip("_")


def _entry(root: Path, model: PolarModel, k: int | None) -> Path:
    tag = f"{_slug(model.descriptor)}-{_slug(model.field.descriptor)}"
    return root / (tag + (f"-k{k}" if k is not None else ""))


def _write(path: Path, arrays: dict, manifest: dict):
    path.mkdir(parents=True, exist_ok=True)
    npz = path / "arrays.npz"
    np.savez(npz, **arrays)
    manifest = dict(manifest, schema=SCHEMA, version=__version__, code_hash=code_hash(),
                    sha256=hashlib.sha256(npz.read_bytes()).hexdigest())
    (path / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return path


def _read(path: Path, expect: dict):
    mpath, npz = path / "manifest.json", path / "arrays.npz"
    if not mpath.exists() or not npz.exists():
        raise MissingCache(f"no cache entry at {path}")
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError as exc:
        raise CorruptCache(f"unreadable manifest in {path}") from exc
    if manifest.get("schema") != SCHEMA or manifest.get("code_hash") != code_hash():
        raise StaleCache(f"cache entry {path} was written by another version; "
                         "delete it and rebuild")
    for key, val in expect.items():
        if manifest.get(key) != val:
            raise StaleCache(f"cache entry {path} has {key}={manifest.get(key)!r}, "
                             f"expected {val!r}")
    if hashlib.sha256(npz.read_bytes()).hexdigest() != manifest.get("sha256"):
        raise CorruptCache(f"checksum mismatch in {path}")
    try:
        with np.load(npz) as data:
            arrays = {k: data[k] for k in data.files}
    except Exception as exc:  # pragma: no cover - zip damage past the checksum
        raise CorruptCache(f"unreadable arrays in {path}") from exc
    return manifest, arrays


def _model_manifest(model: PolarModel) -> dict:
    return {"descriptor": model.descriptor, "field": model.field.descriptor,
            "modulus": list(model.field.modulus)}


def save_model(model: PolarModel, root=None, levels=None) -> Path:
    levels = sorted(model._levels) if levels is None else levels
    arrays = {}
    for k in levels:
        lev = model.level(k)
        arrays[f"rows{k}"], arrays[f"keys{k}"] = lev.rows, lev.keys
    man = dict(_model_manifest(model), counts={str(k): len(model.level(k)) for k in levels})
    return _write(_entry(cache_dir(root), model, None), arrays, man)


def load_model(descriptor: str, root=None, budget=None) -> PolarModel:
    model = build_model(descriptor, budget=budget)
    man, arrays = _read(_entry(cache_dir(root), model, None), _model_manifest(model))
    for key, cnt in man["counts"].items():
        k = int(key)
        rows, keys = arrays[f"rows{k}"], arrays[f"keys{k}"]
        if len(keys) != cnt or (len(keys) > 1 and np.any(np.diff(keys) <= 0)):
            raise CorruptCache(f"level {k} is inconsistent")
        model._levels[k] = Level(k, rows, keys)
    return model


_GEOM_FIELDS = ("blocks", "pencils", "hyp_pencils", "indptr", "inc")


def save_geometry(geom: Geometry, root=None) -> Path:
    model = geom.model
    save_model(model, root, levels=sorted(k for k in model._levels if k <= geom.k + 1))
    arrays = {f: getattr(geom, f) for f in _GEOM_FIELDS}
    man = dict(_model_manifest(model), k=geom.k, meta=geom.meta,
               counts={"points": geom.npoints, "lines": geom.nlines})
    return _write(_entry(cache_dir(root), model, geom.k), arrays, man)


def load_geometry(descriptor: str, k: int, root=None, budget=None) -> Geometry:
    model = load_model(descriptor, root, budget)
    man, arrays = _read(_entry(cache_dir(root), model, k), dict(_model_manifest(model), k=k))
    geom = Geometry(model, k, *(arrays[f] for f in _GEOM_FIELDS), meta=man["meta"])
    if geom.npoints != man["counts"]["points"] or geom.nlines != man["counts"]["lines"]:
        raise CorruptCache("geometry counts differ from the manifest")
    if geom.npoints != len(model.level(k)):
        raise CorruptCache("geometry and model disagree")
    return geom


def cached_geometry(descriptor: str, k: int, root=None, budget=None, use_cache: bool = True):
    """Load a geometry from the cache, building and storing it on a miss.

    Returns (geometry, source) with source one of 'cache', 'built'. Stale or
    corrupt entries are not overwritten silently; the error propagates.
    """
    if use_cache:
        try:
            return load_geometry(descriptor, k, root, budget), "cache"
        except MissingCache:
            pass
    geom = build_grassmannian(build_model(descriptor, budget=budget), k)
    if use_cache:
        save_geometry(geom, root)
    return geom, "built"
