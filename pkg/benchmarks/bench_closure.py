"""Compare the compiled and pure-Python closure kernels.

    python benchmarks/bench_closure.py [--repeat 3] [--large] [--json out.json]

Each case closes a fixed generating set of a geometry with both backends,
checks that they reach the same closed set, and reports the best time.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from polargrass import kernels
from polargrass.grassmann import build_grassmannian, span_closure
from polargrass.gensets import apartment, orth_q2_genset, polar_genset
from polargrass.polar import build_model

CASES = [
    ("Qparab(3,3) points", lambda: _polar("Qparab(3,3)")),
    ("H(3,1,2) generators", lambda: _dual("H(3,1,2)")),
    ("Qparab(3,4) lines", lambda: _lines(4)),
    ("Qparab(3,5) lines", lambda: _lines(5)),
]
LARGE = [("Qparab(3,7) lines", lambda: _lines(7))]


def _polar(desc):
    m = build_model(desc)
    return build_grassmannian(m, 1), polar_genset(m).ids


def _dual(desc):
    m = build_model(desc)
    return build_grassmannian(m, m.n), apartment(m).ids


def _lines(q):
    gs = orth_q2_genset(q, 3, 1)
    return build_grassmannian(gs.model, 2), gs.ids


def _best(geom, seed, backend, repeat):
    times, closed = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        closed = span_closure(geom, seed, backend=backend).closed
        times.append(time.perf_counter() - t)
    return min(times), closed


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--large", action="store_true")
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")
    rows = []
    print(f"{'case':24} {'points':>9} {'compiled s':>11} {'python s':>10} {'speedup':>8}")
    for name, make in CASES + (LARGE if args.large else []):
        geom, seed = make()
        tc, cc = _best(geom, seed, "compiled", args.repeat)
        tp, cp = _best(geom, seed, "python", args.repeat)
        if not np.array_equal(cc, cp):
            raise SystemExit(f"{name}: backends disagree")
        rows.append({"case": name, "points": geom.npoints, "compiled_s": round(tc, 4),
                     "python_s": round(tp, 4), "speedup": round(tp / tc, 2)})
        print(f"{name:24} {geom.npoints:9d} {tc:11.4f} {tp:10.4f} {tp / tc:8.2f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
