"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each kernel is run on the same inputs by both backends; results are checked
to agree before timings are reported.
"""

import argparse
import json
import time

import numpy as np

from r5lab import _kernels


def _cases(rng):
    f16 = np.exp(2j * np.pi * rng.random(16))
    f24 = np.exp(2j * np.pi * rng.random(24))
    g = [np.ascontiguousarray(rng.random(150) + 0j) for _ in range(5)]
    n = 11
    x = np.arange(n, dtype=np.int64)
    cubic = (3 * x**3 + x + 2) % n
    mask = np.ones(n, dtype=np.uint8)
    members = np.arange(n, dtype=np.int64)
    return [
        ("gowers_direct U^3, N=16", "gowers_direct", (f16, 3)),
        ("gowers_direct U^2, N=24", "gowers_direct", (f24, 2)),
        ("lambda5_direct, N=150", "lambda5_direct", tuple(g)),
        ("cube_scan s=3, N=11", "cube_scan", (cubic, mask, members, 4, 1, n, 0.0)),
    ]


def _time(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t)
    return best, out


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    if a is None or b is None:
        return a is b
    return abs(complex(a) - complex(b)) <= 1e-9 * max(1.0, abs(complex(a)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    if _kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; reinstall without R5LAB_NO_EXT")
    rows = []
    for label, name, inputs in _cases(np.random.default_rng(args.seed)):
        tc, oc = _time(getattr(_kernels.compiled, name), inputs, args.repeat)
        tp, op = _time(getattr(_kernels.python, name), inputs, args.repeat)
        if not _same(oc, op):
            raise SystemExit(f"{label}: backends disagree ({oc!r} vs {op!r})")
        rows.append({"case": label, "compiled_s": tc, "python_s": tp, "speedup": tp / tc if tc else float("inf")})
    print(f"{'case':28s} {'compiled':>12s} {'python':>12s} {'speedup':>9s}")
    for r in rows:
        print(f"{r['case']:28s} {r['compiled_s']:12.6f} {r['python_s']:12.6f} {r['speedup']:9.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return rows


if __name__ == "__main__":
    main()
