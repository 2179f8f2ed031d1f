"""Benchmark the compiled kernels against the pure-NumPy fallback.

Times each kernel on shapes representative of the two hot paths (the
contraction Monte-Carlo's small blocks and the MNIST-scale trainer
blocks) and verifies both backends return identical bits.
"""
from __future__ import annotations

import time

import numpy as np

from .kernels import pure

try:
    from .kernels import _fast
except ImportError:
    _fast = None

SHAPES = {
    "monte_carlo": (12, 4),
    "trainer_small": (7, 64),
    "trainer_mnist": (7, 7850),
}


def _cases(s: int, d: int, rng):
    w = rng.uniform(0.1, 1.0, s)
    w /= w.sum()
    x = rng.standard_normal((s, d))
    q = max(1, s // 4)
    return [
        ("weighted_sum", (w, x)),
        ("coomed", (x,)),
        ("trimean", (x, q)),
        ("ios_aggregate", (w, x, 0, q)),
        ("krum_select", (x, q)),
    ]


def _time(fn, args, repeats: int) -> float:
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats


def run_benchmark(repeats: int = 2000) -> list[dict]:
    rng = np.random.default_rng(0)
    rows = []
    for label, (s, d) in SHAPES.items():
        reps = repeats if d <= 64 else max(repeats // 20, 10)
        for name, args in _cases(s, d, rng):
            t_pure = _time(getattr(pure, name), args, reps)
            row = {"shape": label, "kernel": name, "pure_us": t_pure * 1e6}
            if _fast is not None:
                t_fast = _time(getattr(_fast, name), args, reps)
                a, b = getattr(_fast, name)(*args), getattr(pure, name)(*args)
                row.update(
                    {
                        "cython_us": t_fast * 1e6,
                        "speedup": t_pure / t_fast if t_fast > 0 else float("inf"),
                        "identical": bool(np.array_equal(a, b)),
                    }
                )
            rows.append(row)
    return rows


def print_benchmark(rows: list[dict]) -> None:
    have_fast = any("cython_us" in r for r in rows)
    if not have_fast:
        print("compiled extension unavailable; timing pure backend only")
    header = f"{'shape':<14} {'kernel':<22} {'pure (us)':>10}"
    if have_fast:
        header += f" {'cython (us)':>12} {'speedup':>8} {'bitwise':>8}"
    print(header)
    for r in rows:
        line = f"{r['shape']:<14} {r['kernel']:<22} {r['pure_us']:>10.2f}"
        if "cython_us" in r:
            line += f" {r['cython_us']:>12.2f} {r['speedup']:>8.1f} {str(r['identical']):>8}"
        print(line)
