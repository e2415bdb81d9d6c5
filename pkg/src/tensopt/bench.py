"""Benchmark the compiled simulator core against the pure-Python fallback.

Runs the shipped benchmark kernels on both engines, checks that results
agree bit-for-bit, and prints wall-clock timings.  Usage:

    python -m tensopt.bench [--repeats N] [--events]
"""

from __future__ import annotations

import argparse
import sys
import time
from importlib import resources

import numpy as np

from .dsl import parse_kernel
from .sim import (
    available_backends,
    instance_a,
    instance_b,
    lower_kernel,
    make_buffers,
)

_CASES = (
    ("gemm_12544x64x256_unopt.gk", "a"),
    ("gemm_12544x64x256_exo_opt.gk", "a"),
    ("gemm_12544x64x256_autocomp.gk", "a"),
    ("tinympc_fwd_unopt.gk", "b"),
    ("tinympc_fwd_autocomp.gk", "b"),
)


def _load_case(fname: str, instance: str):
    src = (resources.files("tensopt") / "assets" / "kernels" / fname).read_text()
    prog, diags = parse_kernel(src)
    if prog is None:
        raise RuntimeError(f"asset {fname} failed to parse: {diags}")
    cfg = instance_a() if instance == "a" else instance_b()
    low = lower_kernel(prog, cfg)
    rng = np.random.default_rng(0xBE4C)
    inputs = {}
    for p in prog.params:
        if cfg.is_float:
            inputs[p.name] = rng.uniform(-1, 1, size=p.shape).astype(np.float32)
        else:
            inputs[p.name] = rng.integers(-128, 128, size=p.shape, dtype=np.int8)
    return low, inputs


def _time_backend(mod, low, inputs, repeats: int, record_events: bool):
    best = float("inf")
    result = None
    for _ in range(repeats):
        buffers = make_buffers(low, inputs)
        t0 = time.perf_counter()
        counters, events = mod.execute(low, buffers, True, record_events)
        best = min(best, time.perf_counter() - t0)
        result = (buffers, counters, events)
    return best, result


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3,
                    help="runs per case per engine; the best time is reported")
    ap.add_argument("--events", action="store_true",
                    help="also record the event log (heavier)")
    args = ap.parse_args(argv)

    from .sim import engine_py
    lanes = [("python", engine_py)]
    if "compiled" in available_backends():
        from .sim import _engine_cy
        lanes.append(("compiled", _engine_cy))
    else:
        print("compiled core not built; timing the python engine only",
              file=sys.stderr)

    width = max(len(c[0]) for c in _CASES)
    header = f"{'kernel':<{width}}  {'latency':>10}"
    for lane_name, _ in lanes:
        header += f"  {lane_name:>10}"
    if len(lanes) == 2:
        header += f"  {'speedup':>8}"
    print(header)

    ok = True
    for fname, instance in _CASES:
        low, inputs = _load_case(fname, instance)
        times = []
        results = []
        for _, mod in lanes:
            t, res = _time_backend(mod, low, inputs, args.repeats, args.events)
            times.append(t)
            results.append(res)
        line = f"{fname:<{width}}  {int(results[0][1][0]):>10}"
        for t in times:
            line += f"  {t * 1e3:>8.1f}ms"
        if len(lanes) == 2:
            b_py, c_py, e_py = results[0]
            b_cy, c_cy, e_cy = results[1]
            same = (
                all(np.array_equal(x.view(np.uint8), y.view(np.uint8))
                    for x, y in zip(b_py, b_cy))
                and np.array_equal(c_py, c_cy)
                and e_py == e_cy
            )
            if not same:
                ok = False
            line += f"  {times[0] / max(times[1], 1e-9):>7.1f}x"
            if not same:
                line += "  MISMATCH"
        print(line)

    if not ok:
        print("engines disagree; see MISMATCH rows", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
