"""Wall-clock comparison of the compiled and numpy stepping kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat 3] [--n 1400]
"""
import argparse
import time

import numpy as np

from mesalab import Box, ModelParams, RunConfig, available_backends, make_grid, run

CASES = [
    ("m=2 p=2 t=1", ModelParams(2.0, 2.0), 1.0),
    ("m=8 p=8 t=1", ModelParams(8.0, 8.0), 1.0),
    ("m=32 p=2 t=1", ModelParams(32.0, 2.0), 1.0),
    ("m=2 no absorption t=0.5", ModelParams(2.0, absorption_enabled=False), 0.5),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n", type=int, default=1400)
    args = ap.parse_args()
    grid = make_grid(-1, 6, args.n)
    backends = available_backends()
    print(f"grid n={args.n}, backends: {', '.join(backends)}")
    header = f"{'case':<26}{'steps':>8}" + "".join(f"{b + ' [s]':>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}{'max |diff|':>13}"
    print(header)
    for label, params, t_end in CASES:
        cfg = RunConfig(grid, params, Box(2.0, 0.0, 1.0), t_end)
        timings, finals, steps = [], [], 0
        for b in backends:
            dt, res = best_of(lambda: run(cfg, backend=b), args.repeat)
            timings.append(dt)
            finals.append(res.final.values)
            steps = res.step_count
        line = f"{label:<26}{steps:>8}" + "".join(f"{t:>14.3f}" for t in timings)
        if len(backends) == 2:
            diff = float(np.max(np.abs(finals[0] - finals[1])))
            line += f"{timings[1] / timings[0]:>9.1f}x{diff:>13.1e}"
        print(line)


if __name__ == "__main__":
    main()
