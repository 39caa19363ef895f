"""Wall-clock comparison of the numba and pure-numpy kernel paths.

Run: python3 benchmarks/bench_kernels.py [--repeats 3]
Both paths run in one process; the numba timings exclude the first
(compiling) call. SLICELAB_NUMBA=0 disables the numba column.
"""
import argparse
import time

from slicelab import _accel
from slicelab import ifs as I
from slicelab import kernels
from slicelab import slicer as S
from slicelab import takagi as tk

LAM = 2 / 3


def workloads():
    graph_line = S.Line.sloped(0.7, (0.3, tk.evaluate(LAM, 0.3)[0]))
    lin, _ = I.example3_ifs().packed()
    xs = [(i + 0.5) / 20 for i in range(20)]
    cells = [(t, b) for t in (-3.0, -1.5, 0.0, 1.5, 3.0) for b in S.graph_offsets(LAM, t, xs)]
    return {
        "scan 100 cells depth 22": lambda nb: S.scan_max_slice(LAM, cells, 22, use_numba=nb),
        "census line depth 24": lambda nb: S.slice_census(LAM, graph_line, 24, use_numba=nb),
        "census strip r=0.02 depth 20": lambda nb: S.slice_census(LAM, S.Strip(graph_line, 0.02), 20, use_numba=nb),
        "census example3 depth 12": lambda nb: S.slice_census(I.example3_ifs(), graph_line, 12, use_numba=nb),
        "bad words depth 20": lambda nb: S.bad_word_tally(LAM, graph_line, 20, use_numba=nb),
        "level ratios example3 depth 11": lambda nb: kernels.level_ratio_max(lin, 11, nb),
    }


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    paths = [False, True] if _accel.USE_NUMBA else [False]
    print(f"{'workload':34s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}")
    for name, fn in workloads().items():
        if True in paths:
            fn(True)  # compile
        t = {nb: best_of(lambda: fn(nb), args.repeats) for nb in paths}
        nb_t = t.get(True)
        cols = f"{t[False]:10.4f} " + (f"{nb_t:10.4f} {t[False] / nb_t:8.1f}" if nb_t else f"{'-':>10s} {'-':>8s}")
        print(f"{name:34s} {cols}")


if __name__ == "__main__":
    main()
