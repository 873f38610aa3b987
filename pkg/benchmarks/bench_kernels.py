"""Compare the compiled and numpy kernels on dialog-sized inputs.

Usage: python3 benchmarks/bench_kernels.py [--minutes 10] [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from vapkit import _pykernels

try:
    from vapkit import _ckernels
except ImportError:
    _ckernels = None


def make_input(minutes: float, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = int(minutes * 60 * 100)
    runs = rng.integers(5, 400, size=n // 5)
    vals = np.arange(runs.size) % 2
    return np.repeat(vals, runs)[:n].astype(np.uint8)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--minutes", type=float, default=10.0)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    x = make_input(args.minutes)
    # future bins of the projection window, then the mirrored past bins
    fut = (np.array([0, 20, 60, 120]), np.array([20, 60, 120, 200]))
    past = (-fut[1], -fut[0])
    cases = {
        "window_counts future": lambda m: m.window_counts(x, *fut),
        "window_counts past": lambda m: m.window_counts(x, *past),
        "run_lengths": lambda m: m.run_lengths(x),
    }
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])

    print(f"{x.size} frames, best of {args.repeat}")
    best = {}
    for name, mod in backends:
        for label, fn in cases.items():
            best[name, label] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
            print(f"{name:7s} {label:22s} {best[name, label] * 1e3:8.2f} ms")
    if _ckernels is None:
        print("compiled extension not built; only the numpy path was timed")
        return
    for label, fn in cases.items():
        assert np.array_equal(fn(_pykernels), fn(_ckernels)), label
        print(f"speedup {label:22s} {best['python', label] / best['cython', label]:6.2f}x")

if __name__ == "__main__":
    main()
