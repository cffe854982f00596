"""Time the Cython kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--frames N] [--repeat R]

Both backends are imported directly, whatever ``SHUTTLEPIPE_PURE`` says, and
each result is checked for agreement before timing.
"""

import argparse
import timeit

import numpy as np

from shuttlepipe._kernels import _pure

try:
    from shuttlepipe._kernels import _fast
except ImportError:  # extension not built
    _fast = None


def make_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    xs = 640 + 300 * np.sin(t / 40.0) + rng.normal(0, 2, n)
    ys = 360 + 200 * np.cos(t / 25.0) + rng.normal(0, 2, n)
    jumps = rng.random(n) < 0.05
    xs[jumps] += rng.uniform(100, 250, jumps.sum())
    present = rng.random(n) >= 0.05
    codes = rng.choice(3, size=n, p=[0.8, 0.1, 0.1]).astype(np.int64)
    return xs, ys, present, codes


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--frames", type=int, nargs="+", default=[1_000, 10_000, 100_000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _fast is None:
        print("compiled kernels not available; build with `pip install -e . --no-build-isolation`")
        return

    print(f"{'kernel':<12}{'frames':>10}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for n in args.frames:
        xs, ys, present, codes = make_inputs(n)
        cases = {
            "jump_mask": lambda mod: mod.jump_mask(xs, ys, present, 7, 50.0),
            "mode_filter": lambda mod: mod.mode_filter(codes, 3, 3),
        }
        for name, call in cases.items():
            assert np.array_equal(call(_pure), call(_fast)), f"{name}: backends disagree"
            slow = best_of(lambda: call(_pure), args.repeat)
            fast = best_of(lambda: call(_fast), args.repeat)
            print(f"{name:<12}{n:>10}{slow * 1e3:>12.2f}{fast * 1e3:>12.3f}{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
