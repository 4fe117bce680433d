"""Compare the compiled sampling kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--reps 200]

Both backends are timed in one process by swapping the functions behind
``betagraph.kernels``; outputs are checked to be identical.
"""
import argparse
import time

import numpy as np

from betagraph import _kernels_py, kernels
from betagraph.graph_model import ModelParams, make_signal, sample_degrees_batch, sample_graph

try:
    from betagraph import _kernels as _ext
except ImportError:
    _ext = None

NAMES = ("coupled_degrees", "walk_triangle", "walk_rectangle")


def use(module):
    for name in NAMES:
        setattr(kernels, name, getattr(module, name))


def timed(fn, reps):
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best / reps, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200)
    args = ap.parse_args()
    backends = [("python", _kernels_py)] + ([("cython", _ext)] if _ext is not None else [])
    cases = [(100, 25.0, 0.5), (100, 2.0, 0.6), (1000, 50.0, 0.5), (5000, 20.0, 0.6)]
    print(f"{'case':<28}{'path':<9}" + "".join(f"{b:>14}" for b, _ in backends) + "   speedup")
    for n, lam, alpha in cases:
        p = ModelParams(n, lam)
        sig = make_signal(p, alpha=alpha, A=1.0)
        reps = max(5, args.reps * 100 // n)
        seeds = list(range(reps))
        rows = {
            "skip": lambda: sample_degrees_batch(p, sig, seeds),
            "coupled": lambda: np.stack([sample_graph(p, sig, s, coupled=True).degrees for s in seeds[: max(2, reps // 10)]]),
        }
        for path, fn in rows.items():
            k = reps if path == "skip" else max(2, reps // 10)
            times, outs = [], []
            for _, mod in backends:
                use(mod)
                t, out = timed(fn, k)
                times.append(t)
                outs.append(out)
            assert all(np.array_equal(outs[0], o) for o in outs[1:]), "backends disagree"
            label = f"n={n} lambda={lam:g} alpha={alpha}"
            speed = f"{times[0] / times[-1]:9.1f}x" if len(times) > 1 else ""
            print(f"{label:<28}{path:<9}" + "".join(f"{t * 1e6:11.1f} us" for t in times) + "  " + speed)
    use(_ext if _ext is not None else _kernels_py)


if __name__ == "__main__":
    main()
