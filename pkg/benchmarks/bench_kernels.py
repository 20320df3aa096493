"""Compare the compiled and pure numpy kernel backends.

Times the simplex grid scan and the dwell-switched simulation on a few
representative shapes and prints per-backend timings with the speedup.

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""
import argparse
import time

import numpy as np

from plmirelax import kernels
from plmirelax.plmi import counterexample_instance
from plmirelax.stabilization import example_system, synthesize


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def grid_cases():
    rng = np.random.default_rng(0)
    yield "grid r=3 n=1 m=200", counterexample_instance().phi, 200
    yield "grid r=3 n=1 m=800", counterexample_instance().phi, 800
    raw = rng.uniform(-1, 1, size=(4, 4, 3, 3))
    yield "grid r=4 n=3 m=60", (raw + raw.swapaxes(2, 3)) / 2, 60
    raw = rng.uniform(-1, 1, size=(3, 3, 6, 6))
    yield "grid r=3 n=6 m=150", (raw + raw.swapaxes(2, 3)) / 2, 150


def sim_case():
    rng = np.random.default_rng(1)
    sys_ = example_system(0.0, 0.0)
    out = synthesize(sys_, "thm1")
    K = np.stack(out.result.K)
    schedule = rng.dirichlet(np.ones(3), size=2000)
    x0 = np.array([1.0, -1.0])
    return sys_.A, sys_.B, K, schedule, x0


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="best-of repeat count")
    args = parser.parse_args()

    backends = ["python"]
    if kernels.BACKEND == "compiled":
        backends.append("compiled")
    else:
        print("compiled extension not active; timing the fallback only\n")

    print(f"{'case':<22} " + " ".join(f"{b:>12}" for b in backends) + "  speedup")
    for name, phi, m in grid_cases():
        times = {}
        for b in backends:
            times[b] = best_of(lambda: kernels.grid_worst(phi, m, backend=b), args.repeats)
        line = f"{name:<22} " + " ".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) == 2:
            line += f"  {times['python'] / times['compiled']:>6.1f}x"
        print(line)

    A, B, K, schedule, x0 = sim_case()
    times = {}
    for b in backends:
        times[b] = best_of(
            lambda: kernels.simulate_dwell(A, B, K, schedule, x0, 1e-3, 50, backend=b),
            args.repeats,
        )
    line = f"{'sim 2000 dwells':<22} " + " ".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
    if len(backends) == 2:
        line += f"  {times['python'] / times['compiled']:>6.1f}x"
    print(line)

    if len(backends) == 2:
        # the two implementations must agree on what they computed
        wp = kernels.grid_worst(counterexample_instance().phi, 200, backend="python")
        wc = kernels.grid_worst(counterexample_instance().phi, 200, backend="compiled")
        assert wp[1] == wc[1] and abs(wp[0] - wc[0]) < 1e-10, (wp, wc)
        sp = kernels.simulate_dwell(A, B, K, schedule[:50], x0, 1e-3, 50, backend="python")
        sc = kernels.simulate_dwell(A, B, K, schedule[:50], x0, 1e-3, 50, backend="compiled")
        assert np.allclose(sp, sc, rtol=1e-9), "backends disagree"
        print("\nbackends agree on the checked cases")


if __name__ == "__main__":
    main()
