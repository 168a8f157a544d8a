"""Benchmark the compiled kernels against the NumPy reference.

Times the two hot paths (split scanning during tree growth and the
pairwise lambda accumulation) plus one end-to-end listwise training run
on each backend.

    python benchmarks/bench_kernels.py [--rounds 5]
"""

import argparse
import time

import numpy as np

from upliftrank._kernels import _ref

try:
    from upliftrank._kernels import _fast
except ImportError:
    _fast = None


def timeit(fn, rounds):
    best = np.inf
    for _ in range(rounds):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_best_split(impl, rounds):
    rng = np.random.default_rng(0)
    n = 200_000
    values = np.sort(rng.normal(size=n))
    grads = np.ascontiguousarray(rng.normal(size=n))
    hess = np.ascontiguousarray(rng.uniform(0.5, 1.0, size=n))

    def run():
        impl.best_split(values, grads, hess, 50, 1.0)

    return timeit(run, rounds)


def bench_lambda_block(impl, rounds):
    rng = np.random.default_rng(1)
    n = 20_000
    gains = np.zeros(n)
    gains[: n // 10] = 1.0
    rng.shuffle(gains)
    weights = np.ascontiguousarray(np.arange(n, 0, -1, dtype=np.float64))
    scores = np.ascontiguousarray(rng.normal(size=n))
    hi = np.nonzero(gains == 1.0)[0].astype(np.int64)
    lo = np.nonzero(gains == 0.0)[0].astype(np.int64)

    def run():
        lam = np.zeros(n)
        hess = np.zeros(n)
        impl.lambda_block(hi, lo, gains, weights, scores, n, 1.0, True,
                          lam, hess)

    return timeit(run, rounds)


def bench_training(backend_env, rounds):
    import os
    import subprocess
    import sys

    code = (
        "import time, numpy as np\n"
        "from upliftrank.simulate import simulate, ScenarioSpec\n"
        "from upliftrank.lambdamart import LambdaConfig, train\n"
        "from upliftrank.gbrt import GbrtConfig, Loss\n"
        "from upliftrank.relevance import RelevanceScheme\n"
        "from upliftrank.data import Partition\n"
        "ds = simulate(ScenarioSpec(1500, 1500, seed=0)).dataset\n"
        "cfg = LambdaConfig(gbrt=GbrtConfig(n_trees=100,"
        " learning_rate=0.05, loss=Loss.EXTERNAL_GRADIENTS))\n"
        "start = time.perf_counter()\n"
        "train(ds, RelevanceScheme.REL, Partition.JOINT, cfg)\n"
        "print(time.perf_counter() - start)\n"
    )
    env = dict(os.environ)
    env.pop("UPLIFTRANK_FORCE_PYTHON", None)
    if backend_env:
        env["UPLIFTRANK_FORCE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rounds", type=int, default=5)
    args = parser.parse_args()

    if _fast is None:
        print("compiled kernels unavailable; benchmarking the reference "
              "implementation only")
    backends = [("python", _ref)] + ([("compiled", _fast)] if _fast else [])

    print(f"{'benchmark':<28}" + "".join(f"{name:>12}"
                                         for name, _ in backends))
    for label, bench in (("split scan (200k rows)", bench_best_split),
                         ("lambda pass (20k items)", bench_lambda_block)):
        times = [bench(impl, args.rounds) for _, impl in backends]
        row = "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        print(f"{label:<28}{row}")
        if len(times) == 2:
            print(f"{'':<28}{'':>12}{times[0] / times[1]:>10.1f}x")

    print("end-to-end listwise training (3000 rows, 100 rounds):")
    py = bench_training(True, 1)
    print(f"{'  python':<28}{py * 1e3:>10.1f}ms")
    if _fast is not None:
        fast = bench_training(False, 1)
        print(f"{'  compiled':<28}{fast * 1e3:>10.1f}ms"
              f"   ({py / fast:.1f}x speedup)")


if __name__ == "__main__":
    main()
