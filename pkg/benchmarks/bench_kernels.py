"""Compare the compiled and numpy kernel backends.

Times the raw kernels and one end-to-end compact solve per backend.

    python benchmarks/bench_kernels.py --n 100000 --pairs 6 --repeat 50
"""
import argparse
import statistics
import time

import numpy as np

from qnsolve import bench, broyden_compact, kernels


def _median_time(fn, repeat):
    fn()
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def run(n, pairs, repeat, seed=0):
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((pairs, n))
    z = rng.standard_normal(n)
    coef = rng.standard_normal(pairs)
    cfg = bench.ExperimentConfig(n=n, memory=pairs, phi=0.5, runs=1, seed=seed)
    buf = bench.gen_instance(cfg).buffer

    results = {}
    previous = kernels.BACKEND
    try:
        for name in kernels.available_backends():
            kernels.use_backend(name)
            out = np.zeros(n)
            results[name] = {
                "dot": _median_time(lambda: kernels.dot(z, z), repeat),
                "project": _median_time(lambda: kernels.project(rows, z), repeat),
                "accumulate": _median_time(lambda: kernels.accumulate(out, rows, coef), repeat),
                "compact solve": _median_time(
                    lambda: broyden_compact.build_states(buf, 0.5)[1].solve(z), repeat),
            }
    finally:
        kernels.use_backend(previous)
    return results


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--pairs", type=int, default=6)
    p.add_argument("--repeat", type=int, default=50)
    args = p.parse_args(argv)
    results = run(args.n, args.pairs, args.repeat)
    names = list(results)
    print(f"{'kernel':<14}" + "".join(f"{b + ' [us]':>16}" for b in names))
    for kernel in results[names[0]]:
        print(f"{kernel:<14}" + "".join(f"{results[b][kernel] * 1e6:>16.1f}" for b in names))


if __name__ == "__main__":
    main()
