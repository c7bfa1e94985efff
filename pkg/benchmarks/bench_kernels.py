"""Benchmark the numba kernels against the pure-numpy fallback.

Times full solver iterations (decision pass, loss observation, stability
tracking, residual evaluation) on the built-in games with each backend.

    python benchmarks/bench_kernels.py [--iters 512]
"""

import argparse
import time

from spcfr import kernels
from spcfr.cfr import SolveOptions, run_simultaneous
from spcfr.games import build_kuhn, build_leduc, build_random_game


def time_run(game, iters):
    opts = SolveOptions(algorithm="oftrl_theory", regularizer="euclidean",
                        record_every=max(1, iters // 8))
    start = time.perf_counter()
    run_simultaneous(game, iters, opts)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--iters", type=int, default=512)
    args = parser.parse_args()

    games = [
        ("kuhn", build_kuhn()),
        ("leduc", build_leduc()),
        ("random-d3-b3", build_random_game(0, 3, 3)),
    ]
    backends = ["numpy"]
    try:
        import numba  # noqa: F401

        backends.insert(0, "numba")
    except ImportError:
        print("numba not available; timing the numpy fallback only")

    results = {}
    for backend in backends:
        kernels.set_backend(backend)
        if backend == "numba":
            time_run(build_kuhn(), 4)  # compile outside the timed region
        for name, game in games:
            results[(backend, name)] = time_run(game, args.iters)

    print(f"\n{args.iters} iterations per run")
    print(f"{'game':<14}{'numba':>10}{'numpy':>10}{'speedup':>9}")
    for name, game in games:
        nb = results.get(("numba", name))
        np_ = results[("numpy", name)]
        nb_s = f"{nb:.3f}s" if nb is not None else "-"
        speedup = f"{np_ / nb:.1f}x" if nb else "-"
        print(f"{name:<14}{nb_s:>10}{np_:>9.3f}s{speedup:>9}")


if __name__ == "__main__":
    main()
