"""Compare the compiled and pure-Python kernels on a full-size instance.

    python benchmarks/bench_glauber.py --steps 200000
"""
import argparse
import math
import time

import numpy as np

from bincs import _kernels, channel, glauber, sensing


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=2 ** 14)
    ap.add_argument("--n", type=int, default=2 ** 11)
    ap.add_argument("--nu", type=int, default=16)
    ap.add_argument("--k", type=int, default=100)
    ap.add_argument("--ebn0", type=float, default=2.0)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    A = sensing.sample_gallager(sensing.LdpcParams.from_sizes(args.M, args.n, args.nu), seed=0)
    x = channel.sample_bernoulli_signal(args.M, args.k / args.M, seed=1)
    sigma = channel.ebn0_to_sigma(args.ebn0, A.column_energy(), math.log2(args.M))
    y = A.matvec(x) + sigma * np.random.default_rng(2).standard_normal(args.n)
    lam = glauber.prior_log_odds(args.k / args.M)
    rng = np.random.default_rng(3)
    coords = rng.integers(0, args.M, args.steps)
    u = rng.random(args.steps)
    v = rng.standard_normal(args.M)
    out = np.empty(args.n)

    print(f"M={args.M} n={args.n} nu={args.nu} steps={args.steps} (best of {args.repeat})")
    print(f"{'backend':8} {'Msteps/s':>10} {'A@x ms':>8}")
    rates = {}
    for name, (chunk, gather) in _kernels.BACKENDS.items():
        def sweep():
            st = glauber.init_state(A, y)
            chunk(st.x, st.residual, A.var_adj, coords, u, lam, 1.0, 1.0 / sigma ** 2, st.rss, st.weight)

        t = best_of(sweep, args.repeat)
        g = best_of(lambda: gather(v, A.factor_adj, out), args.repeat * 10)
        rates[name] = args.steps / t
        print(f"{name:8} {rates[name] / 1e6:10.3f} {1e3 * g:8.3f}")
    if len(rates) == 2:
        print(f"speedup {rates['cython'] / rates['python']:.1f}x")
    else:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
