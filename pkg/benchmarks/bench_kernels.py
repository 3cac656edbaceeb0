"""Time the compiled rank-1 RLS sweep against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--hidden 50 100 200 400] [--samples 2000] [--labels 6]

Prints one row per hidden size with seconds per sweep for each backend,
the speed-up, and the largest difference between the two resulting betas.
"""

import argparse
import timeit

import numpy as np

from proemlc import _fallback

try:
    from proemlc import _kernels
except ImportError:
    _kernels = None


def make_problem(hidden, samples, labels, seed=0):
    rng = np.random.default_rng(seed)
    H0 = rng.uniform(-1, 1, size=(2 * hidden, hidden))
    m_inv = np.linalg.inv(H0.T @ H0)
    m_inv = 0.5 * (m_inv + m_inv.T)
    beta = np.ascontiguousarray(m_inv @ H0.T @ rng.choice([-1.0, 1.0], size=(2 * hidden, labels)))
    H = rng.uniform(-1, 1, size=(samples, hidden))
    Y = rng.choice([-1.0, 1.0], size=(samples, labels))
    return m_inv, beta, H, Y


def run(sweep, problem):
    m_inv, beta, H, Y = (a.copy() for a in problem)
    sweep(m_inv, beta, H, Y)
    return beta


def time_sweep(sweep, problem, repeat):
    return min(timeit.repeat(lambda: run(sweep, problem), number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--hidden", type=int, nargs="+", default=[50, 100, 200, 400])
    parser.add_argument("--samples", type=int, default=2000)
    parser.add_argument("--labels", type=int, default=6)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    if _kernels is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'hidden':>6} {'python s':>10} {'cython s':>10} {'speed-up':>9} {'max |dbeta|':>12}")
    for hidden in args.hidden:
        problem = make_problem(hidden, args.samples, args.labels)
        t_py = time_sweep(_fallback.rank1_sweep, problem, args.repeat)
        if _kernels is None:
            print(f"{hidden:>6} {t_py:>10.4f} {'-':>10} {'-':>9} {'-':>12}")
            continue
        t_cy = time_sweep(_kernels.rank1_sweep, problem, args.repeat)
        diff = np.abs(run(_fallback.rank1_sweep, problem) - run(_kernels.rank1_sweep, problem)).max()
        print(f"{hidden:>6} {t_py:>10.4f} {t_cy:>10.4f} {t_py / t_cy:>8.1f}x {diff:>12.2e}")


if __name__ == "__main__":
    main()
