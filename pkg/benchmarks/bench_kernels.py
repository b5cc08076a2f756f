"""Wall-clock comparison of the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once untimed (JIT compile / cache load), then timed as
the best of ``--repeat`` runs.  Set NUMBA_NUM_THREADS / MGMODES_THREADS to
control the numba worker pool.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from mgmodes import _accel, kernels
from mgmodes.model import ModeIndex, RiskNeutralParams
from mgmodes.operator import GridSpec, build_generator, split_coefficients


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    seed = np.uint64(1)
    path_args = (100.0, 0.04, 1.0, 1.0, 0.05, 0.0, 0.3, -0.5, 0.01, 100, 20_000, seed, True)
    grid = GridSpec.default_for(100, 100, 0.04, n_s=401, n_v=101, n_t=1)
    c = split_coefficients(build_generator(RiskNeutralParams(0.05, 0.0, 0.3, -0.5, ModeIndex(1, 1)), grid))
    u = np.random.default_rng(0).random((grid.n_s, grid.n_v))
    split_args = (u, c.s_lo, c.s_di, c.s_up, c.v_lo, c.v_di, c.v_up, c.v_ex, c.mix)
    sub = -np.ones((399, 101))
    dia = 3 * np.ones((399, 101))
    rhs = np.random.default_rng(1).random((399, 101))
    cp, inv = kernels.thomas_factor_cols_np(sub, dia, sub)
    return {
        "noise 20000x100": ((20_000, 100, 0.01, -0.5, seed), kernels.noise_nb, kernels.noise_np),
        "terminal 20000x100": (path_args, kernels.terminal_nb, kernels.terminal_np),
        "apply_split 401x101": (split_args, kernels.apply_split_nb, kernels.apply_split_np),
        "thomas_solve_cols 399x101": ((sub, cp, inv, rhs), kernels.thomas_solve_cols_nb, kernels.thomas_solve_cols_np),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"numba threads: {_accel.numba.get_num_threads()}")
    print(f"{'kernel':<28}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, (a, nb, np_) in cases().items():
        t_nb = best_of(lambda: nb(*a), args.repeat)
        t_np = best_of(lambda: np_(*a), args.repeat)
        print(f"{name:<28}{1e3 * t_nb:>12.2f}{1e3 * t_np:>12.2f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
