"""Compare the numba and numpy paths of the mass-distribution kernels.

Both paths run the same number of BDF2 steps from the same truncated datum.
The script reports the time per step and the largest difference between
the two results in the normalized variable ``M / (2 sigma_d r^(d-2))``.
The numba timing excludes the first (compiling) call.

    python3 benchmarks/bench_kernels.py --sizes 512 2048 8192 --steps 200
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from kslab import _kernels as K
from kslab._backend import NUMBA_AVAILABLE
from kslab.model import ModelParams, RadialGrid, TruncationSpec, truncated_field


def run(r, m0, params, steps, dt, use_numba, repeat):
    best = np.inf
    for _ in range(repeat):
        m = m0.copy()
        prev = m0.copy()
        t0 = time.perf_counter()
        status, done = K.advance(r, m, prev, dt, 0.0, steps, d=params.d, sigma=params.sigma_d,
                                 m_outer=float(m0[-1]), use_numba=use_numba)
        best = min(best, time.perf_counter() - t0)
        if status != K.STATUS_OK or done != steps:
            raise RuntimeError(f"kernel stopped early: status={status}, steps={done}")
    return m, best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[512, 2048, 8192])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy path can run")
        return 1

    params = ModelParams(3, 0.5)
    trunc = TruncationSpec.build(params, 1.0)
    print(f"{'N':>7} {'numpy ms/step':>14} {'numba ms/step':>14} {'speedup':>8} {'max norm diff':>14}")
    for n in args.sizes:
        grid = RadialGrid.geometric(40.0, n)
        r = np.ascontiguousarray(grid.nodes)
        m0 = np.array(truncated_field(params, trunc, grid).values)
        run(r, m0, params, 2, args.dt, True, 1)  # compile
        m_nb, t_nb = run(r, m0, params, args.steps, args.dt, True, args.repeat)
        m_np, t_np = run(r, m0, params, args.steps, args.dt, False, args.repeat)
        scale = 2.0 * params.sigma_d * r[1:] ** (params.d - 2)
        diff = float(np.max(np.abs(m_nb - m_np)[1:] / scale))
        print(f"{n:>7} {1e3 * t_np / args.steps:>14.4f} {1e3 * t_nb / args.steps:>14.4f} "
              f"{t_np / t_nb:>8.1f} {diff:>14.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
