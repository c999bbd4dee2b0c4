"""Compare the numba and pure-numpy kernels on oracle-sized workloads.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-N wall time for each backend and the largest relative
difference between their outputs. The first numba call (compilation, or
loading the on-disk cache) is excluded.
"""

import argparse
import math
import time

import numpy as np

from defect_photonics import _kernels


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def _cases(rng):
    # Gaussian sum: the oracle's fine grid for ~3000 sticks
    centers = rng.uniform(0, 1500, 3000)
    weights = rng.uniform(0, 1e-3, 3000)
    widths = 3.0 * np.sqrt(rng.integers(1, 40, 3000))
    gs = ((-100.0, 0.25, 7200, centers, weights, widths),)

    # occupation tuples: four modes with up to 16 quanta each
    freqs = rng.uniform(20, 160, 4)
    s = rng.uniform(0.2, 2.0, 4)
    m = np.arange(17)
    log_p = np.array([m * math.log(sk) - sk - np.array([math.lgamma(k + 1) for k in m]) for sk in s])
    fc = ((freqs, log_p, 1e-300),)

    # Lorentzian quadrature: 20000 output points against 4000 samples
    x = np.linspace(-200, 1800, 20000)
    g = np.exp(-0.5 * ((np.arange(4000) * 0.25 - 500) / 40) ** 2)
    lc = ((x, 0.0, 0.25, g, 1.0),)
    return {
        "gaussian_sum": (_kernels.gaussian_sum_numpy, _kernels.gaussian_sum_numba, gs),
        "fc_sticks": (_kernels.fc_sticks_numpy, _kernels.fc_sticks_numba, fc),
        "lorentz_convolve": (_kernels.lorentz_convolve_numpy, _kernels.lorentz_convolve_numba, lc),
    }


def _max_rel(a, b):
    if isinstance(a, tuple):
        return max(_max_rel(u, v) for u, v in zip(a, b))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(np.max(np.abs(a)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if _kernels.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18} {'numpy [s]':>11} {'numba [s]':>11} {'speed-up':>9} {'max rel diff':>13}")
    for name, (np_fn, nb_fn, (case,)) in _cases(rng).items():
        nb_fn(*case)  # compile or load from cache
        t_np, out_np = _best(lambda: np_fn(*case), args.repeat)
        t_nb, out_nb = _best(lambda: nb_fn(*case), args.repeat)
        print(f"{name:<18} {t_np:11.4f} {t_nb:11.4f} {t_np / t_nb:9.1f} {_max_rel(out_np, out_nb):13.2e}")


if __name__ == "__main__":
    main()
