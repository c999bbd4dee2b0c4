"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``DEFECT_PHOTONICS_BACKEND=numpy`` to force the fallback; otherwise
numba is used whenever it imports. Both paths are exposed under explicit
names so tests and the benchmark can compare them directly.
"""

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Gaussians are dropped beyond this many widths; exp(-72) is far below double precision.
CUTOFF_WIDTHS = 12.0


def _select_backend():
    requested = os.environ.get("DEFECT_PHOTONICS_BACKEND", "").strip().lower()
    if requested not in ("", "numba", "numpy"):
        raise RuntimeError(f"DEFECT_PHOTONICS_BACKEND must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numpy" or numba is None:
        return "numpy"
    return "numba"


BACKEND = _select_backend()


# --------------------------------------------------------------- gaussian sum


def gaussian_sum_numpy(start, step, n, centers, weights, widths):
    """sum_k weights[k] * N(x; centers[k], widths[k]) on the grid start + step * arange(n)."""
    out = np.zeros(n)
    # sticks sharing a width touch windows of equal length: evaluate each window as a band
    for w in np.unique(widths):
        sel = widths == w
        c, amp = centers[sel], weights[sel] / (w * _SQRT_2PI)
        first = np.floor((c - CUTOFF_WIDTHS * w - start) / step).astype(np.int64)
        band = np.arange(int(math.ceil(2 * CUTOFF_WIDTHS * w / step)) + 2)
        chunk = max(1, 4_000_000 // band.size)
        for lo in range(0, c.size, chunk):
            j = first[lo:lo + chunk, None] + band[None, :]
            z = (start + step * j - c[lo:lo + chunk, None]) / w
            keep = (j >= 0) & (j < n) & (np.abs(z) <= CUTOFF_WIDTHS)
            vals = amp[lo:lo + chunk, None] * np.exp(-0.5 * z * z)
            out += np.bincount(j[keep], weights=vals[keep], minlength=n)[:n]
    return out


def _gaussian_sum_loop(start, step, n, centers, weights, widths):
    out = np.zeros(n)
    for k in range(centers.shape[0]):
        c = centers[k]
        w = widths[k]
        amp = weights[k] / (w * _SQRT_2PI)
        lo = max(0, int(math.floor((c - CUTOFF_WIDTHS * w - start) / step)))
        hi = min(n, int(math.ceil((c + CUTOFF_WIDTHS * w - start) / step)) + 1)
        for j in range(lo, hi):
            z = (start + step * j - c) / w
            if abs(z) <= CUTOFF_WIDTHS:
                out[j] += amp * math.exp(-0.5 * z * z)
    return out


# ---------------------------------------------------------- occupation sticks


def fc_sticks_numpy(freqs, log_poisson, prune):
    """Enumerate occupation tuples; keep those with product weight >= prune.

    ``log_poisson[k, m]`` is the log of the Poisson weight of m quanta in
    mode k (-inf beyond that mode's cutoff). Returns (energy, weight,
    total quanta) arrays in lexicographic tuple order, last mode fastest.
    """
    n_modes, width = log_poisson.shape
    idx = np.indices((width,) * n_modes).reshape(n_modes, -1)
    logw = np.zeros(idx.shape[1])
    energy = np.zeros(idx.shape[1])
    for k in range(n_modes):
        logw = logw + log_poisson[k, idx[k]]
        energy = energy + idx[k] * freqs[k]
    weight = np.exp(logw)
    keep = weight >= prune
    return energy[keep], weight[keep], idx.sum(axis=0)[keep]


def _fc_sticks_loop(freqs, log_poisson, prune):
    n_modes, width = log_poisson.shape
    total = width**n_modes
    energy = np.empty(total)
    weight = np.empty(total)
    quanta = np.empty(total, dtype=np.int64)
    m = np.zeros(n_modes, dtype=np.int64)
    count = 0
    for _ in range(total):
        logw = 0.0
        e = 0.0
        nq = 0
        for k in range(n_modes):
            logw += log_poisson[k, m[k]]
            e += m[k] * freqs[k]
            nq += m[k]
        w = math.exp(logw)
        if w >= prune:
            energy[count] = e
            weight[count] = w
            quanta[count] = nq
            count += 1
        k = n_modes - 1
        while k >= 0:
            m[k] += 1
            if m[k] < width:
                break
            m[k] = 0
            k -= 1
    return energy[:count], weight[:count], quanta[:count]


# ------------------------------------------------------ lorentzian quadrature


def lorentz_convolve_numpy(x, y_start, y_step, g, gamma):
    """Trapezoid-rule (g * L_gamma)(x) for g sampled at y_start + y_step * i and vanishing at both ends."""
    y = y_start + y_step * np.arange(g.shape[0])
    out = np.empty(x.shape[0])
    chunk = max(1, 2_000_000 // max(g.shape[0], 1))
    for lo in range(0, x.shape[0], chunk):
        d = x[lo:lo + chunk, None] - y[None, :]
        out[lo:lo + chunk] = (gamma / np.pi / (d * d + gamma * gamma)) @ g
    return out * y_step


def _lorentz_convolve_loop(x, y_start, y_step, g, gamma):
    out = np.empty(x.shape[0])
    c = gamma / math.pi
    g2 = gamma * gamma
    for j in range(x.shape[0]):
        acc = 0.0
        for i in range(g.shape[0]):
            d = x[j] - (y_start + y_step * i)
            acc += g[i] / (d * d + g2)
        out[j] = acc * c * y_step
    return out


if numba is not None:
    lorentz_convolve_numba = numba.njit(cache=True)(_lorentz_convolve_loop)
    gaussian_sum_numba = numba.njit(cache=True)(_gaussian_sum_loop)
    fc_sticks_numba = numba.njit(cache=True)(_fc_sticks_loop)
else:  # pragma: no cover
    lorentz_convolve_numba = None
    gaussian_sum_numba = None
    fc_sticks_numba = None


def gaussian_sum(start, step, n, centers, weights, widths):
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    widths = np.ascontiguousarray(widths, dtype=np.float64)
    if BACKEND == "numba":
        return gaussian_sum_numba(float(start), float(step), int(n), centers, weights, widths)
    return gaussian_sum_numpy(float(start), float(step), int(n), centers, weights, widths)


def fc_sticks(freqs, log_poisson, prune):
    freqs = np.ascontiguousarray(freqs, dtype=np.float64)
    log_poisson = np.ascontiguousarray(log_poisson, dtype=np.float64)
    if BACKEND == "numba":
        return fc_sticks_numba(freqs, log_poisson, float(prune))
    return fc_sticks_numpy(freqs, log_poisson, float(prune))


def lorentz_convolve(x, y_start, y_step, g, gamma):
    x = np.ascontiguousarray(x, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    if BACKEND == "numba":
        return lorentz_convolve_numba(x, float(y_start), float(y_step), g, float(gamma))
    return lorentz_convolve_numpy(x, float(y_start), float(y_step), g, float(gamma))
