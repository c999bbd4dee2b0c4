"""Phonon sidebands: Huang-Rhys factors and zero-temperature emission lineshapes.

The lineshape follows the generating-function route. With the spectral
density of electron-phonon coupling S(e) = sum_k S_k g(e - hbar w_k), its
Fourier transform S(t) gives G(t) = exp(S(t) - S(0)) exp(-gamma |t|), and
the transform of G back to energy is the normalized spectral function
A(E_ZPL - e) over phonon energies e. The emitted intensity is
L(E) ~ E^3 A(E).

Because exp(S(t)) multiplies the single-phonon smearing, an n-phonon line
comes out with Gaussian width sigma * sqrt(n); :func:`fc_oracle` builds the
same spectrum by explicit enumeration of occupation tuples, which is what
the tests compare against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln, voigt_profile
from scipy.stats import poisson

from . import _kernels
from .core import AtomicStructure, PhononModeSet, _check_compatible
from .errors import (
    InvalidGrid,
    NegativeFrequency,
    NegativeHR,
    NonPositiveZPL,
    NyquistViolation,
    SizeMismatch,
    TooManyModes,
    TruncationTooCoarse,
    UnalignedInput,
)
from .units import MEV_PER_EV, dq_for_hr, hr_factor

#: The damped correlation function must decay below this at the edge of the time window.
TIME_WINDOW_DECAY = 1e-7
#: Spectral-density grid step may not exceed this fraction of sigma.
MAX_STEP_PER_SIGMA = 0.5
#: Smallest retained Poisson mass per mode in the oracle.
ORACLE_RETAINED_MASS = 1.0 - 1e-8
ORACLE_MAX_MODES = 4
#: The output grid extends this many gamma above the ZPL (negative phonon energy).
LORENTZ_MARGIN = 2000.0
#: Upper bounds that keep a mistyped config from exhausting memory.
MAX_GRID_POINTS = 2_000_000
MAX_FFT_LENGTH = 1 << 23
#: The sideband window covers mean + this many standard deviations of the phonon energy.
SIDEBAND_WIDTHS = 12.0


@dataclass(frozen=True, eq=False)
class HRDecomposition:
    """Per-mode energies (meV), Huang-Rhys factors and displacements (amu^1/2 A)."""

    frequencies: np.ndarray
    partial: np.ndarray
    displacements: np.ndarray
    s_total: float
    zero_modes: tuple = field(default=())

    def rows(self):
        return [(k + 1, float(w), float(s)) for k, (w, s) in enumerate(zip(self.frequencies, self.partial))]


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """Density on a uniform grid. ``sigma`` is the Gaussian smearing used, if any."""

    grid: np.ndarray
    values: np.ndarray
    sigma: Optional[float] = None

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.shape[0] < 2:
            raise InvalidGrid("grid and values must be 1-D arrays of equal length >= 2")
        steps = np.diff(grid)
        if np.ptp(steps) > 1e-9 * abs(steps[0]) or steps[0] == 0:
            raise InvalidGrid("grid must be uniformly spaced")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def rows(self):
        return list(zip(self.grid.tolist(), self.values.tolist()))


@dataclass(frozen=True, eq=False)
class LineshapeResult:
    """Photon-energy grid (eV), normalized A (1/eV), peak-normalized L, ZPL (eV), DW and HR factors."""

    grid: np.ndarray
    a_norm: np.ndarray
    l_shape: np.ndarray
    e_zpl: float
    dw: float
    s_total: float

    def rows(self):
        return list(zip(self.grid.tolist(), self.a_norm.tolist(), self.l_shape.tolist()))


def mode_displacements(ground: AtomicStructure, excited: AtomicStructure, modes: PhononModeSet):
    """Projections dq_k = sum_a sqrt(m_a) (R_exc - R_gnd)_a . e_k,a in amu^1/2 Angstrom."""
    _check_compatible(ground, excited)
    if modes.n_atoms != ground.n_atoms:
        raise SizeMismatch(f"modes span {modes.n_atoms} atoms, structures have {ground.n_atoms}")
    shift = np.linalg.norm(excited.centroid() - ground.centroid())
    if shift > 1e-6:
        raise UnalignedInput(f"mass-weighted centroids differ by {shift:.3e} A; align the structures first")
    weighted = np.sqrt(ground.masses)[:, None] * (excited.positions - ground.positions)
    return modes.eigenvectors @ weighted.ravel()


def partial_hr_factors(displacements, frequencies) -> HRDecomposition:
    """S_k = omega_k dq_k^2 / (2 hbar); zero-energy modes get S_k = 0 and are listed in ``zero_modes``."""
    dq = np.asarray(displacements, dtype=float)
    w = np.asarray(frequencies, dtype=float)
    if dq.shape != w.shape or dq.ndim != 1:
        raise SizeMismatch(f"{dq.shape} displacements vs {w.shape} frequencies")
    if np.any(w < 0):
        raise NegativeFrequency("mode energies must be non-negative")
    s = hr_factor(w, dq)
    zero = tuple(int(i) for i in np.flatnonzero(w == 0))
    s[list(zero)] = 0.0
    return HRDecomposition(w.copy(), s, dq.copy(), float(math.fsum(s)), zero)


def hr_from_modes(frequencies, factors) -> HRDecomposition:
    """HR decomposition straight from (energy, S_k) pairs, for synthetic inputs."""
    w = np.asarray(frequencies, dtype=float)
    s = np.asarray(factors, dtype=float)
    if w.shape != s.shape:
        raise SizeMismatch("frequencies and factors differ in length")
    if np.any(s < 0):
        raise NegativeHR("Huang-Rhys factors must be non-negative")
    if np.any(w < 0):
        raise NegativeFrequency("mode energies must be non-negative")
    dq = np.where(w > 0, dq_for_hr(np.where(w > 0, w, 1.0), s), 0.0)
    zero = tuple(int(i) for i in np.flatnonzero(w == 0))
    s = s.copy()
    s[list(zero)] = 0.0
    return HRDecomposition(w.copy(), s, dq, float(math.fsum(s)), zero)


def debye_waller(s_total: float) -> float:
    """Zero-temperature fraction of emission into the ZPL, exp(-S)."""
    if not s_total >= 0:
        raise NegativeHR(f"Huang-Rhys factor must be non-negative, got {s_total}")
    return math.exp(-s_total)


def _grid_size(grid_max, grid_step):
    if not (grid_step > 0 and grid_max > 0 and math.isfinite(grid_max) and math.isfinite(grid_step)):
        raise InvalidGrid(f"need grid_max > 0 and grid_step > 0, got {grid_max}, {grid_step}")
    points = grid_max / grid_step
    if points > MAX_GRID_POINTS:
        raise InvalidGrid(f"grid_max / grid_step = {points:.3g} exceeds {MAX_GRID_POINTS} points")
    n = int(math.floor(points + 1e-9)) + 1
    if n < 2:
        raise InvalidGrid("grid_max must be at least one grid step")
    return n


def spectral_density(hr: HRDecomposition, grid_max: float, grid_step: float, sigma: float) -> SpectralFunction:
    """S(e) = sum_k S_k N(e; hbar w_k, sigma) on [0, grid_max] meV, in 1/meV."""
    n = _grid_size(grid_max, grid_step)
    if not sigma > 0:
        raise InvalidGrid(f"sigma must be positive, got {sigma}")
    active = hr.partial > 0
    centers = hr.frequencies[active]
    values = _kernels.gaussian_sum(0.0, grid_step, n, centers, hr.partial[active], np.full(centers.shape, float(sigma)))
    return SpectralFunction(grid_step * np.arange(n), values, float(sigma))


def max_step_for_gamma(gamma_zpl: float) -> float:
    """Largest grid step (meV) for which exp(-gamma |t|) decays within the FFT time window."""
    return math.pi * gamma_zpl / -math.log(TIME_WINDOW_DECAY)


def fft_length(n_grid: int, n_required: int = 0) -> int:
    """Next power of two at or above both eight times the grid length and ``n_required``."""
    return 1 << int(math.ceil(math.log2(max(8 * n_grid, n_required, 2))))


def sideband_extent(sd: SpectralFunction) -> float:
    """Phonon energy (meV) below which essentially all sideband weight lies.

    For a zero-temperature spectrum the emitted phonon energy has mean
    int e S(e) de and variance int e^2 S(e) de.
    """
    w = sd.values * sd.step
    mean = float(np.sum(sd.grid * w))
    var = float(np.sum(sd.grid**2 * w))
    return mean + SIDEBAND_WIDTHS * math.sqrt(var) + float(sd.grid[-1])


def lineshape(sd: SpectralFunction, e_zpl: float, gamma_zpl: float, s_total: float) -> LineshapeResult:
    """Generating-function emission spectrum.

    ``sd`` must start at zero phonon energy (as produced by
    :func:`spectral_density`). The time window of the FFT is 2 pi / step,
    so the Lorentzian ZPL damping requires step <= pi gamma / ln(1e7);
    coarser grids raise :class:`NyquistViolation`. The output grid runs
    from ``LORENTZ_MARGIN * gamma`` above the ZPL down to zero photon
    energy in steps of ``sd.step``; A is normalized to unit area on it.
    """
    if not (e_zpl > 0 and math.isfinite(e_zpl)):
        raise NonPositiveZPL(f"ZPL energy must be positive, got {e_zpl}")
    if not gamma_zpl > 0:
        raise InvalidGrid(f"ZPL broadening must be positive, got {gamma_zpl}")
    dw = debye_waller(s_total)
    h = sd.step
    if abs(sd.grid[0]) > 1e-12 or h <= 0:
        raise InvalidGrid("spectral density must be on an ascending grid starting at 0 meV")
    if h > max_step_for_gamma(gamma_zpl):
        raise NyquistViolation(
            f"grid step {h} meV too coarse for gamma = {gamma_zpl} meV; "
            f"need <= {max_step_for_gamma(gamma_zpl):.4g} meV"
        )
    if sd.sigma is not None and h > MAX_STEP_PER_SIGMA * sd.sigma:
        raise NyquistViolation(f"grid step {h} meV under-resolves sigma = {sd.sigma} meV")

    n = sd.grid.shape[0]
    span = (LORENTZ_MARGIN * gamma_zpl + e_zpl * MEV_PER_EV + sideband_extent(sd)) / h
    if not span < MAX_FFT_LENGTH:
        raise InvalidGrid(f"spectrum needs {span:.3g} grid points, more than {MAX_FFT_LENGTH}; "
                          "increase grid_step or lower e_zpl")
    n_neg = int(math.ceil(LORENTZ_MARGIN * gamma_zpl / h))
    n_pos = int(math.ceil(e_zpl * MEV_PER_EV / h))  # phonon energies below e_zpl: photon > 0
    n_ext = int(math.ceil(sideband_extent(sd) / h)) + 1
    m = fft_length(n, n_neg + n_pos + n_ext)
    padded = np.zeros(m)
    padded[:n] = sd.values
    s_t = np.fft.fft(padded) * h
    # Lorentzian damping as the transform of the sampled kernel, restricted to the
    # offsets the output window can see: the circular convolution is then exactly
    # linear and no periodic images of the heavy tails fold back.
    offsets = np.arange(-(n_neg + n_ext), n_pos) * h
    kernel = np.zeros(m)
    kernel[np.arange(-(n_neg + n_ext), n_pos) % m] = gamma_zpl / np.pi / (offsets**2 + gamma_zpl**2)
    g_t = np.exp(s_t - s_t[0]) * np.fft.fft(kernel) * h
    a = np.fft.ifft(g_t).real / h

    # phonon energies j*h for j in [-n_neg, n_pos)
    j = np.arange(-n_neg, n_pos)
    phonon = j * h
    a = a[j % m]
    photon = e_zpl - phonon / MEV_PER_EV
    keep = photon > 0
    photon = photon[keep][::-1]
    a = a[keep][::-1] * MEV_PER_EV
    a = a / np.trapezoid(a, photon)
    l_raw = photon**3 * a
    peak = np.max(l_raw)
    if not peak > 0:
        raise NonPositiveZPL("emission vanishes on the photon-energy grid")
    return LineshapeResult(photon, a, l_raw / peak, float(e_zpl), dw, float(s_total))


def _voigt_sum(x, centers, weights, sigmas, gamma, chunk=2048):
    out = np.zeros_like(x)
    for lo in range(0, centers.shape[0], chunk):
        c = centers[lo:lo + chunk]
        dens = voigt_profile(x[:, None] - c[None, :], sigmas[lo:lo + chunk][None, :], gamma)
        out += dens @ weights[lo:lo + chunk]
    return out


def fc_sticks(modes, max_quanta: int, tail_mass: float = 1e-11):
    """Occupation-tuple sticks (phonon energy meV, weight, total quanta) for at most four modes.

    Weights are prod_k exp(-S_k) S_k^m_k / m_k! with m_k <= ``max_quanta``.
    The lightest sticks are dropped as long as their summed weight stays
    below ``tail_mass``.
    """
    modes = [(float(w), float(s)) for w, s in modes]
    if len(modes) > ORACLE_MAX_MODES:
        raise TooManyModes(f"oracle handles at most {ORACLE_MAX_MODES} modes, got {len(modes)}")
    if not modes:
        modes = [(1.0, 0.0)]
    freqs = np.array([w for w, _ in modes])
    factors = np.array([s for _, s in modes])
    if np.any(factors < 0) or not np.all(np.isfinite(factors)):
        raise NegativeHR("Huang-Rhys factors must be finite and non-negative")
    if np.any(freqs < 0) or not np.all(np.isfinite(freqs)):
        raise NegativeFrequency("mode energies must be finite and non-negative")
    if max_quanta < 0:
        raise TruncationTooCoarse("max_quanta must be non-negative")
    for _, s in modes:
        if poisson.cdf(max_quanta, s) < ORACLE_RETAINED_MASS:
            raise TruncationTooCoarse(f"max_quanta={max_quanta} keeps less than 1-1e-8 of mode S={s}")

    mq = np.arange(max_quanta + 1)
    log_p = np.full((len(modes), mq.shape[0]), -np.inf)
    for k, s in enumerate(factors):
        if s > 0:
            log_p[k] = mq * math.log(s) - s - gammaln(mq + 1)
        else:
            log_p[k, 0] = 0.0
    energy, weight, quanta = _kernels.fc_sticks(freqs, log_p, 1e-300)
    order = np.argsort(weight, kind="stable")
    dropped = np.cumsum(weight[order]) <= tail_mass
    keep = np.ones(weight.shape[0], dtype=bool)
    keep[order[dropped]] = False
    return energy[keep], weight[keep], quanta[keep]


def fc_oracle(modes, e_zpl: float, grid, sigma: float, max_quanta: int, gamma: float = 0.0,
              multiphonon_scaling: bool = True, method: str = "quadrature",
              tail_mass: float = 1e-11, window=None) -> SpectralFunction:
    """Brute-force Franck-Condon emission spectrum for at most four modes.

    Every occupation tuple m contributes prod_k exp(-S_k) S_k^m_k / m_k!
    at E_ZPL - sum_k m_k hbar w_k, as a Gaussian of width
    ``sigma * sqrt(sum m_k)`` (plain ``sigma`` without
    ``multiphonon_scaling``) convolved with a Lorentzian of half width
    ``gamma`` (meV). ``grid`` holds photon energies in eV; the result is in
    1/eV, normalized to the retained Poisson mass.

    ``method="quadrature"`` sums the Gaussians on a fine auxiliary grid and
    applies the Lorentzian by trapezoid quadrature in energy;
    ``method="voigt"`` evaluates one Voigt profile per stick. Both agree to
    round-off; the first is much faster for many sticks.

    With ``window=(e_lo, e_hi)`` (photon eV) the spectrum is instead
    normalized to unit weight inside that window, which is how a spectrum
    normalized on a finite grid should be compared.
    """
    if not (e_zpl > 0):
        raise NonPositiveZPL(f"ZPL energy must be positive, got {e_zpl}")
    if not sigma > 0 or gamma < 0:
        raise InvalidGrid("need sigma > 0 and gamma >= 0")
    if method not in ("quadrature", "voigt"):
        raise ValueError(f"unknown method {method!r}")
    energy, weight, quanta = fc_sticks(modes, max_quanta, tail_mass)
    widths = sigma * (np.sqrt(quanta) if multiphonon_scaling else np.ones_like(energy))
    if gamma == 0 and np.any(widths == 0):
        raise InvalidGrid("zero-width line: give gamma > 0 or disable multiphonon_scaling")

    grid = np.asarray(grid, dtype=float)
    x = (e_zpl - grid) * MEV_PER_EV
    mass = math.fsum(weight)
    if window is not None:
        mass = _window_mass(energy, weight, widths, gamma, (e_zpl - window[1]) * MEV_PER_EV,
                            (e_zpl - window[0]) * MEV_PER_EV)
    if gamma > 0 and method == "voigt":
        dens = _voigt_sum(x, energy, weight, widths, gamma)
    elif gamma > 0:
        sharp = widths == 0
        dens = np.zeros_like(x)
        if np.any(sharp):
            dens += weight[sharp] @ (gamma / np.pi / ((x[None, :] - energy[sharp, None]) ** 2 + gamma**2))
        if np.any(~sharp):
            e, w, wd = energy[~sharp], weight[~sharp], widths[~sharp]
            step = min(gamma, wd.min()) / 4.0
            lo = e.min() - _kernels.CUTOFF_WIDTHS * wd.max()
            n = int(math.ceil((e.max() + _kernels.CUTOFF_WIDTHS * wd.max() - lo) / step)) + 1
            g = _kernels.gaussian_sum(lo, step, n, e, w, wd)
            dens += _kernels.lorentz_convolve(x, lo, step, g, gamma)
    else:
        dens = _voigt_sum(x, energy, weight, widths, 0.0)
    dens = dens * MEV_PER_EV / mass
    return SpectralFunction(grid, dens)


def _window_mass(energy, weight, widths, gamma, lo, hi):
    """Weight of the broadened sticks inside [lo, hi] (phonon meV)."""
    from scipy.special import ndtr

    if gamma == 0:
        return float(weight @ (ndtr((hi - energy) / widths) - ndtr((lo - energy) / widths)))
    sharp = widths == 0
    total = 0.0
    if np.any(sharp):
        total += float(weight[sharp] @ (np.arctan((hi - energy[sharp]) / gamma)
                                         - np.arctan((lo - energy[sharp]) / gamma))) / math.pi
    if np.any(~sharp):
        e, w, wd = energy[~sharp], weight[~sharp], widths[~sharp]
        step = min(gamma, wd.min()) / 4.0
        start = e.min() - _kernels.CUTOFF_WIDTHS * wd.max()
        n = int(math.ceil((e.max() + _kernels.CUTOFF_WIDTHS * wd.max() - start) / step)) + 1
        g = _kernels.gaussian_sum(start, step, n, e, w, wd)
        y = start + step * np.arange(n)
        total += float(step * g @ (np.arctan((hi - y) / gamma) - np.arctan((lo - y) / gamma))) / math.pi
    return total


def peak_weights(result: LineshapeResult, phonon_energy: float, n_peaks: int):
    """Integrated A over windows of +-phonon_energy/2 around E_ZPL - m * phonon_energy.

    The m = 0 window is open towards high photon energies.
    """
    phonon = (result.e_zpl - result.grid) * MEV_PER_EV
    step = float(result.grid[1] - result.grid[0])
    out = []
    for m in range(n_peaks):
        lo = -np.inf if m == 0 else (m - 0.5) * phonon_energy
        hi = (m + 0.5) * phonon_energy
        mask = (phonon >= lo) & (phonon < hi)
        out.append(float(np.sum(result.a_norm[mask]) * step))
    return out
