"""Two-sheet E x e adiabatic potential surface with linear and quadratic coupling.

The surface lives on a dimensionless plane (rho, phi), or equivalently
x = rho cos(phi), y = rho sin(phi):

    E(rho, phi) = K rho^2 / 2 -/+ rho * sqrt(F^2 + G^2 rho^2 + 2 F G rho cos 3 phi)

with K the effective-mode force constant (equal to hbar*omega_eff in this
normalization), F the linear and G the quadratic coupling, all in meV.
For G > 0 the lower sheet has minima at phi = 0, 2pi/3, 4pi/3 and saddles
half-way between. Since rho^3 cos 3phi = x^3 - 3 x y^2, the square-root
term equals sqrt(W) with the polynomial

    W = F^2 rho^2 + G^2 rho^4 + 2 F G (x^3 - 3 x y^2),

which is what the gradient uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InfeasibleFit, InfeasibleModel, NegativeRho
from .units import HBAR2_MEV_AMU_A2

LOWER = "lower"
UPPER = "upper"


@dataclass(frozen=True)
class JTModel:
    k_force: float
    f_lin: float
    g_quad: float

    def __post_init__(self):
        k, f, g = self.k_force, self.f_lin, self.g_quad
        if not all(math.isfinite(v) for v in (k, f, g)):
            raise InfeasibleModel("model parameters must be finite")
        if not k > 0:
            raise InfeasibleModel(f"force constant must be positive, got {k}")
        if f < 0 or g < 0:
            raise InfeasibleModel("couplings follow the f_lin >= 0, g_quad >= 0 convention")
        if not k - 2.0 * abs(g) > 0:
            raise InfeasibleModel(f"K - 2|G| = {k - 2 * abs(g)} <= 0: lower sheet unbounded")


@dataclass(frozen=True)
class ScanCurve:
    abscissa: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        x = np.array(self.abscissa, dtype=float)
        e = np.array(self.energies, dtype=float)
        if x.shape != e.shape or x.ndim != 1:
            raise ValueError("abscissa and energies must be 1-D arrays of equal length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("abscissa must be strictly increasing")
        if not np.all(np.isfinite(e)):
            raise ValueError("scan energies must be finite")
        x.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "abscissa", x)
        object.__setattr__(self, "energies", e)

    def rows(self):
        return list(zip(self.abscissa.tolist(), self.energies.tolist()))


def _sign(sheet):
    if sheet == LOWER:
        return -1.0
    if sheet == UPPER:
        return 1.0
    raise ValueError(f"sheet must be 'lower' or 'upper', got {sheet!r}")


def apes_energy(model: JTModel, rho, phi, sheet=LOWER):
    """Energy (meV) of one sheet at polar coordinates; broadcasts over arrays."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise NegativeRho("rho must be non-negative")
    f, g = model.f_lin, model.g_quad
    rad = f * f + g * g * rho * rho + 2.0 * f * g * rho * np.cos(3.0 * np.asarray(phi))
    out = 0.5 * model.k_force * rho**2 + _sign(sheet) * rho * np.sqrt(np.maximum(rad, 0.0))
    return out if out.ndim else float(out)


def apes_energy_xy(model: JTModel, x, y, sheet=LOWER):
    """Energy (meV) at Cartesian plane coordinates, via the polynomial form of the root."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f, g = model.f_lin, model.g_quad
    r2 = x * x + y * y
    w = f * f * r2 + g * g * r2 * r2 + 2.0 * f * g * (x**3 - 3.0 * x * y * y)
    out = 0.5 * model.k_force * r2 + _sign(sheet) * np.sqrt(np.maximum(w, 0.0))
    return out if out.ndim else float(out)


def apes_gradient(model: JTModel, x, y, sheet=LOWER):
    """Analytic (dE/dx, dE/dy) in meV per unit coordinate.

    Undefined where the sheets touch (rho = 0, and rho = F/G at phi = pi/3
    mod 2pi/3); NaN is returned there.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    f, g, k = model.f_lin, model.g_quad, model.k_force
    r2 = x * x + y * y
    w = f * f * r2 + g * g * r2 * r2 + 2.0 * f * g * (x**3 - 3.0 * x * y * y)
    dw_dx = 2.0 * f * f * x + 4.0 * g * g * r2 * x + 6.0 * f * g * (x * x - y * y)
    dw_dy = 2.0 * f * f * y + 4.0 * g * g * r2 * y - 12.0 * f * g * x * y
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(w > 0, np.sqrt(np.maximum(w, 0.0)), np.nan)
        s = _sign(sheet)
        gx = k * x + s * dw_dx / (2.0 * root)
        gy = k * y + s * dw_dy / (2.0 * root)
    return gx, gy


def fit_from_delta_barrier(delta: float, barrier: float, k_force: float) -> JTModel:
    """Couplings reproducing the stabilization energy and the inter-minimum barrier.

    Minima sit at -F^2 / (2(K - 2G)) and saddles at -F^2 / (2(K + 2G)), so

        G = K barrier / (2 (2 delta - barrier)),   F = sqrt(2 delta (K - 2G)).
    """
    if not all(math.isfinite(v) for v in (delta, barrier, k_force)):
        raise InfeasibleFit("delta, barrier and k_force must be finite")
    if not k_force > 0:
        raise InfeasibleFit(f"k_force must be positive, got {k_force}")
    if not (delta > barrier >= 0):
        raise InfeasibleFit(f"need delta > barrier >= 0, got delta={delta}, barrier={barrier}")
    g = k_force * barrier / (2.0 * (2.0 * delta - barrier))
    if not k_force - 2.0 * g > 0:
        raise InfeasibleFit("fitted quadratic coupling leaves K - 2G <= 0")
    f = math.sqrt(2.0 * delta * (k_force - 2.0 * g))
    return JTModel(k_force, f, g)


@dataclass(frozen=True)
class Extremum:
    rho: float
    phi: float  # NaN when the extremum is a ring (no preferred angle)
    energy: float
    kind: str

    @property
    def xy(self):
        if math.isnan(self.phi):
            return (self.rho, 0.0)
        return (self.rho * math.cos(self.phi), self.rho * math.sin(self.phi))


def minimum_radius(model: JTModel) -> float:
    return model.f_lin / (model.k_force - 2.0 * model.g_quad)


def saddle_radius(model: JTModel) -> float:
    return model.f_lin / (model.k_force + 2.0 * model.g_quad)


def extrema(model: JTModel):
    """Stationary points of the lower sheet away from the conical intersection.

    Three minima at phi = 0, 2pi/3, 4pi/3 and three saddles at pi/3, pi,
    5pi/3 when both couplings are positive; a single ring minimum (phi
    NaN) when G = 0; the origin when F = 0.
    """
    if not isinstance(model, JTModel):
        raise InfeasibleModel("extrema() needs a JTModel")
    k, f, g = model.k_force, model.f_lin, model.g_quad
    if f == 0.0:
        return [Extremum(0.0, math.nan, 0.0, "minimum")]
    rho_min = minimum_radius(model)
    e_min = -f * f / (2.0 * (k - 2.0 * g))
    if g == 0.0:
        return [Extremum(rho_min, math.nan, e_min, "minimum")]
    rho_sad = saddle_radius(model)
    e_sad = -f * f / (2.0 * (k + 2.0 * g))
    out = [Extremum(rho_min, 2.0 * math.pi * i / 3.0, e_min, "minimum") for i in range(3)]
    out += [Extremum(rho_sad, math.pi / 3.0 + 2.0 * math.pi * i / 3.0, e_sad, "saddle") for i in range(3)]
    return out


def stabilization_and_barrier(model: JTModel):
    """(delta, barrier) in meV recovered from the model's extrema."""
    ext = extrema(model)
    e_min = min(e.energy for e in ext if e.kind == "minimum")
    saddles = [e.energy for e in ext if e.kind == "saddle"]
    return -e_min, (min(saddles) - e_min) if saddles else 0.0


def linear_profile(model: JTModel, s):
    """Lower-sheet energy along the line through the origin and the phi = 0 minimum.

    ``s`` is the signed coordinate: s > 0 points towards the phi = 0
    minimum, s < 0 towards the phi = pi saddle.
    """
    s = np.asarray(s, dtype=float)
    return apes_energy_xy(model, s, np.zeros_like(s))


def linear_scan(model: JTModel, n_points: int) -> ScanCurve:
    """Straight scan from (rho_0, phi=pi) through the origin to the global minimum (rho_0, 0)."""
    if n_points < 3:
        raise ValueError("linear scan needs at least 3 points")
    rho0 = minimum_radius(model)
    if rho0 == 0.0:
        raise InfeasibleModel("no Jahn-Teller distortion (f_lin = 0): the scan is degenerate")
    s = np.linspace(-rho0, rho0, n_points)
    return ScanCurve(s, linear_profile(model, s))


def side_minima(model: JTModel, xatol=1e-12):
    """Minimum of the linear profile on each side of the origin: (negative side, positive side)."""
    rho0 = minimum_radius(model)
    out = []
    for lo, hi in ((-rho0, 0.0), (0.0, rho0)):
        res = minimize_scalar(lambda s: float(linear_profile(model, s)), bounds=(lo, hi),
                              method="bounded", options={"xatol": xatol})
        out.append(min(float(res.fun), float(linear_profile(model, lo)), float(linear_profile(model, hi))))
    return tuple(out)


def scan_asymmetry(model: JTModel) -> float:
    """Depth difference between the two sides of the linear scan (the barrier for this model)."""
    neg, pos = side_minima(model)
    return neg - pos


def circular_scan(model: JTModel, rho: float, n_points: int) -> ScanCurve:
    """Lower-sheet energies on the circle of radius ``rho`` for phi in [0, 2pi)."""
    if not rho > 0:
        raise NegativeRho(f"circle radius must be positive, got {rho}")
    if n_points < 6:
        raise ValueError("circular scan needs at least 6 points")
    phi = 2.0 * np.pi * np.arange(n_points) / n_points
    return ScanCurve(phi, apes_energy(model, np.full(n_points, float(rho)), phi))


def circular_barrier(model: JTModel, rho: float) -> float:
    """Energy difference between the highest (phi = pi/3) and lowest (phi = 0) points of a circle."""
    return apes_energy(model, rho, math.pi / 3.0) - apes_energy(model, rho, 0.0)


def rho_to_amplitude(rho, k_force: float):
    """Map the dimensionless coordinate to amu^1/2 Angstrom for an effective mode of energy ``k_force`` meV."""
    return np.asarray(rho) * math.sqrt(HBAR2_MEV_AMU_A2 / k_force)
