"""Unit conventions and conversion constants.

Lengths are in Angstrom, masses in amu, electronic energies (total
energies, Fermi levels, ZPL) in eV, and phonon / Jahn-Teller energies in
meV. Every conversion used anywhere in the package lives here.
"""

from scipy import constants as _c

MEV_PER_EV = 1000.0

#: hbar^2 / (amu * Angstrom^2) expressed in meV (~4.18016).
HBAR2_MEV_AMU_A2 = _c.hbar**2 / (_c.atomic_mass * 1e-20) / _c.e * MEV_PER_EV

#: e^2 / (4 pi eps0) in eV * Angstrom, the value used by the point-charge correction.
COULOMB_EV_A = 14.3996

#: Madelung constant of a simple-cubic lattice of point charges.
MADELUNG_SC = 2.837297


def hr_factor(hbar_omega_mev, dq):
    """Huang-Rhys factor ``omega * dq**2 / (2 hbar)`` for ``dq`` in amu^1/2 Angstrom."""
    return hbar_omega_mev * dq**2 / (2.0 * HBAR2_MEV_AMU_A2)


def dq_for_hr(hbar_omega_mev, s):
    """Inverse of :func:`hr_factor`: the displacement giving factor ``s``."""
    return (2.0 * s * HBAR2_MEV_AMU_A2 / hbar_omega_mev) ** 0.5
