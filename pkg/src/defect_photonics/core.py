"""Shared domain types and geometric pre-processing.

All types are frozen dataclasses holding read-only numpy arrays, so
instances can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    InvalidHost,
    InvalidStructure,
    NegativeFrequency,
    NonOrthonormal,
    SizeMismatch,
    SpeciesMismatch,
)

ORTHONORMALITY_TOL = 1e-6


def _frozen(array, dtype=float):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class AtomicStructure:
    """One supercell geometry: lattice rows and Cartesian positions in Angstrom."""

    lattice: np.ndarray
    species: tuple
    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        lattice = _frozen(self.lattice)
        positions = _frozen(self.positions)
        masses = _frozen(self.masses)
        species = tuple(str(s) for s in self.species)
        if lattice.shape != (3, 3):
            raise InvalidStructure(f"lattice must be 3x3, got shape {lattice.shape}")
        if not np.all(np.isfinite(lattice)) or abs(np.linalg.det(lattice)) <= 1e-6:
            raise InvalidStructure("lattice is singular or non-finite")
        n = len(species)
        if n < 1:
            raise InvalidStructure("structure must contain at least one atom")
        if positions.shape != (n, 3) or masses.shape != (n,):
            raise InvalidStructure(
                f"inconsistent lengths: {n} species, positions {positions.shape}, masses {masses.shape}"
            )
        if not np.all(np.isfinite(positions)):
            raise InvalidStructure("positions must be finite")
        if not np.all(masses > 0) or not np.all(np.isfinite(masses)):
            raise InvalidStructure("all masses must be positive and finite")
        object.__setattr__(self, "lattice", lattice)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "species", species)

    @property
    def n_atoms(self) -> int:
        return len(self.species)

    def centroid(self) -> np.ndarray:
        """Mass-weighted centroid in Angstrom."""
        return self.masses @ self.positions / self.masses.sum()

    def translated(self, shift) -> "AtomicStructure":
        return AtomicStructure(self.lattice, self.species, self.positions + np.asarray(shift), self.masses)


@dataclass(frozen=True, eq=False)
class PhononModeSet:
    """Mode energies (meV) and orthonormal mass-weighted eigenvectors.

    ``eigenvectors`` has shape ``(n_modes, 3 * n_atoms)`` with the Cartesian
    components of atom ``a`` at columns ``3a, 3a+1, 3a+2``.
    """

    frequencies: np.ndarray
    eigenvectors: np.ndarray
    reference: Optional[AtomicStructure] = None

    def __post_init__(self):
        freqs = _frozen(self.frequencies)
        vecs = np.array(self.eigenvectors, dtype=float)
        if vecs.ndim == 3:
            vecs = vecs.reshape(vecs.shape[0], -1)
        vecs = _frozen(vecs)
        if freqs.ndim != 1 or vecs.ndim != 2 or vecs.shape[0] != freqs.shape[0]:
            raise SizeMismatch(
                f"{freqs.shape} frequencies do not match eigenvector array {vecs.shape}"
            )
        if vecs.shape[1] % 3 != 0 or vecs.shape[1] == 0:
            raise SizeMismatch("eigenvector length must be a positive multiple of 3")
        if vecs.shape[0] > vecs.shape[1]:
            raise SizeMismatch(f"{vecs.shape[0]} modes exceed 3N = {vecs.shape[1]}")
        if self.reference is not None and 3 * self.reference.n_atoms != vecs.shape[1]:
            raise SizeMismatch(
                f"modes span {vecs.shape[1] // 3} atoms, reference has {self.reference.n_atoms}"
            )
        if not np.all(np.isfinite(freqs)) or not np.all(np.isfinite(vecs)):
            raise NegativeFrequency("frequencies and eigenvectors must be finite")
        bad = np.flatnonzero(freqs < 0)
        if bad.size:
            raise NegativeFrequency(f"mode {bad[0] + 1} has negative frequency {freqs[bad[0]]} meV")
        check_orthonormal(vecs)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "eigenvectors", vecs)

    @property
    def n_modes(self) -> int:
        return self.frequencies.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.eigenvectors.shape[1] // 3


def check_orthonormal(vectors, tol=ORTHONORMALITY_TOL):
    """Raise :class:`NonOrthonormal` naming the worst pair (1-based) if the Gram matrix is not the identity."""
    vectors = np.asarray(vectors, dtype=float)
    dev = np.abs(vectors @ vectors.T - np.eye(vectors.shape[0]))
    j, k = np.unravel_index(np.argmax(dev), dev.shape) if dev.size else (0, 0)
    if dev.size and dev[j, k] >= tol:
        j, k = sorted((int(j), int(k)))
        raise NonOrthonormal((j + 1, k + 1), float(vectors[j] @ vectors[k]))


@dataclass(frozen=True)
class ChargeStateRecord:
    """Total energy (eV) and finite-size correction (eV) of one charge state."""

    q: int
    e_tot: float
    e_corr: float = 0.0
    label: str = ""


@dataclass(frozen=True)
class HostParams:
    """Host-crystal parameters. Energies in eV, ``cell_length`` in Angstrom.

    ``fermi_intrinsic`` defaults to midgap.
    """

    gap: float
    e_vbm: float = 0.0
    fermi_intrinsic: Optional[float] = None
    eps_r: float = 5.7
    cell_length: Optional[float] = None

    def __post_init__(self):
        if not self.gap > 0:
            raise InvalidHost(f"band gap must be positive, got {self.gap}")
        if self.fermi_intrinsic is None:
            object.__setattr__(self, "fermi_intrinsic", 0.5 * self.gap)
        if not 0 < self.fermi_intrinsic < self.gap:
            raise InvalidHost(f"intrinsic Fermi level {self.fermi_intrinsic} eV outside (0, {self.gap})")
        if not self.eps_r > 1:
            raise InvalidHost(f"dielectric constant must exceed 1, got {self.eps_r}")
        if self.cell_length is not None and not self.cell_length > 0:
            raise InvalidHost(f"cell length must be positive, got {self.cell_length}")


def _check_compatible(a: AtomicStructure, b: AtomicStructure):
    if a.n_atoms != b.n_atoms:
        raise SizeMismatch(f"structures have {a.n_atoms} and {b.n_atoms} atoms")
    if a.species != b.species:
        idx = next(i for i, (x, y) in enumerate(zip(a.species, b.species)) if x != y)
        raise SpeciesMismatch(f"atom {idx + 1}: {a.species[idx]} vs {b.species[idx]}")
    if not np.allclose(a.masses, b.masses, rtol=0, atol=1e-9):
        raise SpeciesMismatch("structures carry different atomic masses")


def align_structures(a: AtomicStructure, b: AtomicStructure):
    """Translate both structures so their mass-weighted centroids sit at the origin.

    Translation only; no rotation and no periodic unwrapping.
    """
    _check_compatible(a, b)
    return a.translated(-a.centroid()), b.translated(-b.centroid())


def mass_weighted_distance(a: AtomicStructure, b: AtomicStructure) -> float:
    """sqrt(sum_a m_a |R_b - R_a|^2) in amu^1/2 Angstrom."""
    _check_compatible(a, b)
    diff = b.positions - a.positions
    return float(np.sqrt(np.sum(a.masses[:, None] * diff**2)))


def structures_equal(a: AtomicStructure, b: AtomicStructure, atol=1e-8) -> bool:
    return (
        a.species == b.species
        and np.allclose(a.lattice, b.lattice, rtol=0, atol=atol)
        and np.allclose(a.positions, b.positions, rtol=0, atol=atol)
        and np.allclose(a.masses, b.masses, rtol=0, atol=atol)
    )


def unit_cartesian_modes(n_atoms: int, energies: Sequence[float]):
    """Convenience: a :class:`PhononModeSet` of Cartesian unit vectors."""
    energies = np.asarray(energies, dtype=float)
    return PhononModeSet(energies, np.eye(3 * n_atoms)[: energies.shape[0]])
