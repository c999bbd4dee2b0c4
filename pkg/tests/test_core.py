import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from defect_photonics.core import (
    AtomicStructure,
    ChargeStateRecord,
    HostParams,
    PhononModeSet,
    align_structures,
    check_orthonormal,
    mass_weighted_distance,
    unit_cartesian_modes,
)
from defect_photonics.errors import (
    InvalidHost,
    InvalidStructure,
    NegativeFrequency,
    NonOrthonormal,
    SizeMismatch,
    SpeciesMismatch,
)

LATTICE = np.eye(3) * 10.0


def structure(positions, masses=None, species=None):
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    species = species or ["C"] * n
    masses = masses if masses is not None else [12.0] * n
    return AtomicStructure(LATTICE, species, positions, masses)


def random_structure(rng, n=4):
    return structure(rng.uniform(0, 8, (n, 3)), rng.uniform(1, 200, n), [f"X{i}" for i in range(n)])


# ------------------------------------------------------------------ structures


def test_structure_is_read_only():
    s = structure([[0, 0, 0]])
    with pytest.raises(ValueError):
        s.positions[0, 0] = 1.0


@pytest.mark.parametrize("kwargs", [
    dict(lattice=np.zeros((3, 3))),
    dict(lattice=np.eye(2)),
    dict(species=[]),
    dict(masses=[0.0]),
    dict(masses=[-1.0]),
    dict(positions=[[0.0, 0.0, np.nan]]),
    dict(positions=[[0.0, 0.0]]),
])
def test_structure_invariants(kwargs):
    args = dict(lattice=LATTICE, species=["C"], positions=[[0.0, 0.0, 0.0]], masses=[12.0])
    args.update(kwargs)
    with pytest.raises(InvalidStructure):
        AtomicStructure(**args)


def test_align_identical_structures():
    a = structure([[0, 0, 0], [1, 1, 1]])
    a2, b2 = align_structures(a, a)
    assert np.allclose(a2.centroid(), 0.0, atol=1e-14)
    assert mass_weighted_distance(a2, b2) == 0.0


def test_align_removes_rigid_translation():
    rng = np.random.default_rng(0)
    a = random_structure(rng)
    b = a.translated([1.0, 2.0, 3.0])
    a2, b2 = align_structures(a, b)
    assert np.max(np.abs(a2.positions - b2.positions)) < 1e-10


def test_align_unequal_masses_by_hand():
    a = structure([[0, 0, 0], [4, 0, 0]], masses=[1.0, 3.0], species=["H", "Li"])
    assert a.centroid()[0] == pytest.approx(3.0)
    a2, _ = align_structures(a, a)
    assert a2.positions[:, 0] == pytest.approx([-3.0, 1.0])
    assert a2.species == ("H", "Li")


def test_align_is_idempotent():
    rng = np.random.default_rng(1)
    a = random_structure(rng)
    b = AtomicStructure(a.lattice, a.species, rng.uniform(0, 8, (4, 3)), a.masses)
    a2, b2 = align_structures(a, b)
    a3, b3 = align_structures(a2, b2)
    assert np.max(np.abs(a3.positions - a2.positions)) < 1e-12
    assert np.max(np.abs(b3.positions - b2.positions)) < 1e-12


def test_align_errors():
    a = structure([[0, 0, 0], [1, 0, 0]])
    with pytest.raises(SizeMismatch):
        align_structures(a, structure([[0, 0, 0]]))
    with pytest.raises(SpeciesMismatch):
        align_structures(a, structure([[0, 0, 0], [1, 0, 0]], species=["C", "N"]))
    with pytest.raises(SpeciesMismatch):
        align_structures(a, structure([[0, 0, 0], [1, 0, 0]], masses=[12.0, 13.0]))


def test_mass_weighted_distance_single_atom():
    a = structure([[0, 0, 0]])
    b = structure([[0.1, 0, 0]])
    assert mass_weighted_distance(a, b) == pytest.approx(math.sqrt(12.0) * 0.1, rel=1e-14)
    assert mass_weighted_distance(a, a) == 0.0


def test_mass_weighted_distance_metric_properties():
    rng = np.random.default_rng(2)
    for _ in range(200):
        a = random_structure(rng)
        b = AtomicStructure(a.lattice, a.species, rng.uniform(0, 8, (4, 3)), a.masses)
        c = AtomicStructure(a.lattice, a.species, rng.uniform(0, 8, (4, 3)), a.masses)
        ab, ba = mass_weighted_distance(a, b), mass_weighted_distance(b, a)
        assert ab == ba
        assert mass_weighted_distance(a, c) <= ab + mass_weighted_distance(b, c) + 1e-12


_coord = st.one_of(st.just(0.0), st.floats(1e-6, 5), st.floats(-5, -1e-6))


@given(st.lists(_coord, min_size=3, max_size=3), st.floats(0.01, 200))
def test_distance_zero_only_for_identical(shift, mass):
    a = structure([[0, 0, 0]], masses=[mass])
    b = a.translated(shift)
    d = mass_weighted_distance(a, b)
    assert d >= 0
    assert (d == 0) == (not any(shift))


# ---------------------------------------------------------------------- modes


def test_unit_modes_valid():
    modes = unit_cartesian_modes(1, [50.0, 50.0, 50.0])
    assert np.allclose(modes.eigenvectors @ modes.eigenvectors.T, np.eye(3))
    assert modes.n_atoms == 1 and modes.n_modes == 3


def test_non_orthonormal_reports_pair():
    vecs = np.eye(6)[:3].copy()
    vecs[2] = vecs[1]
    with pytest.raises(NonOrthonormal) as err:
        PhononModeSet([10.0, 20.0, 30.0], vecs)
    assert err.value.pair == (2, 3)
    assert err.value.inner_product == pytest.approx(1.0)


def test_non_normalized_rejected():
    with pytest.raises(NonOrthonormal):
        check_orthonormal(np.eye(3) * 1.01)


def test_orthonormality_tolerance():
    vecs = np.eye(3)
    vecs[0, 1] = 5e-7
    check_orthonormal(vecs)  # within 1e-6


def test_mode_errors():
    with pytest.raises(NegativeFrequency):
        PhononModeSet([-5.0], np.eye(3)[:1])
    with pytest.raises(SizeMismatch):
        PhononModeSet([1.0] * 4, np.eye(4, 3))
    with pytest.raises(SizeMismatch):
        PhononModeSet([1.0, 2.0], np.eye(3)[:1])
    with pytest.raises(SizeMismatch):
        PhononModeSet([1.0], np.eye(3)[:1], reference=structure([[0, 0, 0], [1, 0, 0]]))


def test_modes_accept_per_atom_layout():
    vecs = np.eye(6).reshape(6, 2, 3)
    modes = PhononModeSet(np.arange(6.0), vecs)
    assert modes.eigenvectors.shape == (6, 6)


# ---------------------------------------------------------------- host, charge


def test_host_defaults_to_midgap():
    assert HostParams(gap=5.47).fermi_intrinsic == pytest.approx(2.735)


@pytest.mark.parametrize("kwargs", [
    dict(gap=0.0), dict(gap=5.0, fermi_intrinsic=5.0), dict(gap=5.0, fermi_intrinsic=0.0),
    dict(gap=5.0, eps_r=1.0), dict(gap=5.0, cell_length=0.0),
])
def test_host_invariants(kwargs):
    with pytest.raises(InvalidHost):
        HostParams(**kwargs)


def test_charge_record_defaults():
    r = ChargeStateRecord(-1, -100.0)
    assert r.e_corr == 0.0 and r.label == ""
