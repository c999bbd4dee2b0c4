import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from defect_photonics import ingest
from defect_photonics.core import AtomicStructure, ChargeStateRecord, PhononModeSet, structures_equal
from defect_photonics.elements import ATOMIC_MASSES, atomic_mass
from defect_photonics.errors import (
    ConfigError,
    CountMismatch,
    DuplicateCharge,
    EmptyTable,
    InputError,
    NegativeFrequency,
    NonOrthonormal,
    ParseError,
    RaggedRows,
    UnknownElement,
)
from fuzzing import mutate

CARBON = 'Lattice="10 0 0 0 10 0 0 0 10"\n'


# ----------------------------------------------------------------- structures


def test_single_carbon():
    s = ingest.parse_structure("1\n" + CARBON + "C 0 0 0\n")
    assert s.n_atoms == 1
    assert s.masses[0] == pytest.approx(12.011)
    assert np.allclose(s.lattice, np.eye(3) * 10)


def test_count_mismatch():
    with pytest.raises(CountMismatch) as err:
        ingest.parse_structure("2\n" + CARBON + "C 0 0 0\nC 1 0 0\nC 2 0 0\n")
    assert err.value.line == 1


@pytest.mark.parametrize("text, line", [
    ("1\n" + CARBON + "Xx 0 0 0\n", 3),
    ("1\n" + CARBON + "C 0 0\n", 3),
    ("1\n" + CARBON + "C 0 0 abc\n", 3),
    ("1\n" + CARBON + "C 0 0 nan\n", 3),
    ("1\nLattice=\"10 0 0\"\nC 0 0 0\n", 2),
    ("1\ncomment only\nC 0 0 0\n", 2),
    ("x\n" + CARBON + "C 0 0 0\n", 1),
    ("0\n" + CARBON, 1),
    ('1\nLattice="0 0 0 0 0 0 0 0 0"\nC 0 0 0\n', 2),
])
def test_structure_errors_carry_line(text, line):
    with pytest.raises(ParseError) as err:
        ingest.parse_structure(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_unknown_element_type():
    with pytest.raises(UnknownElement):
        ingest.parse_structure("1\n" + CARBON + "Qq 0 0 0\n")


def test_mass_overrides():
    text = '1\nLattice="10 0 0 0 10 0 0 0 10" masses="C:13.00335"\nC 0 0 0\n'
    assert ingest.parse_structure(text).masses[0] == 13.00335
    assert ingest.parse_structure(text, mass_overrides={"C": 14.0}).masses[0] == 14.0
    # an override can introduce a pseudo-species
    s = ingest.parse_structure('1\nLattice="10 0 0 0 10 0 0 0 10" masses="Vac:1.0"\nVac 0 0 0\n')
    assert s.masses[0] == 1.0
    assert atomic_mass("C", {"C": 13.0}) == 13.0


def test_element_table_covers_h_to_u():
    assert len(ATOMIC_MASSES) == 92
    assert ATOMIC_MASSES["H"] == pytest.approx(1.008) and ATOMIC_MASSES["U"] == pytest.approx(238.02891)


def _random_structure(rng):
    n = int(rng.integers(1, 6))
    symbols = list(rng.choice(["C", "N", "Ga", "In", "Tl", "Si"], n))
    lattice = np.eye(3) * 10 + rng.normal(0, 0.5, (3, 3))
    return AtomicStructure(lattice, symbols, rng.normal(0, 3, (n, 3)), [ATOMIC_MASSES[s] for s in symbols])


def test_structure_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(100):
        s = _random_structure(rng)
        back = ingest.parse_structure(ingest.write_structure(s, comment="round trip"))
        assert structures_equal(s, back, atol=1e-8)
        assert np.array_equal(s.positions, back.positions)  # repr floats are exact


def test_structure_round_trip_with_isotope_mass():
    s = AtomicStructure(np.eye(3) * 5, ["C", "C"], [[0, 0, 0], [1, 1, 1]], [13.00335, 13.00335])
    assert structures_equal(s, ingest.parse_structure(ingest.write_structure(s)))


# -------------------------------------------------------------------- phonons


def _phonon_text(freqs, vecs, n):
    out = [f"{n} {len(freqs)}"]
    for k, (f, v) in enumerate(zip(freqs, vecs), start=1):
        out.append(f"mode {k} {f}")
        out += [" ".join(repr(float(x)) for x in row) for row in np.reshape(v, (n, 3))]
    return "\n".join(out) + "\n"


def test_unit_modes_parse():
    modes = ingest.parse_phonons("# one atom\n" + _phonon_text([50, 50, 50], np.eye(3), 1))
    assert np.allclose(modes.eigenvectors @ modes.eigenvectors.T, np.eye(3))
    assert modes.frequencies.tolist() == [50.0, 50.0, 50.0]


def test_identical_eigenvectors_rejected():
    with pytest.raises(NonOrthonormal) as err:
        ingest.parse_phonons(_phonon_text([10, 20], [np.eye(3)[0], np.eye(3)[0]], 1))
    assert err.value.pair == (1, 2)


def test_negative_frequency_rejected():
    with pytest.raises(NegativeFrequency) as err:
        ingest.parse_phonons(_phonon_text([-5], [np.eye(3)[0]], 1))
    assert err.value.line == 2


@pytest.mark.parametrize("text", [
    "", "# nothing\n", "1\n", "1 4\n", "1 1\nmode 1 5\n1 0\n", "1 1\nmode 2 5\n1 0 0\n",
    "1 1\nmodus 1 5\n1 0 0\n", "1 2\nmode 1 5\n1 0 0\n", "1 1\nmode 1 inf\n1 0 0\n",
    "100000000000 1\n",
])
def test_phonon_parse_errors(text):
    with pytest.raises(InputError):
        ingest.parse_phonons(text)


def test_phonon_reference_atom_count():
    ref = ingest.parse_structure("2\n" + CARBON + "C 0 0 0\nC 1 0 0\n")
    with pytest.raises(CountMismatch):
        ingest.parse_phonons(_phonon_text([50], [np.eye(3)[0]], 1), reference=ref)


def test_phonon_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 3 * n + 1))
        q, _ = np.linalg.qr(rng.normal(size=(3 * n, 3 * n)))
        modes = PhononModeSet(rng.uniform(0, 200, m), q.T[:m])
        back = ingest.parse_phonons(ingest.write_phonons(modes))
        assert np.array_equal(back.frequencies, modes.frequencies)
        assert np.array_equal(back.eigenvectors, modes.eigenvectors)


# ------------------------------------------------------------- charge records


def test_two_records():
    recs = ingest.parse_charge_records("label,q,e_tot_eV\nneutral,0,-105.0\nminus,-1,-106.2\n")
    assert [(r.q, r.e_tot, r.e_corr) for r in recs] == [(0, -105.0, 0.0), (-1, -106.2, 0.0)]


def test_duplicate_charge():
    with pytest.raises(DuplicateCharge) as err:
        ingest.parse_charge_records("label,q,e_tot_eV,e_corr_eV\na,-1,-1,0\nb,-1,-2,0\n")
    assert err.value.line == 3


def test_optional_correction_blank_cell():
    recs = ingest.parse_charge_records("Label,Q,E_tot_eV,E_corr_eV\na,1,-1.5,\nb,0,-2,0.25\n")
    assert [r.e_corr for r in recs] == [0.0, 0.25]


@pytest.mark.parametrize("text", [
    "", "label,q,e_tot_eV\n", "label,q\na,1\n", "label,q,e_tot_eV,spin\na,1,2,3\n",
    "label,q,e_tot_eV\na,1.5,2\n", "label,q,e_tot_eV\na,1\n", "label,q,q,e_tot_eV\na,1,1,2\n",
    'label,q,e_tot_eV\n"a,1,2\n',
])
def test_record_errors(text):
    with pytest.raises(ParseError):
        ingest.parse_charge_records(text)


@given(st.lists(st.tuples(st.integers(-5, 5), st.floats(-1e4, 1e4), st.floats(0, 5)), min_size=1, max_size=8,
                unique_by=lambda t: t[0]))
def test_record_round_trip(rows):
    recs = [ChargeStateRecord(q, e, c, f"s{q}") for q, e, c in rows]
    assert ingest.parse_charge_records(ingest.write_charge_records(recs)) == recs


# ---------------------------------------------------------------------- tables


def test_write_table_one_row():
    assert ingest.write_table([(1.0, 2.0)], ("x", "y")) == "x,y\n1,2\n"


def test_write_table_errors():
    with pytest.raises(EmptyTable):
        ingest.write_table([], ("x",))
    with pytest.raises(RaggedRows):
        ingest.write_table([(1.0, 2.0), (1.0,)], ("x", "y"))


@given(st.lists(st.tuples(st.floats(allow_nan=False), st.floats(allow_nan=False), st.integers(-10**6, 10**6)),
                min_size=1, max_size=20))
def test_table_round_trip_bitwise(rows):
    headers, back = ingest.read_table(ingest.write_table(rows, ("a", "b", "n")))
    assert headers == ("a", "b", "n")
    assert [tuple(map(float, r)) for r in rows] == back


def test_table_preserves_order_and_ints():
    text = ingest.write_table([(3, 0.1), (1, 1 / 3)], ("k", "v"))
    assert text.splitlines()[1:] == ["3,0.10000000000000001", "1,0.33333333333333331"]


# --------------------------------------------------------------------- config


BASE = """
[run]
kind = jt
[jt]
k_force = 100
delta = 236
barrier = 71
"""


def test_config_minimal(tmp_path):
    cfg = ingest.parse_config(BASE, base_dir=tmp_path)
    assert cfg.kind == "jt" and cfg.jt.delta == 236.0 and cfg.output_dir == tmp_path / "out"
    assert cfg.echo["jt"]["barrier"] == "71"


def test_config_kind_override():
    with pytest.raises(ConfigError):
        ingest.parse_config(BASE, kind="ctl")  # needs [host] and [ctl]


def test_config_lineshape_paths_and_zpl(tmp_path):
    text = """
[lineshape]
ground = g.xyz
excited = sub/e.xyz
phonons = p.txt
e_excited = 10.5
e_ground = 8.68
"""
    cfg = ingest.parse_config(text, base_dir=tmp_path, kind="lineshape")
    assert cfg.lineshape.excited == tmp_path / "sub" / "e.xyz"
    assert cfg.lineshape.zpl == pytest.approx(1.82)
    assert (cfg.lineshape.grid_max, cfg.lineshape.grid_step, cfg.lineshape.sigma) == (250.0, 0.1, 3.0)


@pytest.mark.parametrize("text", [
    BASE + "typo = 1\n",
    BASE + "[extra]\n",
    BASE.replace("delta = 236", "delta = abc"),
    BASE.replace("delta = 236", "delta = nan"),
    BASE.replace("k_force = 100", "k_force = -1"),
    BASE + "f_lin = 1\ng_quad = 1\n",
    BASE.replace("kind = jt", "kind = everything"),
    BASE + "n_linear = 2\n",
    BASE + "n_circular = 100000000\n",
    "[jt]\nk_force = 1\nk_force = 2\n",
    "not an ini file",
    "[run]\nkind = lineshape\n[lineshape]\nground = a\nexcited = b\nphonons = c\n",
    "[run]\nkind = lineshape\n[lineshape]\nground = a\nexcited = b\nphonons = c\ne_zpl = 1\nsigma = 0\n",
    "[run]\nkind = ctl\n[host]\ngap = 5\nfermi_intrinsic = 7\n[ctl]\nrecords = r.csv\n",
    "[run]\nkind = ctl\n[host]\ngap = 5\n[ctl]\nrecords = r.csv\ncorrection = magic\n",
])
def test_config_rejects(text):
    with pytest.raises(ConfigError):
        ingest.parse_config(text)


def test_shipped_config_parses(examples_dir):
    cfg = ingest.parse_config((examples_dir / "all.ini").read_text(), base_dir=examples_dir)
    assert cfg.kind == "all"
    assert cfg.host.gap == 5.47 and cfg.host.fermi_intrinsic == pytest.approx(2.735)
    assert all(p.exists() for p in cfg.input_files())


# ----------------------------------------------------------------------- fuzz


@pytest.mark.parametrize("name, parser", [
    ("dimer_ground.xyz", ingest.parse_structure),
    ("dimer_phonons.txt", ingest.parse_phonons),
    ("xv_ctl.csv", ingest.parse_charge_records),
    ("all.ini", ingest.parse_config),
])
def test_parsers_total_over_input_errors(examples_dir, name, parser):
    rng = random.Random(name)
    text = (examples_dir / name).read_text()
    for _ in range(2000):
        try:
            parser(mutate(text, rng))
        except InputError:
            pass


@given(st.text(max_size=300))
def test_parsers_total_on_arbitrary_text(text):
    for parser in (ingest.parse_structure, ingest.parse_phonons, ingest.parse_charge_records,
                   ingest.parse_config, ingest.read_table):
        try:
            parser(text)
        except InputError:
            pass
