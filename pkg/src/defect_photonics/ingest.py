"""Text formats: structures, phonon modes, charge records, result tables, run configs.

Every parser here is text in, value out, and raises only
:class:`~defect_photonics.errors.InputError` subclasses on bad input.

Structure files are extended XYZ::

    2
    Lattice="10 0 0 0 10 0 0 0 10" masses="C:13.00335"
    C 0.0 0.0 0.0
    C 1.2 0.0 0.0

Phonon files hold a header ``N M`` (atoms, modes) and then, for every
mode, a line ``mode k energy_meV`` followed by N lines of mass-weighted
eigenvector components. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import AtomicStructure, ChargeStateRecord, HostParams, PhononModeSet
from .elements import ATOMIC_MASSES
from .errors import (
    ConfigError,
    CountMismatch,
    DuplicateCharge,
    EmptyTable,
    InputError,
    NegativeFrequency,
    ParseError,
    PhysicsError,
    RaggedRows,
    UnknownElement,
)


def _float(token, line, what="number"):
    try:
        value = float(token)
    except (TypeError, ValueError):
        raise ParseError(f"expected {what}, got {token!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} must be finite, got {token!r}", line)
    return value


def _int(token, line, what="integer"):
    try:
        return int(token)
    except (TypeError, ValueError):
        raise ParseError(f"expected {what}, got {token!r}", line) from None


# ---------------------------------------------------------------- structures


def _parse_mass_overrides(value, line):
    overrides = {}
    for item in value.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        symbol, sep, mass = item.partition(":")
        if not sep:
            raise ParseError(f"mass override {item!r} is not of the form Sym:mass", line)
        mass = _float(mass, line, "mass")
        if mass <= 0:
            raise ParseError(f"mass override for {symbol} must be positive", line)
        overrides[symbol.strip()] = mass
    return overrides


def parse_structure(text: str, mass_overrides: Optional[dict] = None) -> AtomicStructure:
    """Parse an extended-XYZ structure.

    Masses come from the element table unless the ``masses`` metadata key
    or ``mass_overrides`` (which wins) supplies them. Unrelated metadata
    keys are ignored.
    """
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("missing atom count", 1)
    n = _int(lines[0].strip(), 1, "atom count")
    if n < 1:
        raise ParseError(f"atom count must be >= 1, got {n}", 1)
    if len(lines) < 2:
        raise ParseError("missing metadata line", 2)
    try:
        tokens = shlex.split(lines[1], comments=False, posix=True)
    except ValueError as exc:
        raise ParseError(f"bad metadata: {exc}", 2) from None
    meta = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not key:
            raise ParseError(f"metadata token {tok!r} is not key=value", 2)
        meta[key.lower()] = value
    if "lattice" not in meta:
        raise ParseError("metadata lacks Lattice=\"...\"", 2)
    lat = meta["lattice"].split()
    if len(lat) != 9:
        raise ParseError(f"Lattice needs 9 components, got {len(lat)}", 2)
    lattice = np.array([_float(v, 2, "lattice component") for v in lat]).reshape(3, 3)
    if "properties" in meta and meta["properties"].lower() != "species:s:1:pos:r:3":
        raise ParseError(f"unsupported Properties {meta['properties']!r}", 2)
    overrides = _parse_mass_overrides(meta["masses"], 2) if "masses" in meta else {}
    if mass_overrides:
        overrides.update(mass_overrides)

    body = [(i + 3, ln) for i, ln in enumerate(lines[2:]) if ln.strip()]
    if len(body) != n:
        raise CountMismatch(f"header declares {n} atoms, body has {len(body)}", 1)
    species, positions, masses = [], [], []
    for lineno, ln in body:
        cols = ln.split()
        if len(cols) != 4:
            raise ParseError(f"expected 'symbol x y z', got {len(cols)} columns", lineno)
        symbol = cols[0]
        if symbol not in ATOMIC_MASSES and symbol not in overrides:
            raise UnknownElement(f"unknown element {symbol!r}", lineno)
        species.append(symbol)
        positions.append([_float(c, lineno, "coordinate") for c in cols[1:]])
        masses.append(overrides.get(symbol, ATOMIC_MASSES.get(symbol)))
    try:
        return AtomicStructure(lattice, species, positions, masses)
    except InputError as exc:
        raise ParseError(str(exc), 2) from None


def write_structure(structure: AtomicStructure, comment: str = "") -> str:
    """Serialize to extended XYZ; non-table masses are written as overrides."""
    overrides = {}
    for sym, mass in zip(structure.species, structure.masses):
        if overrides.get(sym, mass) != mass:
            raise InputError(f"atoms of {sym} carry different masses; cannot serialize per species")
        if ATOMIC_MASSES.get(sym) != mass:
            overrides[sym] = float(mass)
    lattice = " ".join(repr(float(v)) for v in structure.lattice.ravel())
    meta = f'Lattice="{lattice}"'
    if overrides:
        meta += ' masses="' + ",".join(f"{s}:{m!r}" for s, m in overrides.items()) + '"'
    if comment:
        meta += " comment=" + shlex.quote(comment)
    out = [str(structure.n_atoms), meta]
    for sym, pos in zip(structure.species, structure.positions):
        out.append(f"{sym} {float(pos[0])!r} {float(pos[1])!r} {float(pos[2])!r}")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------------- phonons


def _content_lines(text):
    for i, ln in enumerate(text.splitlines(), start=1):
        s = ln.strip()
        if s and not s.startswith("#"):
            yield i, s


def parse_phonons(text: str, reference: Optional[AtomicStructure] = None) -> PhononModeSet:
    """Parse the phonon text format (see module docstring)."""
    it = _content_lines(text)
    try:
        lineno, header = next(it)
    except StopIteration:
        raise ParseError("empty phonon file", 1) from None
    cols = header.split()
    if len(cols) != 2:
        raise ParseError("header must be 'N M' (atoms, modes)", lineno)
    n, m = _int(cols[0], lineno, "atom count"), _int(cols[1], lineno, "mode count")
    if n < 1 or m < 1:
        raise ParseError("atom and mode counts must be positive", lineno)
    if m > 3 * n:
        raise ParseError(f"{m} modes exceed 3N = {3 * n}", lineno)
    if reference is not None and reference.n_atoms != n:
        raise CountMismatch(f"phonon file is for {n} atoms, structure has {reference.n_atoms}", lineno)

    body = list(it)
    if len(body) != m * (n + 1):
        raise CountMismatch(
            f"header declares {m} modes of {n} atoms ({m * (n + 1)} lines), body has {len(body)}",
            lineno,
        )
    freqs = np.empty(m)
    vecs = np.empty((m, n, 3))
    for k in range(m):
        lineno, ln = body[k * (n + 1)]
        cols = ln.split()
        if len(cols) != 3 or cols[0].lower() != "mode":
            raise ParseError("expected 'mode k energy_meV'", lineno)
        if _int(cols[1], lineno, "mode index") != k + 1:
            raise ParseError(f"expected mode index {k + 1}, got {cols[1]}", lineno)
        freq = _float(cols[2], lineno, "mode energy")
        if freq < 0:
            raise NegativeFrequency(f"mode {k + 1} has negative energy {freq} meV", lineno)
        freqs[k] = freq
        for a in range(n):
            lineno, ln = body[k * (n + 1) + 1 + a]
            cols = ln.split()
            if len(cols) != 3:
                raise ParseError("expected three eigenvector components", lineno)
            vecs[k, a] = [_float(c, lineno, "eigenvector component") for c in cols]
    return PhononModeSet(freqs, vecs.reshape(m, 3 * n), reference)


def write_phonons(modes: PhononModeSet) -> str:
    n = modes.n_atoms
    out = [f"{n} {modes.n_modes}"]
    for k, (freq, vec) in enumerate(zip(modes.frequencies, modes.eigenvectors), start=1):
        out.append(f"mode {k} {float(freq)!r}")
        for row in vec.reshape(n, 3):
            out.append(" ".join(repr(float(x)) for x in row))
    return "\n".join(out) + "\n"


# ------------------------------------------------------------ charge records

_RECORD_COLUMNS = {"label", "q", "e_tot_ev", "e_corr_ev"}


def parse_charge_records(text: str) -> list:
    """Parse the ``label,q,e_tot_eV[,e_corr_eV]`` table into :class:`ChargeStateRecord` s."""
    rows = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1)
            if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ParseError("no header line", 1)
    try:
        parsed = list(csv.reader([ln for _, ln in rows], strict=True))
    except csv.Error as exc:
        raise ParseError(str(exc), rows[0][0]) from None
    header_line = rows[0][0]
    header = [h.strip().lower() for h in parsed[0]]
    unknown = set(header) - _RECORD_COLUMNS
    if unknown:
        raise ParseError(f"unknown columns {sorted(unknown)}", header_line)
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names", header_line)
    missing = {"label", "q", "e_tot_ev"} - set(header)
    if missing:
        raise ParseError(f"missing columns {sorted(missing)}", header_line)
    col = {name: header.index(name) for name in header}
    if len(parsed) == 1:
        raise ParseError("no charge-state rows", header_line)

    records, seen = [], {}
    for (lineno, _), cells in zip(rows[1:], parsed[1:]):
        if len(cells) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(cells)}", lineno)
        cells = [c.strip() for c in cells]
        q = _int(cells[col["q"]], lineno, "charge")
        e_tot = _float(cells[col["e_tot_ev"]], lineno, "total energy")
        e_corr = 0.0
        if "e_corr_ev" in col and cells[col["e_corr_ev"]] != "":
            e_corr = _float(cells[col["e_corr_ev"]], lineno, "correction")
        if q in seen:
            raise DuplicateCharge(f"charge {q} already given on line {seen[q]}", lineno)
        seen[q] = lineno
        records.append(ChargeStateRecord(q=q, e_tot=e_tot, e_corr=e_corr, label=cells[col["label"]]))
    return records


def write_charge_records(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "q", "e_tot_eV", "e_corr_eV"])
    for r in records:
        writer.writerow([r.label, r.q, format(r.e_tot, ".17g"), format(r.e_corr, ".17g")])
    return buf.getvalue()


# -------------------------------------------------------------------- tables


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_table(rows, headers) -> str:
    """Comma-delimited table with a header line and 17 significant digits per float.

    Row order is preserved. Integers are written without a decimal point.
    """
    rows = [tuple(r) for r in rows]
    headers = tuple(headers)
    if not rows:
        raise EmptyTable("cannot write a table without rows")
    for i, r in enumerate(rows):
        if len(r) != len(headers):
            raise RaggedRows(f"row {i} has {len(r)} values, header has {len(headers)}")
    lines = [",".join(headers)]
    lines.extend(",".join(_cell(v) for v in r) for r in rows)
    return "\n".join(lines) + "\n"


def read_table(text: str):
    """Inverse of :func:`write_table`: returns ``(headers, rows)`` with float values."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise EmptyTable("empty table text")
    headers = tuple(lines[0].split(","))
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(headers):
            raise RaggedRows(f"line {i} has {len(cells)} values, header has {len(headers)}")
        try:
            rows.append(tuple(float(c) for c in cells))
        except ValueError:
            raise ParseError(f"non-numeric cell in {ln!r}", i) from None
    return headers, rows


# -------------------------------------------------------------------- config

JOB_KINDS = ("ctl", "jt", "lineshape", "all")
MAX_SCAN_POINTS = 1_000_000


@dataclass(frozen=True)
class CtlOptions:
    records: Path
    correction: str = "file"


@dataclass(frozen=True)
class JTOptions:
    k_force: float
    delta: Optional[float] = None
    barrier: Optional[float] = None
    f_lin: Optional[float] = None
    g_quad: Optional[float] = None
    n_linear: int = 201
    n_circular: int = 360
    circle_rho: Optional[float] = None


@dataclass(frozen=True)
class LineshapeOptions:
    ground: Path
    excited: Path
    phonons: Path
    e_zpl: Optional[float] = None
    e_excited: Optional[float] = None
    e_ground: Optional[float] = None
    grid_max: float = 250.0
    grid_step: float = 0.1
    sigma: float = 3.0
    gamma_zpl: float = 1.0

    @property
    def zpl(self) -> float:
        if self.e_zpl is not None:
            return self.e_zpl
        return self.e_excited - self.e_ground


@dataclass(frozen=True)
class PipelineConfig:
    kind: str
    output_dir: Path
    host: Optional[HostParams] = None
    ctl: Optional[CtlOptions] = None
    jt: Optional[JTOptions] = None
    lineshape: Optional[LineshapeOptions] = None
    echo: dict = field(default_factory=dict)

    def input_files(self):
        files = []
        if self.ctl is not None and self.kind in ("ctl", "all"):
            files.append(self.ctl.records)
        if self.lineshape is not None and self.kind in ("lineshape", "all"):
            files += [self.lineshape.ground, self.lineshape.excited, self.lineshape.phonons]
        return files


_SCHEMA = {
    "run": {"kind": str, "output_dir": str},
    "host": {"gap": float, "e_vbm": float, "fermi_intrinsic": float, "eps_r": float, "cell_length": float},
    "ctl": {"records": str, "correction": str},
    "jt": {
        "k_force": float, "delta": float, "barrier": float, "f_lin": float, "g_quad": float,
        "n_linear": int, "n_circular": int, "circle_rho": float,
    },
    "lineshape": {
        "ground": str, "excited": str, "phonons": str, "e_zpl": float, "e_excited": float,
        "e_ground": float, "grid_max": float, "grid_step": float, "sigma": float, "gamma_zpl": float,
    },
}

_NEEDS = {"ctl": ("host", "ctl"), "jt": ("jt",), "lineshape": ("lineshape",),
          "all": ("host", "ctl", "jt", "lineshape")}


def _typed_section(cp, name):
    out = {}
    for key, raw in cp.items(name):
        kind = _SCHEMA[name].get(key)
        if kind is None:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        raw = raw.strip()
        if kind is str:
            if not raw:
                raise ConfigError(f"[{name}] {key} is empty")
            out[key] = raw
            continue
        try:
            value = kind(raw)
        except ValueError:
            raise ConfigError(f"[{name}] {key} = {raw!r} is not a valid {kind.__name__}") from None
        if kind is float and not math.isfinite(value):
            raise ConfigError(f"[{name}] {key} must be finite")
        out[key] = value
    return out


def _positive(section, values, *keys):
    for key in keys:
        if key in values and not values[key] > 0:
            raise ConfigError(f"[{section}] {key} must be positive, got {values[key]}")


def parse_config(text: str, base_dir=".", kind: Optional[str] = None) -> PipelineConfig:
    """Parse an INI-style run configuration.

    Relative paths resolve against ``base_dir``. ``kind`` overrides
    ``[run] kind``. Unknown sections and keys raise :class:`ConfigError`.
    """
    base_dir = Path(base_dir)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   default_section="__no_default__")
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}".replace("\n", " ")) from None
    unknown = set(cp.sections()) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    sections = {name: _typed_section(cp, name) for name in cp.sections()}

    run = sections.get("run", {})
    kind = kind or run.get("kind", "all")
    if kind not in JOB_KINDS:
        raise ConfigError(f"job kind must be one of {JOB_KINDS}, got {kind!r}")
    for needed in _NEEDS[kind]:
        if needed not in sections:
            raise ConfigError(f"job kind {kind!r} requires a [{needed}] section")

    host = ctl = jt = ls = None
    if "host" in sections:
        if "gap" not in sections["host"]:
            raise ConfigError("[host] requires gap")
        try:
            host = HostParams(**sections["host"])
        except PhysicsError as exc:
            raise ConfigError(f"[host] {exc}") from None
    if "ctl" in sections:
        c = dict(sections["ctl"])
        if "records" not in c:
            raise ConfigError("[ctl] requires records")
        if c.get("correction", "file") not in ("file", "point_charge"):
            raise ConfigError("[ctl] correction must be 'file' or 'point_charge'")
        c["records"] = base_dir / c["records"]
        ctl = CtlOptions(**c)
    if "jt" in sections:
        j = sections["jt"]
        _positive("jt", j, "k_force", "circle_rho")
        if "k_force" not in j:
            raise ConfigError("[jt] requires k_force")
        by_energy = {"delta", "barrier"} <= set(j)
        by_coupling = {"f_lin", "g_quad"} <= set(j)
        if by_energy == by_coupling:
            raise ConfigError("[jt] give exactly one of (delta, barrier) or (f_lin, g_quad)")
        if not (3 <= j.get("n_linear", 3) <= MAX_SCAN_POINTS and 6 <= j.get("n_circular", 6) <= MAX_SCAN_POINTS):
            raise ConfigError(f"[jt] need 3 <= n_linear and 6 <= n_circular, both at most {MAX_SCAN_POINTS}")
        jt = JTOptions(**j)
    if "lineshape" in sections:
        s = dict(sections["lineshape"])
        for key in ("ground", "excited", "phonons"):
            if key not in s:
                raise ConfigError(f"[lineshape] requires {key}")
            s[key] = base_dir / s[key]
        direct = "e_zpl" in s
        derived = {"e_excited", "e_ground"} <= set(s)
        if direct == derived:
            raise ConfigError("[lineshape] give either e_zpl or both e_excited and e_ground")
        _positive("lineshape", s, "grid_max", "grid_step", "sigma", "gamma_zpl")
        ls = LineshapeOptions(**s)

    out = run.get("output_dir", "out")
    return PipelineConfig(
        kind=kind,
        output_dir=base_dir / out,
        host=host,
        ctl=ctl,
        jt=jt,
        lineshape=ls,
        echo={name: dict(cp.items(name)) for name in cp.sections()},
    )
