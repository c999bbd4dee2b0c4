"""Command-line front end: ``defect-photonics <ctl|jt|lineshape|all> --config <path> [--out <dir>]``.

Exit codes: 0 success, 2 bad input (parse, config, missing file), 3
infeasible physics. Every run, failed or not, leaves a ``manifest.json``
in the output directory. The output directory is taken from ``--out``,
then the ``DEFECT_PHOTONICS_OUT`` environment variable, then the config.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from . import charge_levels, jahn_teller, vibronic
from .errors import ConfigError, DefectPhotonicsError, InputError
from .ingest import (
    JOB_KINDS,
    parse_charge_records,
    parse_config,
    parse_phonons,
    parse_structure,
    write_table,
)

OUT_ENV = "DEFECT_PHOTONICS_OUT"
MANIFEST_NAME = "manifest.json"
STAGES = ("ctl", "jt", "lineshape")

OUTPUT_FILES = {
    "ctl": ("ctl_transitions.csv", "ctl_stability.csv"),
    "jt": ("jt_extrema.csv", "jt_linear_scan.csv", "jt_circular_scan.csv"),
    "lineshape": ("hr_decomposition.csv", "spectral_density.csv", "lineshape.csv"),
}


class _Run:
    """Book-keeping for one invocation: input digests, outputs, stage timings."""

    def __init__(self, out_dir: Path, base_dir: Path):
        self.out_dir = out_dir
        self.base_dir = base_dir
        self.inputs = {}
        self.outputs = []
        self.stages = []
        self.summary = {}

    def _label(self, path: Path) -> str:
        try:
            return os.path.relpath(path, self.base_dir)
        except ValueError:  # different drive on Windows
            return str(path)

    def read(self, path: Path) -> str:
        label = self._label(path)
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise ConfigError(f"{label}: cannot read input file ({exc.strerror or exc})") from None
        self.inputs[label] = hashlib.sha256(data).hexdigest()
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError:
            raise ConfigError(f"{label}: input is not UTF-8 text") from None

    def load(self, path: Path, parser, **kwargs):
        text = self.read(path)
        try:
            return parser(text, **kwargs)
        except InputError as exc:
            exc.args = (f"{self._label(path)}: {exc}",)
            raise

    def write(self, name: str, rows, headers):
        text = write_table(rows, headers)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        (self.out_dir / name).write_bytes(data)
        self.outputs.append({"file": name, "rows": len(rows), "sha256": hashlib.sha256(data).hexdigest()})


# ------------------------------------------------------------------- stages


def run_ctl(cfg, run: _Run, echo=print):
    host = cfg.host
    records = run.load(cfg.ctl.records, parse_charge_records)
    if cfg.ctl.correction == "point_charge":
        records = charge_levels.with_point_charge_corrections(records, host)
    diagram = charge_levels.stability_diagram(records, host)
    on_envelope = {(q1, q2) for q1, q2, _ in diagram.transitions}
    levels = charge_levels.all_transition_levels(records, host)
    run.write(OUTPUT_FILES["ctl"][0], [(q1, q2, eps, int((q1, q2) in on_envelope)) for q1, q2, eps in levels],
              ("q1", "q2", "eps_eV", "on_envelope"))
    run.write(OUTPUT_FILES["ctl"][1], list(diagram.intervals), ("fermi_low_eV", "fermi_high_eV", "q"))
    q_mid = diagram.stable_charge(host.fermi_intrinsic)
    run.summary["ctl"] = {"fermi_intrinsic_eV": host.fermi_intrinsic, "stable_q": q_mid,
                          "degenerate_crossings": len(diagram.ties)}
    echo(f"ctl: stable charge at E_F = {host.fermi_intrinsic:.6g} eV is q = {q_mid:+d}")


def run_jt(cfg, run: _Run, echo=print):
    opt = cfg.jt
    if opt.delta is not None:
        model = jahn_teller.fit_from_delta_barrier(opt.delta, opt.barrier, opt.k_force)
    else:
        model = jahn_teller.JTModel(opt.k_force, opt.f_lin, opt.g_quad)
    ext = jahn_teller.extrema(model)
    lin = jahn_teller.linear_scan(model, opt.n_linear)
    rho = opt.circle_rho if opt.circle_rho is not None else jahn_teller.minimum_radius(model)
    circ = jahn_teller.circular_scan(model, rho, opt.n_circular)
    delta, barrier = jahn_teller.stabilization_and_barrier(model)
    run.write(OUTPUT_FILES["jt"][0], [(e.rho, e.phi, e.energy, int(e.kind == "minimum")) for e in ext],
              ("rho", "phi_rad", "energy_meV", "is_minimum"))
    run.write(OUTPUT_FILES["jt"][1], lin.rows(), ("s", "energy_meV"))
    run.write(OUTPUT_FILES["jt"][2], circ.rows(), ("phi_rad", "energy_meV"))
    run.summary["jt"] = {"k_force_meV": model.k_force, "f_lin_meV": model.f_lin, "g_quad_meV": model.g_quad,
                         "delta_meV": delta, "barrier_meV": barrier, "circle_rho": rho}
    echo(f"jt: F = {model.f_lin:.10g} meV, G = {model.g_quad:.10g} meV "
         f"(delta = {delta:.10g} meV, barrier = {barrier:.10g} meV)")


def run_lineshape(cfg, run: _Run, echo=print):
    opt = cfg.lineshape
    ground = run.load(opt.ground, parse_structure)
    excited = run.load(opt.excited, parse_structure)
    modes = run.load(opt.phonons, parse_phonons, reference=ground)
    dq = vibronic.mode_displacements(ground, excited, modes)
    hr = vibronic.partial_hr_factors(dq, modes.frequencies)
    sd = vibronic.spectral_density(hr, opt.grid_max, opt.grid_step, opt.sigma)
    result = vibronic.lineshape(sd, opt.zpl, opt.gamma_zpl, hr.s_total)
    run.write(OUTPUT_FILES["lineshape"][0],
              [(k, w, s, d) for (k, w, s), d in zip(hr.rows(), hr.displacements.tolist())],
              ("mode", "hbar_omega_meV", "S_k", "dq_amu12_A"))
    run.write(OUTPUT_FILES["lineshape"][1], sd.rows(), ("energy_meV", "S_per_meV"))
    run.write(OUTPUT_FILES["lineshape"][2], result.rows(), ("E_eV", "A_per_eV", "L"))
    run.summary["lineshape"] = {"e_zpl_eV": result.e_zpl, "dw": result.dw, "s_total": result.s_total,
                                "zero_modes": [k + 1 for k in hr.zero_modes]}
    echo(f"lineshape: dw = {result.dw:.10g}, s_total = {result.s_total:.10g}")


RUNNERS = {"ctl": run_ctl, "jt": run_jt, "lineshape": run_lineshape}


# ----------------------------------------------------------------- manifest


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _write_manifest(run: _Run, kind, config_echo, exit_code, error):
    manifest = {
        "tool": "defect-photonics",
        "version": __version__,
        "kind": kind,
        "config": config_echo,
        "inputs": dict(sorted(run.inputs.items())),
        "outputs": run.outputs,
        "stages": run.stages,
        "completed_stages": [s["name"] for s in run.stages if s["status"] == "ok"],
        "summary": _json_safe(run.summary),
        "exit_code": exit_code,
        "error": error,
    }
    run.out_dir.mkdir(parents=True, exist_ok=True)
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    (run.out_dir / MANIFEST_NAME).write_text(text, encoding="utf-8")
    return manifest


# --------------------------------------------------------------------- main


def _parser():
    p = argparse.ArgumentParser(prog="defect-photonics", description=__doc__.splitlines()[0])
    p.add_argument("kind", choices=JOB_KINDS, help="analysis to run")
    p.add_argument("--config", required=True, type=Path, help="INI run configuration")
    p.add_argument("--out", type=Path, default=None, help=f"output directory (overrides ${OUT_ENV} and the config)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def execute(kind: str, config_path: Path, out: Path | None = None, echo=print) -> int:
    """Run one job and return its exit code. Progress goes to ``echo``, diagnostics to stderr."""
    config_path = Path(config_path)
    base_dir = config_path.parent
    try:
        raw = config_path.read_bytes()
    except OSError as exc:
        print(f"error: {config_path}: cannot read config ({exc.strerror or exc})", file=sys.stderr)
        return ConfigError.exit_code
    try:
        cfg = parse_config(raw.decode("utf-8"), base_dir=base_dir, kind=kind)
    except UnicodeDecodeError:
        print(f"error: {config_path}: config is not UTF-8 text", file=sys.stderr)
        return ConfigError.exit_code
    except DefectPhotonicsError as exc:
        print(f"error: {config_path}: {exc}", file=sys.stderr)
        return exc.exit_code

    env_out = os.environ.get(OUT_ENV)
    out_dir = Path(out) if out is not None else Path(env_out) if env_out else cfg.output_dir
    run = _Run(out_dir, base_dir)
    run.inputs[os.path.relpath(config_path, base_dir)] = hashlib.sha256(raw).hexdigest()

    stages = STAGES if cfg.kind == "all" else (cfg.kind,)
    exit_code, error = 0, None
    for name in stages:
        t0 = time.perf_counter()
        try:
            RUNNERS[name](cfg, run, echo=echo)
        except DefectPhotonicsError as exc:
            exit_code, error = exc.exit_code, f"{name}: {type(exc).__name__}: {exc}"
        except OSError as exc:
            exit_code, error = InputError.exit_code, f"{name}: cannot write output ({exc})"
        status = "ok" if error is None else "failed"
        run.stages.append({"name": name, "status": status, "seconds": round(time.perf_counter() - t0, 6)})
        if error is not None:
            print(f"error: {error}", file=sys.stderr)
            break
    try:
        _write_manifest(run, cfg.kind, cfg.echo, exit_code, error)
    except OSError as exc:
        print(f"error: cannot write manifest ({exc})", file=sys.stderr)
        return exit_code or InputError.exit_code
    return exit_code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    return execute(args.kind, args.config, args.out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
