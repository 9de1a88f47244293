"""Command-line front end: ``ssm-beam <command> --config FILE [--out DIR]``.

Exit codes: 0 success, 1 assumptions violated (``check``), 2 bad configuration,
3 resonance, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import forced_ssm, galerkin, model, ssm_unforced
from .errors import ConfigError, IntegrationError, ResonanceError, SingularBasisError
from .model import BeamParameters, ForcingSpec

EXIT_OK, EXIT_ASSUMPTIONS, EXIT_CONFIG, EXIT_RESONANCE, EXIT_NUMERICAL = 0, 1, 2, 3, 4

COMMANDS = ("spectrum", "check", "ssm", "backbone", "simulate", "validate", "poincare", "forced")

BEAM_KEYS = ("alpha", "beta", "gamma", "delta", "mu", "kappa", "epsilon", "omega")

RUN_DEFAULTS = {
    "n_max": 50,
    "m_max": 100,
    "tol": 1e-10,
    "mass_normalized": True,
    "r_max": 0.5,
    "r_points": 51,
    "kappa_sweep": None,
    "amp_norm": "state",
    "t_final": 20.0,
    "sample_dt": 0.1,
    "init_mode": 1,
    "init_displacement": 0.1,
    "init_velocity": 0.0,
    "z0": 0.05,
    "z0_phase": 0.0,
    "theta0": 0.0,
    "newton_tol": 1e-12,
    "strobe_iterations": 50,
    "strobe_z0": 0.1,
}


def fmt(x):
    return f"{float(x):.17g}"


@dataclass
class RunConfig:
    params: BeamParameters
    forcing: ForcingSpec
    galerkin: galerkin.GalerkinConfig
    output_dir: Path
    options: dict = field(default_factory=dict)


class _Source:
    """Raw config text, kept to report line numbers for bad values."""

    def __init__(self, path):
        self.path = Path(path)
        self.lines = self.path.read_text().splitlines()

    def line_of(self, section, key):
        current = None
        for i, raw in enumerate(self.lines, 1):
            line = raw.strip()
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
            elif current == section and line.split("=", 1)[0].split(":", 1)[0].strip().lower() == key:
                return i
        return None

    def error(self, section, key, message):
        line = self.line_of(section, key)
        where = f"{self.path}:{line}" if line else f"{self.path} [{section}]"
        return ConfigError(f"{where}: {key}: {message}")


def _number(src, parser, section, key, kind=float):
    raw = parser.get(section, key)
    try:
        value = kind(raw)
    except ValueError:
        raise src.error(section, key, f"expected {kind.__name__}, got {raw!r}") from None
    if kind is float and not math.isfinite(value):
        raise src.error(section, key, "must be finite")
    return value


def _bool(src, parser, section, key):
    try:
        return parser.getboolean(section, key)
    except ValueError:
        raise src.error(section, key, f"expected a boolean, got {parser.get(section, key)!r}") from None


def _float_list(src, parser, section, key):
    raw = parser.get(section, key)
    try:
        values = [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise src.error(section, key, f"expected a comma-separated list of numbers, got {raw!r}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise src.error(section, key, "list must be non-empty and finite")
    return values


def _modal_amplitudes(src, parser):
    raw = parser.get("forcing", "modes", fallback="1:1.0")
    out = {}
    for item in raw.replace(";", ",").split(","):
        if not item.strip():
            continue
        try:
            n, c = item.split(":")
            out[int(n)] = float(c)
        except ValueError:
            raise src.error("forcing", "modes", f"expected entries 'mode:amplitude', got {item.strip()!r}") from None
    return out


def load_config(path, output_dir=None):
    """Parse an INI file with sections ``[beam]``, ``[forcing]``, ``[galerkin]``, ``[run]``."""
    src = _Source(path)
    parser = configparser.ConfigParser()
    try:
        parser.read_string("\n".join(src.lines), source=str(src.path))
    except configparser.Error as exc:
        raise ConfigError(f"{src.path}: {exc}") from None
    if not parser.has_section("beam"):
        raise ConfigError(f"{src.path}: missing [beam] section")

    beam = {}
    for key in parser.options("beam"):
        if key not in BEAM_KEYS:
            raise src.error("beam", key, "unknown parameter")
        beam[key] = _number(src, parser, "beam", key)
    missing = [k for k in ("alpha", "beta", "gamma", "delta", "mu") if k not in beam]
    if missing:
        raise ConfigError(f"{src.path}: [beam] is missing {', '.join(missing)}")

    forcing_section = parser.has_section("forcing")
    if forcing_section and parser.has_option("forcing", "omega"):
        beam["omega"] = _number(src, parser, "forcing", "omega")
    if forcing_section and parser.has_option("forcing", "epsilon"):
        beam["epsilon"] = _number(src, parser, "forcing", "epsilon")
    try:
        params = BeamParameters.from_mapping(beam)
    except (ConfigError, ValueError) as exc:
        raise ConfigError(f"{src.path}: {exc}") from None
    amplitudes = _modal_amplitudes(src, parser) if forcing_section else {1: 1.0}
    try:
        forcing = ForcingSpec(amplitudes, params.omega)
    except ValueError as exc:
        raise src.error("forcing", "modes", str(exc)) from None

    gal = {}
    if parser.has_section("galerkin"):
        for key in parser.options("galerkin"):
            if key in ("n_modes",):
                gal[key] = _number(src, parser, "galerkin", key, int)
            elif key in ("dt", "abs_tol", "rel_tol"):
                gal[key] = _number(src, parser, "galerkin", key)
            elif key == "integrator":
                gal[key] = parser.get("galerkin", key).strip()
            else:
                raise src.error("galerkin", key, "unknown option")
    try:
        gconf = galerkin.GalerkinConfig(**gal)
    except ConfigError as exc:
        raise ConfigError(f"{src.path}: {exc}") from None

    options = dict(RUN_DEFAULTS)
    if parser.has_section("run"):
        for key in parser.options("run"):
            if key not in RUN_DEFAULTS:
                raise src.error("run", key, "unknown option")
            default = RUN_DEFAULTS[key]
            if key == "kappa_sweep":
                options[key] = _float_list(src, parser, "run", key)
            elif key == "amp_norm":
                options[key] = parser.get("run", key).strip()
            elif isinstance(default, bool):
                options[key] = _bool(src, parser, "run", key)
            elif isinstance(default, int):
                options[key] = _number(src, parser, "run", key, int)
            else:
                options[key] = _number(src, parser, "run", key)
    _validate_options(src, options, gconf)

    out = Path(output_dir) if output_dir is not None else Path(".")
    return RunConfig(params, forcing, gconf, out, options)


def _validate_options(src, o, gconf):
    checks = [
        ("n_max", o["n_max"] >= 1, "must be >= 1"),
        ("m_max", o["m_max"] >= 1, "must be >= 1"),
        ("tol", o["tol"] > 0, "must be positive"),
        ("r_max", o["r_max"] > 0, "must be positive"),
        ("r_points", o["r_points"] >= 2, "must be >= 2"),
        ("amp_norm", o["amp_norm"] in ssm_unforced.AMP_NORMS, f"must be one of {ssm_unforced.AMP_NORMS}"),
        ("t_final", o["t_final"] > 0, "must be positive"),
        ("sample_dt", o["sample_dt"] > 0, "must be positive"),
        ("init_mode", 1 <= o["init_mode"] <= gconf.n_modes, f"must lie in 1..{gconf.n_modes}"),
        ("z0", o["z0"] > 0, "must be positive"),
        ("newton_tol", o["newton_tol"] > 0, "must be positive"),
        ("strobe_iterations", o["strobe_iterations"] >= 0, "must be >= 0"),
    ]
    for key, ok, message in checks:
        if not ok:
            raise src.error("run", key, message)


# writers


def _write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, (int, str)) else fmt(v) for v in row])
    return path


def _write_json(path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _complex_pair(z):
    return [float(np.real(z)), float(np.imag(z))]


# commands


def cmd_spectrum(cfg):
    n = np.arange(1, cfg.options["n_max"] + 1)
    lp, lm = model.eigenvalues_array(cfg.params, n)
    rows = [(int(k), p.real, p.imag, m.real, m.imag) for k, p, m in zip(n, lp, lm)]
    _write_csv(cfg.output_dir / "spectrum.csv", ["n", "re_plus", "im_plus", "re_minus", "im_minus"], rows)
    if cfg.params.mu > 0:
        print(f"real_part_limit = {fmt(model.real_part_limit(cfg.params))}")
    else:
        print("real_part_limit = undefined (mu = 0)")
    return EXIT_OK


def cmd_check(cfg):
    p = cfg.params
    report = model.check_assumptions(p, cfg.options["n_max"], tol=cfg.options["tol"], m_max=cfg.options["m_max"])
    for key, value in report.as_record().items():
        print(f"{key} = {value}")
    if report.all_hold:
        print("all assumptions hold")
        return EXIT_OK
    if p.delta * p.mu >= p.beta:
        print("note: delta*mu >= beta, fast-manifold regime (a unique attracting fast manifold can be extracted instead)")
    print("assumptions violated")
    return EXIT_ASSUMPTIONS


def _ssm(cfg, params=None):
    return ssm_unforced.build_ssm(params or cfg.params, mass_normalized=cfg.options["mass_normalized"])


def cmd_ssm(cfg):
    table, reduced = _ssm(cfg)
    payload = {
        "lambda1": _complex_pair(reduced.lambda1),
        "R0": _complex_pair(reduced.R0),
        "mass_normalized": table.mass_normalized,
        "coefficients": table.as_serializable(),
    }
    _write_json(cfg.output_dir / "ssm.json", payload)
    print(f"im_R0 = {fmt(reduced.R0.imag)}")
    return EXIT_OK


def _backbone_rows(cfg, params):
    table, reduced = _ssm(cfg, params)
    r = np.linspace(0.0, cfg.options["r_max"], cfg.options["r_points"])
    points = ssm_unforced.backbone(reduced, table, r, amp_norm=cfg.options["amp_norm"])
    return [(pt.r, pt.omega_inst, pt.amplitude) for pt in points]


def cmd_backbone(cfg):
    header = ["r", "omega_inst", "amplitude"]
    _write_csv(cfg.output_dir / "backbone.csv", header, _backbone_rows(cfg, cfg.params))
    for kappa in cfg.options["kappa_sweep"] or []:
        name = f"backbone_kappa_{kappa:g}.csv"
        _write_csv(cfg.output_dir / name, header, _backbone_rows(cfg, cfg.params.replace(kappa=kappa)))
    print(f"amp_norm = {cfg.options['amp_norm']}")
    return EXIT_OK


def _initial_state(cfg):
    n = cfg.galerkin.n_modes
    a, b = np.zeros(n), np.zeros(n)
    a[cfg.options["init_mode"] - 1] = cfg.options["init_displacement"]
    b[cfg.options["init_mode"] - 1] = cfg.options["init_velocity"]
    return galerkin.GalerkinState(a, b)


def cmd_simulate(cfg):
    n = cfg.galerkin.n_modes
    traj = galerkin.integrate(
        cfg.params, cfg.forcing, cfg.galerkin, _initial_state(cfg),
        cfg.options["t_final"], sample_dt=cfg.options["sample_dt"],
    )
    header = ["t"] + [f"a{i}" for i in range(1, n + 1)] + [f"b{i}" for i in range(1, n + 1)]
    _write_csv(cfg.output_dir / "simulate.csv", header, ([t, *y] for t, y in zip(traj.times, traj.states)))
    energy_rows = ([t, *e.as_row()] for t, e in zip(traj.times, galerkin.energy_trace(cfg.params, traj)))
    _write_csv(
        cfg.output_dir / "simulate_energy.csv",
        ["t", "total", "kinetic", "bending", "foundation", "rotary", "quartic"],
        energy_rows,
    )
    return EXIT_OK


def cmd_validate(cfg):
    table, reduced = _ssm(cfg)
    z0 = cfg.options["z0"] * np.exp(1j * cfg.options["z0_phase"])
    report = galerkin.validate_ssm(
        cfg.params, table, reduced, cfg.galerkin, z0, cfg.options["t_final"], sample_dt=cfg.options["sample_dt"],
    )
    rows = (
        (t, z.real, z.imag, d, w, wp)
        for t, z, d, w, wp in zip(report.times, report.z_hat, report.distance, report.phase_rate, report.omega_predicted)
    )
    _write_csv(cfg.output_dir / "validate.csv", ["t", "re_z", "im_z", "distance", "phase_rate", "omega_inst"], rows)
    text = "\n".join(report.summary_lines()) + "\n"
    (cfg.output_dir / "validate.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_poincare(cfg):
    result = galerkin.poincare_fixed_point(
        cfg.params, cfg.forcing, cfg.galerkin, cfg.options["theta0"], tol=cfg.options["newton_tol"],
    )
    st = result.state
    rows = [(i, a, b) for i, (a, b) in enumerate(zip(st.a, st.b), 1)]
    _write_csv(cfg.output_dir / "poincare.csv", ["n", "a", "b"], rows)
    print(f"iterations = {result.iterations}")
    print(f"residual = {result.residual:.3e}")
    return EXIT_OK


def cmd_forced(cfg):
    p = cfg.params
    orbit = forced_ssm.linear_periodic_response(p, cfg.forcing, p.epsilon, tol=cfg.options["tol"])
    rows = [(n, m, w.real, w.imag) for (n, m), w in sorted(orbit.coefficients.items())]
    _write_csv(cfg.output_dir / "forced_orbit.csv", ["n", "m", "re", "im"], rows)

    table, _ = _ssm(cfg)
    fmodel, first = forced_ssm.first_order_coefficients(p, cfg.forcing, table)
    samples = forced_ssm.stroboscopic_samples(
        fmodel, cfg.options["strobe_z0"], cfg.options["theta0"], cfg.options["strobe_iterations"],
    )
    _write_csv(cfg.output_dir / "forced.csv", ["k", "re_z", "im_z"], ((k, z.real, z.imag) for k, z in enumerate(samples)))
    entries = {
        f"{n1},{n2}": {f"{mode},{m}": [_complex_pair(c) for c in vec] for (mode, m), vec in sorted(per.items())}
        for (n1, n2), per in sorted(first.entries.items())
    }
    _write_json(cfg.output_dir / "forced.json", {"rho": _complex_pair(fmodel.rho), "first_order": entries})
    return EXIT_OK


HANDLERS = {
    "spectrum": cmd_spectrum,
    "check": cmd_check,
    "ssm": cmd_ssm,
    "backbone": cmd_backbone,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "poincare": cmd_poincare,
    "forced": cmd_forced,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="ssm-beam", description="Slow spectral submanifold toolkit for a damped Rayleigh beam.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="INI configuration file")
    parser.add_argument("--out", default=".", help="output directory (default: current directory)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.out)
        return HANDLERS[args.command](cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResonanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except (IntegrationError, SingularBasisError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
