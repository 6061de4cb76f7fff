"""Command line interface.

Every computation is a subcommand emitting CSV or JSON (``--format``),
to stdout or to ``--output``.  Floats are printed with 12 significant
digits, so identical inputs give byte-identical output files.  When
``--output`` is used, a run manifest (parameters, outputs, tool version,
timestamp) is written next to each output file; the manifest is the only
place a timestamp appears.

Angular frequencies are rad/s.  ``--trap-freq`` also accepts the literal
form ``2pi*<value><Hz|kHz|MHz|GHz>`` (e.g. ``2pi*500kHz``), which is the
only spelling that applies the 2 pi factor.  Masses are kg, or
``<value>u`` for atomic mass units.  Errors print a single
``error: ...`` line to stderr and exit with status 2.
"""

import argparse
import json
import math
import re
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .angular import HalfInteger
from .catalog import load_catalog, to_transition_spec
from .constants import CODATA2018
from .dynamics import (SimulationConfig, check_envelopes, simulate)
from .equilibrium import (TrapChainConfig, fit_min_spacing_law, length_scale,
                          minimum_spacing, solve_equilibrium)
from .modes import mode_spectrum
from .transitions import (LaserGeometry, geometric_factor,
                          hamiltonian_coefficients, lamb_dicke,
                          rabi_frequency)
from .validity import check_validity, extraneous_mode_sum

ATOMIC_MASS_KG = 1.66053906660e-27  # CODATA 2018

_FREQ_LITERAL = re.compile(
    r"^2pi\*([0-9.eE+-]+)(Hz|kHz|MHz|GHz)?$")
_FREQ_UNITS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, None: 1.0}


def parse_angular_freq(text: str) -> float:
    """rad/s from a bare number, or 2pi*<value><unit> for cyclic input."""
    text = text.strip()
    match = _FREQ_LITERAL.match(text)
    if match:
        value = float(match.group(1)) * _FREQ_UNITS[match.group(2)]
        return 2.0 * math.pi * value
    try:
        return float(text)
    except ValueError:
        raise ValueError(
            f"cannot parse angular frequency {text!r}; use rad/s or 2pi*<value><unit>")


def parse_mass(text: str) -> float:
    """kg from a bare number, or <value>u for atomic mass units."""
    text = text.strip()
    if text.endswith("u"):
        return float(text[:-1]) * ATOMIC_MASS_KG
    return float(text)


def parse_complex_vector(text: str) -> tuple:
    """Three comma-separated complex components, e.g. '0,0,1' or '1,1j,0'."""
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"need exactly 3 comma-separated components in {text!r}")
    return tuple(complex(p.strip().replace(" ", "")) for p in parts)


def parse_real_vector(text: str) -> tuple:
    """Three comma-separated real components, e.g. '1,0,0'."""
    values = parse_complex_vector(text)
    if any(v.imag != 0.0 for v in values):
        raise ValueError(f"components of {text!r} must be real")
    return tuple(v.real for v in values)


def fmt(value) -> str:
    """Fixed 12-significant-digit rendering for floats; passthrough else."""
    if isinstance(value, (float, np.floating)):
        return f"{value:.11e}"
    return str(value)


def round12(value):
    """Round a float to 12 significant digits for JSON output."""
    if isinstance(value, (float, np.floating)):
        return float(f"{value:.11e}")
    return value


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round12(float(obj))
    if isinstance(obj, complex):
        return [round12(obj.real), round12(obj.imag)]
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, HalfInteger):
        return str(obj)
    return obj


def render_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def render_json(payload) -> str:
    return json.dumps(_json_safe(payload), indent=2, sort_keys=False) + "\n"


def rows_to_json(header, rows):
    return [dict(zip(header, row)) for row in rows]


def write_output(text: str, output, manifest: dict) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    path = Path(output)
    path.write_text(text)
    manifest = dict(manifest)
    manifest["outputs"] = [str(path)]
    manifest_path = path.with_name(path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(_json_safe(manifest), indent=2) + "\n")


def build_manifest(subcommand: str, params: dict) -> dict:
    params = {k: v for k, v in params.items()
              if k not in ("func", "default_format", "command")}
    return {
        "schema_version": 1,
        "subcommand": subcommand,
        "parameters": _json_safe(params),
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _physical_config(args, n_ions) -> TrapChainConfig:
    return TrapChainConfig(
        ion_count=n_ions,
        trap_angular_freq=parse_angular_freq(args.trap_freq),
        ion_mass=parse_mass(args.ion_mass),
        ionization_degree=args.ionization,
    )


def cmd_equilibrium(args) -> None:
    positions = solve_equilibrium(args.n_ions, args.tolerance)
    header = ["n_ions", "ion", "position"]
    rows = [[args.n_ions, m + 1, positions[m]] for m in range(args.n_ions)]
    if args.trap_freq is not None and args.ion_mass is not None:
        scale = length_scale(_physical_config(args, args.n_ions))
        header.append("position_m")
        for m, row in enumerate(rows):
            row.append(positions[m] * scale)
    payload = rows_to_json(header, rows)
    text = (render_csv(header, rows) if args.format == "csv"
            else render_json(payload))
    write_output(text, args.output, build_manifest("equilibrium", vars(args)))


def cmd_modes(args) -> None:
    spectrum = mode_spectrum(solve_equilibrium(args.n_ions, args.tolerance))
    n = args.n_ions
    header = (["mode", "eigenvalue"]
              + [f"b{m}" for m in range(1, n + 1)]
              + [f"s{m}" for m in range(1, n + 1)])
    rows = []
    for p in range(n):
        rows.append([p + 1, spectrum.eigenvalues[p]]
                    + list(spectrum.vectors[p])
                    + list(spectrum.couplings[p]))
    if args.format == "csv":
        text = render_csv(header, rows)
    else:
        text = render_json([
            {"mode": p + 1,
             "eigenvalue": spectrum.eigenvalues[p],
             "vector": list(spectrum.vectors[p]),
             "couplings": list(spectrum.couplings[p])}
            for p in range(n)])
    write_output(text, args.output, build_manifest("modes", vars(args)))


def cmd_minsep_fit(args) -> None:
    fit = fit_min_spacing_law(args.n_min, args.n_max, args.tolerance)
    points = []
    for n in range(args.n_min, args.n_max + 1):
        spacing = minimum_spacing(solve_equilibrium(n, args.tolerance))
        points.append({"n_ions": n, "min_spacing": spacing.value,
                       "pair_index": spacing.pair_index,
                       "fit_value": fit.prefactor / n**fit.exponent})
    if args.format == "csv":
        header = ["n_ions", "min_spacing", "pair_index", "fit_value"]
        rows = [[p["n_ions"], p["min_spacing"], p["pair_index"], p["fit_value"]]
                for p in points]
        text = render_csv(header, rows)
    else:
        text = render_json({"n_min": args.n_min, "n_max": args.n_max,
                            "prefactor": fit.prefactor,
                            "exponent": fit.exponent,
                            "points": points})
    write_output(text, args.output, build_manifest("minsep-fit", vars(args)))


def cmd_mode_sum(args) -> None:
    if args.n_min < 2:
        raise ValueError("mode-sum needs at least two ions (n-min >= 2)")
    header = ["n_ions", "mode_sum"]
    rows = [[n, extraneous_mode_sum(n)]
            for n in range(args.n_min, args.n_max + 1)]
    text = (render_csv(header, rows) if args.format == "csv"
            else render_json(rows_to_json(header, rows)))
    write_output(text, args.output, build_manifest("mode-sum", vars(args)))


def _geometry_from_args(args, angular_freq: float) -> LaserGeometry:
    return LaserGeometry(
        field_amplitude=args.field,
        angular_freq=angular_freq,
        axis_angle=args.theta,
        polarization=parse_complex_vector(args.polarization),
        propagation=parse_real_vector(args.propagation),
        placement=args.placement,
        node_index=args.node_index,
        phase=args.phase,
    )


def cmd_rabi(args) -> None:
    catalog = load_catalog(args.catalog)
    matches = [sp for sp in catalog if sp.name == args.species]
    if not matches:
        raise ValueError(f"species {args.species!r} not in {args.catalog}"
                         f" (have {[sp.name for sp in catalog]})")
    species = matches[0]
    record = species.transition(args.transition)
    spec = to_transition_spec(record, HalfInteger.coerce(args.lower_m),
                              HalfInteger.coerce(args.upper_m))
    trap_freq = parse_angular_freq(args.trap_freq)
    cfg = TrapChainConfig(ion_count=args.n_ions, trap_angular_freq=trap_freq,
                          ion_mass=species.mass_kg,
                          ionization_degree=species.ionization_degree)
    geom = _geometry_from_args(
        args, CODATA2018.speed_of_light * record.wavenumber)
    spectrum = mode_spectrum(solve_equilibrium(args.n_ions))
    coeffs = hamiltonian_coefficients(spec, geom, cfg, spectrum,
                                      args.ion, args.detuning)
    result = {
        "species": species.name,
        "transition": record.label,
        "multipole": record.multipole.value,
        "lower_m": str(spec.lower_m),
        "upper_m": str(spec.upper_m),
        "sigma": geometric_factor(spec, geom),
        "rabi": rabi_frequency(spec, geom),
        "lamb_dicke": lamb_dicke(cfg, geom),
        "hamiltonian_kind": coeffs.kind,
        "phase": coeffs.phase,
        "detuning": coeffs.detuning,
        "mode_couplings": [{"mode": p + 1, "coupling": c, "mode_freq": f}
                           for p, (c, f) in enumerate(coeffs.mode_couplings)],
    }
    if args.format == "csv":
        header = ["species", "transition", "multipole", "lower_m", "upper_m",
                  "sigma", "rabi", "lamb_dicke", "hamiltonian_kind", "phase",
                  "detuning"]
        rows = [[result[k] for k in header]]
        text = render_csv(header, rows)
    else:
        text = render_json(result)
    write_output(text, args.output, build_manifest("rabi", vars(args)))


def cmd_simulate(args) -> None:
    trap_freq = parse_angular_freq(args.trap_freq)
    config = SimulationConfig(
        rabi=args.rabi,
        lamb_dicke=args.lamb_dicke,
        trap_angular_freq=trap_freq,
        n_ions=args.n_ions,
        ion_index=args.ion,
        duration=args.duration,
        tolerance=args.tolerance,
        samples=args.samples,
        initial_state=args.initial_state,
        com_only=args.com_only,
    )
    result = simulate(config)
    envelopes = check_envelopes(result)
    report = {
        "n_ions": args.n_ions,
        "ion_index": args.ion,
        "duration_s": result.times[-1],
        "accepted_steps": result.accepted_steps,
        "rejected_steps": result.rejected_steps,
        "max_norm_drift": result.max_norm_drift,
        "max_extraneous_population": result.max_extraneous,
        "envelope_slack": envelopes.slack,
        "envelopes_satisfied": envelopes.all_satisfied,
        "envelopes": [
            {"mode": m.mode,
             "alpha_max": m.alpha_max, "alpha_bound": m.alpha_bound,
             "beta_max": m.beta_max, "beta_bound": m.beta_bound,
             "satisfied": m.satisfied}
            for m in envelopes.modes],
    }
    if args.n_ions >= 2:
        validity = check_validity(args.rabi, args.lamb_dicke, trap_freq,
                                  args.n_ions, args.threshold)
        report["excitation_bound_exact"] = validity.bound_exact
        report["excitation_bound_rounded"] = validity.bound_rounded
        report["bound_respected"] = (
            result.max_extraneous <= validity.bound_exact)
    times, p_lower, p_upper, p_ext = result.population_columns()
    header = ["time_s", "p_lower_vacuum", "p_upper_vacuum", "p_extraneous"]
    rows = list(zip(times, p_lower, p_upper, p_ext))
    if args.output is not None:
        base = Path(args.output)
        csv_path = base.with_suffix(".csv") if base.suffix != ".csv" else base
        report_path = csv_path.with_name(csv_path.stem + ".report.json")
        manifest = build_manifest("simulate", vars(args))
        manifest["outputs"] = [str(csv_path), str(report_path)]
        csv_path.write_text(render_csv(header, rows))
        report_path.write_text(render_json(report))
        manifest_path = csv_path.with_name(csv_path.stem + ".manifest.json")
        manifest_path.write_text(json.dumps(_json_safe(manifest), indent=2) + "\n")
    elif args.format == "csv":
        sys.stdout.write(render_csv(header, rows))
    else:
        sys.stdout.write(render_json(
            {"report": report, "series": rows_to_json(header, rows)}))


def cmd_validity(args) -> None:
    report = check_validity(args.rabi, args.lamb_dicke,
                            parse_angular_freq(args.trap_freq),
                            args.n_ions, args.threshold)
    payload = {
        "n_ions": report.n_ions,
        "rabi": report.rabi,
        "lamb_dicke": report.lamb_dicke,
        "trap_angular_freq": report.trap_angular_freq,
        "mode_sum": report.mode_sum,
        "excitation_bound_exact": report.bound_exact,
        "excitation_bound_rounded": report.bound_rounded,
        "threshold": report.threshold,
        "condition_satisfied": report.condition_satisfied,
    }
    if args.format == "csv":
        header = list(payload)
        text = render_csv(header, [[payload[k] for k in header]])
    else:
        text = render_json(payload)
    write_output(text, args.output, build_manifest("validity", vars(args)))


def _add_common(parser):
    parser.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (default: csv for tables, json for reports)")
    parser.add_argument("--output", default=None,
                        help="write to this file (plus a .manifest.json sidecar)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionchain",
        description="Linear ion chain statics, normal modes, laser couplings "
                    "and sideband dynamics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("equilibrium", help="dimensionless equilibrium positions")
    p.add_argument("n_ions", type=int)
    p.add_argument("--tolerance", type=float, default=1e-13)
    p.add_argument("--trap-freq", default=None,
                   help="axial angular frequency (rad/s or 2pi*<v><unit>) "
                        "to add a meters column")
    p.add_argument("--ion-mass", default=None, help="ion mass (kg or <v>u)")
    p.add_argument("--ionization", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_equilibrium, default_format="csv")

    p = sub.add_parser("modes", help="mode eigenvalues, vectors, couplings")
    p.add_argument("n_ions", type=int)
    p.add_argument("--tolerance", type=float, default=1e-13)
    _add_common(p)
    p.set_defaults(func=cmd_modes, default_format="csv")

    p = sub.add_parser("minsep-fit", help="power-law fit of the smallest ion gap")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--tolerance", type=float, default=1e-13)
    _add_common(p)
    p.set_defaults(func=cmd_minsep_fit, default_format="json")

    p = sub.add_parser("mode-sum",
                       help="spectral sum controlling extraneous-mode excitation")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_mode_sum, default_format="csv")

    p = sub.add_parser("rabi", help="Rabi frequency and coupling geometry "
                                    "from a catalog transition")
    p.add_argument("catalog", help="species catalog JSON file")
    p.add_argument("species")
    p.add_argument("transition", help="transition label, e.g. S1/2-D5/2")
    p.add_argument("--lower-m", required=True,
                   help="lower magnetic quantum number, e.g. ' -1/2'")
    p.add_argument("--upper-m", required=True,
                   help="upper magnetic quantum number, e.g. 3/2")
    p.add_argument("--field", type=float, required=True, help="field amplitude V/m")
    p.add_argument("--theta", type=float, default=0.0,
                   help="beam angle to the trap axis, rad")
    p.add_argument("--polarization", default="0,0,1",
                   help="complex unit 3-vector, comma separated")
    p.add_argument("--propagation", default="1,0,0",
                   help="real unit 3-vector, comma separated")
    p.add_argument("--placement", choices=("node", "antinode"), default="node")
    p.add_argument("--node-index", type=int, default=0)
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--detuning", type=float, default=0.0,
                   help="laser detuning from the transition, rad/s")
    p.add_argument("--trap-freq", required=True)
    p.add_argument("--n-ions", type=int, default=1)
    p.add_argument("--ion", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_rabi, default_format="json")

    p = sub.add_parser("simulate", help="integrate the sideband amplitude equations")
    p.add_argument("--rabi", type=float, required=True, help="rad/s")
    p.add_argument("--lamb-dicke", type=float, required=True)
    p.add_argument("--trap-freq", required=True)
    p.add_argument("--n-ions", type=int, required=True)
    p.add_argument("--ion", type=int, default=1)
    p.add_argument("--duration", type=float, default=None,
                   help="seconds (default: 10 sideband cycles)")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--samples", type=int, default=2001)
    p.add_argument("--initial-state", choices=("upper-vacuum", "lower-com-phonon"),
                   default="upper-vacuum")
    p.add_argument("--com-only", action="store_true",
                   help="drop couplings to every mode but the center-of-mass one")
    p.add_argument("--threshold", type=float, default=0.01)
    _add_common(p)
    p.set_defaults(func=cmd_simulate, default_format="csv")

    p = sub.add_parser("validity", help="single-mode sufficiency condition")
    p.add_argument("--rabi", type=float, required=True)
    p.add_argument("--lamb-dicke", type=float, required=True)
    p.add_argument("--trap-freq", required=True)
    p.add_argument("--n-ions", type=int, required=True)
    p.add_argument("--threshold", type=float, default=0.01)
    _add_common(p)
    p.set_defaults(func=cmd_validity, default_format="json")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        args.func(args)
    except (ValueError, TypeError, KeyError, RuntimeError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
