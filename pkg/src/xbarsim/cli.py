"""Command-line surface.

One subcommand per analysis; results land in the configured output file as
CSV or JSON with the fully resolved configuration embedded, so any emitted
file can be re-run bit-identically.  Exit codes: 0 success, 1 invalid input,
2 numerical failure, 3 settling timeout.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import compute_bandwidth, compute_energy, monte_carlo, run_sweep
from .config import load_config, parse_config
from .errors import (
    InvalidInputError,
    NumericalFailureError,
    SettlingTimeoutError,
    SimulationError,
)
from .ideal import dot_product_error, ideal_current_mode, ideal_voltage_mode
from .network import DriveMode, assemble, build_topology
from .neuron import (
    NeuronPreset,
    builtin_presets,
    fit_sigmoid,
    neuron_transfer,
    preset_by_label,
    sigmoid,
)
from .solver import solve_dc

__all__ = ["main"]


def _fmt(value: float) -> str:
    """Round-trip-safe rendering: 17 significant digits."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def render_json(obj, indent: int = 0) -> str:
    """JSON with floats at 17 significant digits (json.loads-compatible;
    infinities render as Infinity)."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  "{k}": {render_json(v, indent + 1)}' for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ", ".join(render_json(v, indent + 1) for v in obj)
        return "[" + items + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isinf(value):
            return "Infinity" if value > 0 else "-Infinity"
        if math.isnan(value):
            return "NaN"
        return _fmt(value)
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _write_csv(path: Path, header, rows, config_tree):
    lines = ["# config = " + render_json(config_tree).replace("\n", " ")]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, command, results, config_tree):
    doc = {"command": command, "results": results, "config": config_tree}
    path.write_text(render_json(doc) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # map usage errors onto exit code 1
        raise InvalidInputError(message)


def _load(args, need_crossbar=False):
    overrides = args.set or []
    if args.config:
        rc = load_config(args.config, overrides)
    elif overrides:
        rc = parse_config({}, overrides)
    else:
        rc = None
    if need_crossbar and rc is None:
        raise InvalidInputError("this subcommand needs --config (or --set overrides)")
    return rc


def _out_path(args, rc, fmt):
    base = args.out or (rc.output_path if rc else "out")
    path = Path(base)
    if path.suffix not in (".csv", ".json"):
        path = path.with_name(path.name + "." + fmt)
    return path


def _out_format(args, rc):
    if args.format:
        return args.format
    return rc.output_format if rc else "json"


def _drive(rc):
    drive = rc.analysis.get("drive")
    if drive is None:
        return np.ones(rc.crossbar.n_rows)
    return np.asarray(drive, dtype=float)


def _config_tree(rc):
    return rc.resolved if rc else {}


def _emit(args, rc, command, results, csv_header, csv_rows):
    fmt = _out_format(args, rc)
    path = _out_path(args, rc, fmt)
    if fmt == "csv":
        _write_csv(path, csv_header, csv_rows, _config_tree(rc))
    else:
        _write_json(path, command, results, _config_tree(rc))
    print(f"{command}: wrote {path}")
    return path


def _cmd_dotprod(args):
    rc = _load(args, need_crossbar=True)
    cfg = rc.crossbar
    drive = _drive(rc)
    sys_ = assemble(build_topology(cfg), cfg, drive)
    dc = solve_dc(sys_)
    if cfg.mode is DriveMode.VOLTAGE:
        ideal = ideal_voltage_mode(cfg.g, drive)
    else:
        ideal = ideal_current_mode(cfg.g, drive)
    results = {
        "mode": cfg.mode.value,
        "ideal_ampere": ideal.tolist(),
        "simulated_ampere": dc.column_currents.tolist(),
        "dot_product_error": dot_product_error(dc.column_currents, ideal),
    }
    rows = [
        (j, ideal[j], dc.column_currents[j])
        for j in range(cfg.n_cols)
    ]
    _emit(args, rc, "dotprod", results, ["column", "ideal_ampere", "simulated_ampere"], rows)


def _cmd_sweep(args):
    rc = _load(args, need_crossbar=True)
    a = rc.analysis
    parameter = args.parameter or a["sweep_parameter"]
    values = a.get("sweep_values")
    if args.values:
        values = [float(v) for v in args.values.split(",")]
    if values is None:
        raise InvalidInputError("sweep needs analysis.sweep_values (or --values)")
    metrics = args.metrics.split(",") if args.metrics else a["metrics"]
    seed = args.seed if args.seed is not None else a["seed"]
    result = run_sweep(
        rc.crossbar,
        parameter,
        values,
        metrics,
        drive=_drive(rc),
        column=a["column"],
        settle_rel=a["settle_rel"],
        seed=seed,
    )
    results = {
        "axis_name": result.axis_name,
        "axis_values": result.axis_values.tolist(),
        "metrics": {k: v.tolist() for k, v in result.metrics.items()},
        "metadata": result.metadata,
    }
    header = [result.axis_name] + list(result.metrics)
    rows = [
        [result.axis_values[i]] + [result.metrics[m][i] for m in result.metrics]
        for i in range(len(result.axis_values))
    ]
    _emit(args, rc, "sweep", results, header, rows)


def _cmd_bandwidth(args):
    rc = _load(args, need_crossbar=True)
    column = args.column if args.column is not None else rc.analysis["column"]
    bw = compute_bandwidth(rc.crossbar, column=column, drive=_drive(rc))
    results = {"column": column, "bandwidth_hz": bw}
    _emit(args, rc, "bandwidth", results, ["column", "bandwidth_hz"], [(column, bw)])


def _cmd_energy(args):
    rc = _load(args, need_crossbar=True)
    a = rc.analysis
    energy = compute_energy(
        rc.crossbar,
        drive=_drive(rc),
        settle_rel=a["settle_rel"],
        window=a.get("window"),
        max_time=a.get("max_settle_time"),
    )
    results = {"energy_joule": energy}
    _emit(args, rc, "energy", results, ["energy_joule"], [(energy,)])


def _cmd_montecarlo(args):
    rc = _load(args, need_crossbar=True)
    a = rc.analysis
    seed = args.seed if args.seed is not None else a["seed"]
    stats = monte_carlo(
        rc.crossbar,
        n=a["mc_samples"],
        seed=seed,
        g_std=a["mc_g_std"],
        neuron_std=a["mc_neuron_std"],
        observable=a["mc_observable"],
        neuron=rc.neuron,
        drive=_drive(rc),
        column=a["column"],
        ramp_points=a["mc_ramp_points"],
    )
    results = {
        "observable": a["mc_observable"],
        "n_samples": stats.n_samples,
        "seed": stats.seed,
        "means": stats.means,
        "stds": stats.stds,
        "clamp_fraction": stats.clamp_fraction,
        "clamp_warning": stats.clamp_warning,
    }
    rows = [(k, stats.means[k], stats.stds[k]) for k in stats.means]
    _emit(args, rc, "montecarlo", results, ["observable", "mean", "std"], rows)


def _read_samples_csv(path):
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"sample file {str(path)!r} does not exist")
    samples = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise InvalidInputError(f"{path}:{lineno}: expected 'x,y', got {line!r}")
        try:
            samples.append((float(parts[0]), float(parts[1])))
        except ValueError:
            if lineno == 1:
                continue  # header row
            raise InvalidInputError(f"{path}:{lineno}: non-numeric sample {line!r}") from None
    return samples


def _cmd_fit_sigmoid(args):
    rc = _load(args)
    if not args.data:
        raise InvalidInputError("fit-sigmoid needs --data <csv of x,y samples>")
    params = fit_sigmoid(_read_samples_csv(args.data))
    results = {
        "a": params.a,
        "b": params.b,
        "c": params.c,
        "rmse": params.rmse,
        "converged": params.converged,
    }
    rows = [(params.a, params.b, params.c, params.rmse, params.converged)]
    _emit(args, rc, "fit-sigmoid", results, ["a", "b", "c", "rmse", "converged"], rows)


def _cmd_neuron_transfer(args):
    rc = _load(args)
    if args.preset:
        neuron = preset_by_label(args.preset)
    elif rc is not None:
        neuron = rc.neuron
    else:
        neuron = preset_by_label("cm-1.8")
    params = neuron.params if isinstance(neuron, NeuronPreset) else neuron
    unit = params.unit or "out"

    ramp = rc.analysis.get("ramp") if rc else None
    value = args.input if args.input is not None else (rc.analysis.get("input") if rc else None)
    if value is not None:
        if isinstance(neuron, NeuronPreset):
            out = neuron_transfer(neuron, value)
        else:
            out = sigmoid(params, value)
        results = {"input_ampere": value, f"output_{unit}": out}
        _emit(args, rc, "neuron-transfer", results,
              ["input_ampere", f"output_{unit}"], [(value, out)])
    elif ramp and "low" in ramp and "high" in ramp:
        x = np.linspace(ramp["low"], ramp["high"], ramp["points"])
        y = sigmoid(params, x)
        results = {"input_ampere": x.tolist(), f"output_{unit}": y.tolist()}
        _emit(args, rc, "neuron-transfer", results,
              ["input_ampere", f"output_{unit}"], list(zip(x, y)))
    else:
        raise InvalidInputError(
            "neuron-transfer needs --input, analysis.input, or an analysis.ramp block"
        )


def _cmd_presets(args):
    rc = _load(args)
    rows = []
    results = []
    for p in builtin_presets():
        entry = {
            "label": p.label,
            "a": p.params.a,
            "b": p.params.b,
            "c": p.params.c,
            "rmse": p.params.rmse,
            "unit": p.params.unit,
            "z_in_ohm": p.z_in,
            "bandwidth_hz": p.bandwidth,
            "power_watt": p.power,
            "vdd_volt": p.vdd,
        }
        results.append(entry)
        rows.append(tuple(entry.values()))
    header = ["label", "a", "b", "c", "rmse", "unit",
              "z_in_ohm", "bandwidth_hz", "power_watt", "vdd_volt"]
    _emit(args, rc, "presets", {"presets": results}, header, rows)


def _build_parser():
    parser = _Parser(prog="xbarsim", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, func, help_text, extra=()):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="path to a .toml or .json run configuration")
        p.add_argument("--out", help="output file path (extension added from format)")
        p.add_argument("--format", choices=("csv", "json"), help="output format")
        p.add_argument("--seed", type=int, help="override the analysis seed")
        p.add_argument("--set", action="append", metavar="KEY.PATH=VALUE",
                       help="override a config key (repeatable)")
        for args_, kwargs in extra:
            p.add_argument(*args_, **kwargs)
        p.set_defaults(func=func)
        return p

    add("dotprod", _cmd_dotprod, "solve one dot product and compare against the ideal")
    add("sweep", _cmd_sweep, "sweep a parameter and tabulate metrics", extra=[
        (("--parameter",), {"help": "axis parameter (r_t, r_p, c_p, g_scale, g_t)"}),
        (("--values",), {"help": "comma-separated axis values"}),
        (("--metrics",), {"help": "comma-separated metrics"}),
    ])
    add("bandwidth", _cmd_bandwidth, "-3 dB bandwidth of one column", extra=[
        (("--column",), {"type": int, "help": "column index (default from config)"}),
    ])
    add("energy", _cmd_energy, "energy for one computation")
    add("montecarlo", _cmd_montecarlo, "statistics over perturbed instances")
    add("fit-sigmoid", _cmd_fit_sigmoid, "fit sigmoid parameters to sampled transfer data", extra=[
        (("--data",), {"help": "CSV file of x,y samples"}),
    ])
    add("neuron-transfer", _cmd_neuron_transfer, "evaluate a neuron transfer", extra=[
        (("--preset",), {"help": "neuron preset label"}),
        (("--input",), {"type": float, "help": "input column current (amperes)"}),
    ])
    add("presets", _cmd_presets, "list the built-in neuron presets")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        args.func(args)
        return 0
    except SettlingTimeoutError as exc:
        print(f"timeout: {exc}", file=sys.stderr)
        return 3
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (InvalidInputError, SimulationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
