"""Run configuration: a strict key-value document (TOML, or JSON for
machine-emitted round trips).

Unknown keys are rejected with their full dotted path so a typo in a sweep
parameter cannot silently corrupt an experiment.  Every omitted optional key
gets a documented default; the fully resolved tree (with the conductance
source resolved to an explicit matrix) is kept on the RunConfig and embedded
in every result file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .device import MemristorDevice
from .errors import ConfigError, InvalidInputError
from .network import CrossbarConfig, DriveMode, Parasitics
from .neuron import NeuronPreset, SigmoidParams, preset_by_label

__all__ = ["RunConfig", "load_config", "parse_config", "apply_overrides"]

_REQUIRED = object()
_OPTIONAL = object()  # no default; key may be absent

# key -> (type, default) | nested dict.  float accepts ints; bool never
# coerces.  _OPTIONAL keys are simply absent unless given.
_SCHEMA = {
    "device": {
        "g_off": (float, 1e-5),
        "g_on": (float, 1e-3),
        "v_th": (float, 1.0),
        "k_mob": (float, 1e6),
    },
    "crossbar": {
        "n_rows": (int, _REQUIRED),
        "n_cols": (int, _REQUIRED),
        "mode": (str, "voltage"),
        "conductance": {
            "uniform": (float, _OPTIONAL),
            "matrix": (list, _OPTIONAL),
            "random": {
                "low": (float, _OPTIONAL),
                "high": (float, _OPTIONAL),
                "seed": (int, _OPTIONAL),
            },
        },
    },
    "parasitics": {
        "r_p": (float, 0.0),
        "c_p": (float, 0.0),
        "r_t": (float, 0.0),
    },
    "neuron": {
        "preset": (str, "cm-1.8"),
        "params": {
            "a": (float, _OPTIONAL),
            "b": (float, _OPTIONAL),
            "c": (float, _OPTIONAL),
            "unit": (str, _OPTIONAL),
        },
    },
    "analysis": {
        "drive": (list, _OPTIONAL),
        "column": (int, -1),
        "sweep_parameter": (str, "r_t"),
        "sweep_values": (list, _OPTIONAL),
        "metrics": (list, ["error_vm"]),
        "settle_rel": (float, 0.01),
        "window": (float, _OPTIONAL),
        "max_settle_time": (float, _OPTIONAL),
        "seed": (int, 0),
        "mc_samples": (int, 200),
        "mc_g_std": (float, 0.01),
        "mc_neuron_std": (float, 0.0),
        "mc_observable": (str, "dot_error"),
        "mc_ramp_points": (int, 33),
        "input": (float, _OPTIONAL),
        "ramp": {
            "low": (float, _OPTIONAL),
            "high": (float, _OPTIONAL),
            "points": (int, 101),
        },
    },
    "output": {
        "path": (str, "out"),
        "format": (str, "csv"),
    },
}


@dataclass
class RunConfig:
    """Validated run configuration plus the resolved plain tree."""

    device: MemristorDevice
    crossbar: CrossbarConfig
    neuron: NeuronPreset | SigmoidParams
    analysis: dict
    output_path: str
    output_format: str
    resolved: dict


def _check_type(value, expected, path):
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"key '{path}' must be a number, got {value!r}", key_path=path)
        return float(value)
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"key '{path}' must be an integer, got {value!r}", key_path=path)
        return value
    if expected is str:
        if not isinstance(value, str):
            raise ConfigError(f"key '{path}' must be a string, got {value!r}", key_path=path)
        return value
    if expected is list:
        if not isinstance(value, list):
            raise ConfigError(f"key '{path}' must be a list, got {value!r}", key_path=path)
        return value
    raise AssertionError(f"unhandled schema type {expected}")


def _walk(schema, data, path=""):
    if not isinstance(data, dict):
        raise ConfigError(f"section '{path or '<root>'}' must be a table, got {data!r}",
                          key_path=path)
    for key in data:
        if key not in schema:
            full = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown key '{full}'", key_path=full)
    out = {}
    for key, spec in schema.items():
        full = f"{path}.{key}" if path else key
        if isinstance(spec, dict):
            if key in data:
                out[key] = _walk(spec, data[key], full)
            else:
                nested = _walk(spec, {}, full)
                if nested:
                    out[key] = nested
        else:
            expected, default = spec
            if key in data:
                out[key] = _check_type(data[key], expected, full)
            elif default is _REQUIRED:
                raise ConfigError(f"missing required key '{full}'", key_path=full)
            elif default is not _OPTIONAL:
                out[key] = default
    return out


def apply_overrides(tree: dict, overrides) -> dict:
    """Apply 'dotted.key=value' overrides; values parse as JSON literals,
    falling back to bare strings."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key.path=value")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = tree
        parts = dotted.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path '{dotted}' crosses a non-table key")
        node[parts[-1]] = value
    return tree


def _resolve_conductance(tree):
    section = tree["crossbar"].get("conductance", {})
    n_rows, n_cols = tree["crossbar"]["n_rows"], tree["crossbar"]["n_cols"]
    forms = [k for k in ("uniform", "matrix", "random") if section.get(k) not in (None, {})]
    if len(forms) != 1:
        raise ConfigError(
            "crossbar.conductance needs exactly one of 'uniform', 'matrix' or 'random', "
            f"got {forms or 'none'}",
            key_path="crossbar.conductance",
        )
    form = forms[0]
    if form == "uniform":
        g = np.full((n_rows, n_cols), section["uniform"])
    elif form == "matrix":
        g = np.asarray(section["matrix"], dtype=float)
    else:
        rnd = section["random"]
        for key in ("low", "high", "seed"):
            if key not in rnd:
                raise ConfigError(
                    f"missing required key 'crossbar.conductance.random.{key}'",
                    key_path=f"crossbar.conductance.random.{key}",
                )
        rng = np.random.default_rng(rnd["seed"])
        g = rng.uniform(rnd["low"], rnd["high"], (n_rows, n_cols))
    return g


def parse_config(tree: dict, overrides=None) -> RunConfig:
    """Validate a plain config tree and build the domain objects."""
    tree = _walk(_SCHEMA, tree)
    if overrides:
        tree = _walk(_SCHEMA, apply_overrides(tree, overrides))

    device = MemristorDevice(**tree["device"])
    g = _resolve_conductance(tree)

    mode_name = tree["crossbar"]["mode"]
    try:
        mode = DriveMode(mode_name)
    except ValueError:
        raise ConfigError(
            f"crossbar.mode must be 'voltage' or 'current', got {mode_name!r}",
            key_path="crossbar.mode",
        ) from None
    crossbar = CrossbarConfig(
        n_rows=tree["crossbar"]["n_rows"],
        n_cols=tree["crossbar"]["n_cols"],
        g=g,
        parasitics=Parasitics(**tree["parasitics"]),
        mode=mode,
        device=device,
    )

    neuron_tree = tree["neuron"]
    if neuron_tree.get("params"):
        params = dict(neuron_tree["params"])
        for key in ("a", "b", "c"):
            if key not in params:
                raise ConfigError(
                    f"missing required key 'neuron.params.{key}'",
                    key_path=f"neuron.params.{key}",
                )
        neuron = SigmoidParams(**params)
    else:
        neuron = preset_by_label(neuron_tree["preset"])

    output = tree["output"]
    if output["format"] not in ("csv", "json"):
        raise ConfigError(
            f"output.format must be 'csv' or 'json', got {output['format']!r}",
            key_path="output.format",
        )

    resolved = json.loads(json.dumps(tree))  # deep copy of plain data
    resolved["crossbar"]["conductance"] = {"matrix": g.tolist()}
    return RunConfig(
        device=device,
        crossbar=crossbar,
        neuron=neuron,
        analysis=tree["analysis"],
        output_path=output["path"],
        output_format=output["format"],
        resolved=resolved,
    )


def load_config(path, overrides=None) -> RunConfig:
    """Load and validate a configuration file (.toml, or .json)."""
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"config file {str(path)!r} does not exist")
    text = path.read_text()
    if path.suffix == ".json":
        try:
            tree = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    else:
        try:
            tree = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"TOML parse error: {exc}") from exc
    return parse_config(tree, overrides)
