"""Experiment harness: bandwidth, energy per computation, parameter sweeps
and behavioral Monte Carlo statistics.

All entry points are deterministic: sweeps evaluate axis values in order, and
Monte Carlo derives each sample's random stream from (seed, sample index) so
results cannot depend on evaluation order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace, field

import numpy as np

from .device import MemristorDevice
from .errors import InvalidInputError, SettlingTimeoutError
from .ideal import dot_product_error, ideal_current_mode, ideal_voltage_mode
from .network import CrossbarConfig, DriveMode, Parasitics, assemble, build_topology
from .neuron import NeuronPreset, SigmoidParams, fit_sigmoid, sigmoid
from .solver import solve_ac, solve_dc, solve_transient, time_constant_bounds

__all__ = [
    "SweepResult",
    "McStats",
    "MultiPoleResponseWarning",
    "compute_bandwidth",
    "compute_energy",
    "run_sweep",
    "rerun_sweep",
    "monte_carlo",
    "SWEEP_PARAMETERS",
    "SWEEP_METRICS",
]

# Source resistance for energy/transient runs.  Larger than the DC default on
# purpose: the source power V*(V - v_node)/r_s loses ~eps/(r_s*sum_g) relative
# accuracy to cancellation, so r_s = 1e-3 ohm keeps power good to ~1e-9 while
# its drive bias (~r_s * sum_g) stays far below the trend tolerances.
R_SOURCE_ENERGY = 1e-3

SWEEP_PARAMETERS = ("r_t", "r_p", "c_p", "g_scale", "g_t")
SWEEP_METRICS = ("bandwidth", "error_vm", "error_cm", "energy")

_AXIS_LABELS = {
    "r_t": "r_t_ohm",
    "r_p": "r_p_ohm",
    "c_p": "c_p_farad",
    "g_scale": "g_scale",
    "g_t": "g_t_siemens",
}
_METRIC_LABELS = {
    "bandwidth": "bandwidth_hz",
    "error_vm": "error_vm",
    "error_cm": "error_cm",
    "energy": "energy_joule",
}


class MultiPoleResponseWarning(UserWarning):
    """The magnitude response was not monotone; the first -3 dB crossing at
    decade resolution was used."""


@dataclass
class SweepResult:
    """One swept axis plus aligned metric columns.  metadata snapshots the
    resolved configuration so the sweep can be re-run bit-identically."""

    axis_name: str
    axis_values: np.ndarray
    metrics: dict
    metadata: dict = field(default_factory=dict)


@dataclass
class McStats:
    """Per-observable mean and standard deviation over n perturbed instances."""

    n_samples: int
    seed: int
    means: dict
    stds: dict
    clamp_fraction: float = 0.0
    clamp_warning: bool = False


def _default_drive(cfg, drive):
    if drive is None:
        return np.ones(cfg.n_rows)
    drive = np.asarray(drive, dtype=float)
    if drive.shape != (cfg.n_rows,):
        raise InvalidInputError(
            f"drive length {drive.shape} does not match {cfg.n_rows} rows"
        )
    return drive


def _solve_columns(cfg, drive, r_source=None):
    kwargs = {} if r_source is None else {"r_source": r_source}
    sys = assemble(build_topology(cfg), cfg, drive, **kwargs)
    return sys, solve_dc(sys)


def compute_bandwidth(cfg: CrossbarConfig, column: int = -1, drive=None,
                      rel_tol: float = 1e-3) -> float:
    """-3 dB frequency of |column current(f)| / |column current(0)|.

    Coarse decade sweep to bracket the first crossing, then geometric
    bisection to `rel_tol` relative frequency.  A capacitance-free network
    has no pole: returns math.inf.  A non-monotone (multi-pole) response
    triggers MultiPoleResponseWarning and returns the first crossing.
    """
    drive = _default_drive(cfg, drive)
    if cfg.parasitics.c_p == 0.0:
        return math.inf
    sys = assemble(build_topology(cfg), cfg, drive)
    dc = solve_dc(sys)
    i0 = abs(dc.column_currents[column])
    if i0 == 0.0:
        raise InvalidInputError(f"column {column} carries no DC current; bandwidth undefined")
    target = 1.0 / math.sqrt(2.0)

    def ratio(f):
        return abs(solve_ac(sys, f).column_phasors[column]) / i0

    _, tau_slow = time_constant_bounds(sys)
    f = 1.0 / (2.0 * math.pi * tau_slow) / 100.0 if tau_slow > 0.0 else 1.0

    for _ in range(60):  # find a frequency still on the flat part
        if ratio(f) >= target:
            break
        f /= 10.0
    else:
        raise InvalidInputError("response is below -3 dB at all probed frequencies")

    # decade walk up to the first crossing
    f_lo, r_lo = f, ratio(f)
    non_monotone = False
    for _ in range(60):
        f_hi = f_lo * 10.0
        r_hi = ratio(f_hi)
        if r_hi > r_lo * (1.0 + 1e-9):
            non_monotone = True
        if r_hi < target:
            break
        f_lo, r_lo = f_hi, r_hi
    else:
        warnings.warn("no -3 dB crossing found within 60 decades", MultiPoleResponseWarning)
        return math.inf
    if non_monotone:
        warnings.warn(
            "magnitude response is not monotone; using the first -3 dB crossing",
            MultiPoleResponseWarning,
        )

    while (f_hi - f_lo) > rel_tol * f_lo:
        f_mid = math.sqrt(f_lo * f_hi)
        if ratio(f_mid) >= target:
            f_lo = f_mid
        else:
            f_hi = f_mid
    return math.sqrt(f_lo * f_hi)


def _settled_from(column_currents, targets, settle_rel):
    """Index of the first sample from which every column stays inside its
    settling band, or None.  Columns with ~zero DC target get an absolute
    band derived from the largest target."""
    scale = np.max(np.abs(targets))
    if scale == 0.0:
        raise InvalidInputError("all DC column currents are zero; settling undefined")
    tol = settle_rel * np.maximum(np.abs(targets), 1e-6 * scale)
    ok = np.all(np.abs(column_currents - targets) <= tol, axis=1)
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return int(bad[-1]) + 1 if bad.size else 0


def compute_energy(
    cfg: CrossbarConfig,
    drive=None,
    settle_rel: float = 0.01,
    window: float | None = None,
    max_time: float | None = None,
) -> float:
    """Source energy for one computation, in joules.

    The drive steps on at t = 0; integration runs until every column current
    has stayed within settle_rel of its DC value, then continues for one more
    settling duration, and the sampled source power is integrated over the
    whole span.  `window` forces a fixed integration span instead (useful for
    purely resistive references).  No settling inside `max_time` raises
    SettlingTimeoutError.
    """
    if not 0.0 < settle_rel < 1.0:
        raise InvalidInputError(f"settle_rel must be in (0, 1), got {settle_rel!r}")
    drive = _default_drive(cfg, drive)
    sys = assemble(build_topology(cfg), cfg, drive, r_source=R_SOURCE_ENERGY)

    if window is not None:
        if not (np.isfinite(window) and window > 0.0):
            raise InvalidInputError(f"window must be positive, got {window!r}")
        res = solve_transient(sys, window, window / 1000.0)
        return float(np.trapezoid(res.source_power, res.times))

    if not np.any(sys.cap_diag > 0.0):
        return 0.0  # no dynamics: settling duration is zero

    dc = solve_dc(sys)
    targets = dc.column_currents

    # Scouting pass: generous upper bound on the slowest settling time.
    r_t_eff = cfg.parasitics.r_t if cfg.parasitics.r_t > 0.0 else 0.0
    g_min = min(float(cfg.g.sum(axis=1).min()), float(cfg.g.sum(axis=0).min()))
    r_bound = r_t_eff + (cfg.n_rows + cfg.n_cols) * cfg.parasitics.r_p + 1.0 / g_min
    t_bound = 10.0 * float(np.sum(sys.cap_diag)) * r_bound
    if max_time is None:
        max_time = 1e4 * t_bound
    if not max_time > 0.0:
        raise InvalidInputError(f"max_time must be positive, got {max_time!r}")

    t_run = min(t_bound, max_time)
    while True:
        res = solve_transient(sys, t_run, t_run / 2000.0)
        k = _settled_from(res.column_currents, targets, settle_rel)
        if k is not None:
            break
        if t_run >= max_time:
            dev = np.abs(res.column_currents[-1] - targets) / np.maximum(np.abs(targets), 1e-300)
            raise SettlingTimeoutError(
                f"no settling within {t_run:.3e} s (max_time {max_time:.3e} s); "
                f"worst relative deviation {dev.max():.3e}",
                residual=float(dev.max()),
            )
        t_run = min(t_run * 4.0, max_time)
    t_settle = max(float(res.times[k]), t_run / 2000.0)

    # Measurement pass on a grid matched to the detected settling time.
    for _ in range(6):
        dt = t_settle / 500.0
        res = solve_transient(sys, 4.0 * t_settle, dt)
        k = _settled_from(res.column_currents, targets, settle_rel)
        if k is None:
            t_settle *= 4.0
            continue
        t_settle2 = max(float(res.times[k]), dt)
        if t_settle2 <= 1.9 * t_settle:
            end = 2.0 * t_settle2
            keep = res.times <= end * (1.0 + 1e-9)
            return float(np.trapezoid(res.source_power[keep], res.times[keep]))
        t_settle = t_settle2
    raise SettlingTimeoutError(
        "settling time estimate failed to stabilize", residual=None
    )


def _scaled_config(cfg: CrossbarConfig, parameter: str, value: float) -> CrossbarConfig:
    p = cfg.parasitics
    if parameter == "r_t":
        return replace(cfg, parasitics=Parasitics(p.r_p, p.c_p, value))
    if parameter == "g_t":
        return replace(cfg, parasitics=Parasitics(p.r_p, p.c_p, 1.0 / value))
    if parameter == "r_p":
        return replace(cfg, parasitics=Parasitics(value, p.c_p, p.r_t))
    if parameter == "c_p":
        return replace(cfg, parasitics=Parasitics(p.r_p, value, p.r_t))
    if parameter == "g_scale":
        device = cfg.device
        if device is not None:
            device = MemristorDevice(
                g_off=device.g_off * value,
                g_on=device.g_on * value,
                v_th=device.v_th,
                k_mob=device.k_mob,
            )
        return replace(cfg, g=cfg.g * value, device=device)
    raise InvalidInputError(
        f"unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}"
    )


def _dot_error(cfg, drive, mode):
    cfg = replace(cfg, mode=mode)
    _, dc = _solve_columns(cfg, drive)
    if mode is DriveMode.VOLTAGE:
        ideal = ideal_voltage_mode(cfg.g, drive)
    else:
        ideal = ideal_current_mode(cfg.g, drive)
    return dot_product_error(dc.column_currents, ideal)


def run_sweep(
    cfg: CrossbarConfig,
    parameter: str,
    values,
    metrics,
    drive=None,
    column: int = -1,
    settle_rel: float = 0.01,
    seed: int | None = None,
) -> SweepResult:
    """Evaluate the requested metrics at each axis value, in order.

    Each point rebuilds the configuration with `parameter` replaced (g_scale
    multiplies every conductance and the device bounds with it).  Error
    metrics compare the circuit output against the matching ideal dot
    product.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise InvalidInputError(
            f"unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}"
        )
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InvalidInputError("sweep needs at least one axis value")
    if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
        raise InvalidInputError("sweep values must be positive and finite")
    metrics = list(metrics)
    if not metrics:
        raise InvalidInputError("sweep needs at least one metric")
    for m in metrics:
        if m not in SWEEP_METRICS:
            raise InvalidInputError(
                f"unknown metric {m!r}; expected a subset of {SWEEP_METRICS}"
            )
    drive = _default_drive(cfg, drive)

    columns = {m: [] for m in metrics}
    for value in values:
        cfg_i = _scaled_config(cfg, parameter, float(value))
        for m in metrics:
            if m == "bandwidth":
                out = compute_bandwidth(cfg_i, column=column, drive=drive)
            elif m == "error_vm":
                out = _dot_error(cfg_i, drive, DriveMode.VOLTAGE)
            elif m == "error_cm":
                out = _dot_error(cfg_i, drive, DriveMode.CURRENT)
            else:
                out = compute_energy(cfg_i, drive, settle_rel=settle_rel)
            columns[m].append(out)

    metadata = {
        "device": None
        if cfg.device is None
        else {
            "g_off": cfg.device.g_off,
            "g_on": cfg.device.g_on,
            "v_th": cfg.device.v_th,
            "k_mob": cfg.device.k_mob,
        },
        "n_rows": cfg.n_rows,
        "n_cols": cfg.n_cols,
        "g": cfg.g.tolist(),
        "parasitics": {
            "r_p": cfg.parasitics.r_p,
            "c_p": cfg.parasitics.c_p,
            "r_t": cfg.parasitics.r_t,
        },
        "mode": cfg.mode.value,
        "drive": drive.tolist(),
        "parameter": parameter,
        "values": values.tolist(),
        "metrics": metrics,
        "column": column,
        "settle_rel": settle_rel,
        "seed": seed,
    }
    return SweepResult(
        axis_name=_AXIS_LABELS[parameter],
        axis_values=values,
        metrics={_METRIC_LABELS[m]: np.asarray(columns[m]) for m in metrics},
        metadata=metadata,
    )


def rerun_sweep(metadata: dict) -> SweepResult:
    """Re-run a sweep from an emitted metadata snapshot (bit-identical)."""
    dev = metadata["device"]
    device = None if dev is None else MemristorDevice(**dev)
    cfg = CrossbarConfig(
        n_rows=metadata["n_rows"],
        n_cols=metadata["n_cols"],
        g=np.asarray(metadata["g"], dtype=float),
        parasitics=Parasitics(**metadata["parasitics"]),
        mode=DriveMode(metadata["mode"]),
        device=device,
    )
    return run_sweep(
        cfg,
        metadata["parameter"],
        metadata["values"],
        metadata["metrics"],
        drive=metadata["drive"],
        column=metadata["column"],
        settle_rel=metadata["settle_rel"],
        seed=metadata["seed"],
    )


def _perturbed_sigmoid(params: SigmoidParams, factors) -> SigmoidParams:
    return SigmoidParams(
        a=params.a * factors[0],
        b=params.b * factors[1],
        c=params.c * factors[2],
        unit=params.unit,
    )


def monte_carlo(
    cfg: CrossbarConfig,
    *,
    n: int,
    seed: int,
    g_std: float,
    neuron_std: float = 0.0,
    observable: str = "dot_error",
    neuron=None,
    drive=None,
    column: int = -1,
    ramp_points: int = 33,
) -> McStats:
    """Statistics of an observable over n perturbed crossbar instances.

    Conductances receive Gaussian multiplicative perturbations clamped to the
    device interval; neuron parameters (a, b, c) are perturbed the same way.
    observable = "dot_error": circuit output of the perturbed instance against
    the ideal dot product of the nominal (intended) weights.
    observable = "sigmoid_fit": sigmoid parameters refitted from the neuron
    response to a ramped drive pushed through the perturbed crossbar, plotted
    against the nominally intended column current.

    Each sample's random stream derives from (seed, sample index), so results
    are reproducible and independent of evaluation order.
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n!r}")
    if g_std < 0.0 or neuron_std < 0.0:
        raise InvalidInputError("perturbation stds must be >= 0")
    if observable not in ("dot_error", "sigmoid_fit"):
        raise InvalidInputError(
            f"unknown observable {observable!r}; expected 'dot_error' or 'sigmoid_fit'"
        )
    if cfg.device is None:
        raise InvalidInputError("Monte Carlo needs the device declared for conductance clamping")
    drive = _default_drive(cfg, drive)

    params = None
    if observable == "sigmoid_fit":
        if isinstance(neuron, NeuronPreset):
            params = neuron.params
        elif isinstance(neuron, SigmoidParams):
            params = neuron
        else:
            raise InvalidInputError("observable 'sigmoid_fit' needs neuron params or a preset")
        if params.c <= 0.0:
            raise InvalidInputError("ramp construction needs a positive input offset c")

    if cfg.mode is DriveMode.VOLTAGE:
        ideal_nominal = ideal_voltage_mode(cfg.g, drive)
    else:
        ideal_nominal = ideal_current_mode(cfg.g, drive)
    i_intent = float(ideal_nominal[column])
    if observable == "sigmoid_fit" and i_intent <= 0.0:
        raise InvalidInputError("ramp needs a positive nominal column current")

    def evaluate(g_sample, factors):
        cfg_k = replace(cfg, g=g_sample)
        _, dc = _solve_columns(cfg_k, drive)
        if observable == "dot_error":
            return {"error": dot_product_error(dc.column_currents, ideal_nominal)}
        p_k = _perturbed_sigmoid(params, factors)
        i_col = float(dc.column_currents[column])
        # The circuit is linear: a scaled drive scales the column current.
        u = np.linspace(0.0, 2.5 * params.c / i_intent, ramp_points)
        samples = np.column_stack((u * i_intent, sigmoid(p_k, u * i_col)))
        fit = fit_sigmoid(samples)
        return {"a": fit.a, "b": fit.b, "c": fit.c}

    lo, hi = cfg.device.g_off, cfg.device.g_on
    per_key = {}
    clamped = 0
    for k in range(n):
        rng = np.random.default_rng([seed, k])
        raw = cfg.g * (1.0 + g_std * rng.standard_normal(cfg.g.shape))
        g_sample = np.clip(raw, lo, hi)
        clamped += int(np.count_nonzero(raw != g_sample))
        factors = 1.0 + neuron_std * rng.standard_normal(3)
        for key, value in evaluate(g_sample, factors).items():
            per_key.setdefault(key, []).append(value)

    def std_of(values):
        arr = np.asarray(values)
        if np.ptp(arr) == 0.0:  # identical samples: exactly zero spread
            return 0.0
        return float(np.std(arr, ddof=1 if n > 1 else 0))

    means = {k: float(np.mean(v)) for k, v in per_key.items()}
    stds = {k: std_of(v) for k, v in per_key.items()}
    clamp_fraction = clamped / (n * cfg.g.size)
    return McStats(
        n_samples=n,
        seed=seed,
        means=means,
        stds=stds,
        clamp_fraction=clamp_fraction,
        clamp_warning=clamp_fraction > 0.5,
    )
