"""Behavioral sigmoid neuron model.

The neuron attached to each column terminal is reduced to (a) a scalar input
impedance, accounted for upstream as the terminal resistance of the array,
and (b) a sigmoid transfer y = a / (1 + exp(b*(x - c))).  Published operating
points for the voltage-mode neuron at 1.8 V and the current-mode neuron at
1.8/1.5/1.0 V supply are shipped as presets; `fit_sigmoid` extracts (a, b, c)
from sampled transfer data by damped Gauss-Newton.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "SigmoidParams",
    "SmallSignalParams",
    "NeuronPreset",
    "NoFitError",
    "sigmoid",
    "input_impedance",
    "builtin_presets",
    "fit_sigmoid",
    "neuron_transfer",
]


class NoFitError(InvalidInputError):
    """Sample data cannot support a sigmoid fit (degenerate or collapsed)."""


@dataclass(frozen=True)
class SigmoidParams:
    """Transfer parameters of y = a / (1 + exp(b*(x - c))).

    a is the output span; its unit depends on the neuron flavor (volts for
    voltage-mode, amperes for current-mode), recorded in `unit` rather than
    converted.  b is the inverse input scale (1/unit of x), c the input
    offset.  rmse is the fit residual in units of a; None for parameter sets
    declared without fit data.
    """

    a: float
    b: float
    c: float
    rmse: float | None = None
    unit: str | None = None
    converged: bool = True

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"sigmoid parameter {name} must be finite")
        if self.a <= 0.0:
            raise InvalidInputError(f"sigmoid parameter a must be > 0, got {self.a!r}")
        if self.b == 0.0:
            raise InvalidInputError("sigmoid parameter b must be nonzero")


@dataclass(frozen=True)
class SmallSignalParams:
    """Small-signal quantities of the current-input stage: the input device's
    output resistance r_ds7 and transconductance g_m7, and the loop gain."""

    r_ds7: float
    g_m7: float
    gain_a: float

    def __post_init__(self):
        for name in ("r_ds7", "g_m7", "gain_a"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise InvalidInputError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class NeuronPreset:
    """A published neuron operating point: transfer params plus input
    impedance, bandwidth and power at a given supply voltage."""

    label: str
    params: SigmoidParams
    z_in: float
    bandwidth: float
    power: float
    vdd: float

    def __post_init__(self):
        for name in ("z_in", "bandwidth", "power", "vdd"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise InvalidInputError(f"preset {name} must be positive, got {value!r}")


def sigmoid(p: SigmoidParams, x):
    """Evaluate a / (1 + exp(b*(x - c))) elementwise.

    Exponent overflow saturates to the corresponding asymptote (0 or a)
    instead of raising.
    """
    x = np.asarray(x, dtype=float)
    z = np.clip(p.b * (x - p.c), -700.0, 700.0)
    out = p.a / (1.0 + np.exp(z))
    return float(out) if out.ndim == 0 else out


def input_impedance(s: SmallSignalParams) -> float:
    """Closed-loop input impedance r_ds7 / (1 + g_m7 * r_ds7 * gain)."""
    return s.r_ds7 / (1.0 + s.g_m7 * s.r_ds7 * s.gain_a)


# Published operating points.  Voltage-mode spans are volts, current-mode
# spans are amperes; impedances are the scalar low-frequency values.
_PRESETS = (
    NeuronPreset(
        label="vm-1.8",
        params=SigmoidParams(a=1.754, b=-2.13e6, c=4.963e-6, rmse=0.06422, unit="V"),
        z_in=243.0,
        bandwidth=50e6,
        power=100.8e-6,
        vdd=1.8,
    ),
    NeuronPreset(
        label="cm-1.8",
        params=SigmoidParams(a=4.917e-6, b=-2e6, c=2.618e-6, rmse=8.506e-9, unit="A"),
        z_in=200.0,
        bandwidth=6.25e6,
        power=40.5e-6,
        vdd=1.8,
    ),
    NeuronPreset(
        label="cm-1.5",
        params=SigmoidParams(a=4.917e-6, b=-2e6, c=2.618e-6, rmse=8.506e-9, unit="A"),
        z_in=126.0,
        bandwidth=5.2e6,
        power=33.75e-6,
        vdd=1.5,
    ),
    NeuronPreset(
        label="cm-1.0",
        params=SigmoidParams(a=4.917e-6, b=-2e6, c=2.618e-6, rmse=8.506e-9, unit="A"),
        z_in=274.0,
        bandwidth=10e6,
        power=12.5e-6,
        vdd=1.0,
    ),
)


def builtin_presets() -> list[NeuronPreset]:
    """The built-in neuron operating points, in a stable order."""
    return list(_PRESETS)


def preset_by_label(label: str) -> NeuronPreset:
    for preset in _PRESETS:
        if preset.label == label:
            return preset
    known = ", ".join(p.label for p in _PRESETS)
    raise InvalidInputError(f"unknown neuron preset {label!r}; known presets: {known}")


def neuron_transfer(preset: NeuronPreset, column_current):
    """Neuron output for a column current already loaded by z_in upstream."""
    return sigmoid(preset.params, column_current)


def _model(theta, x):
    a, b, c = theta
    z = np.clip(b * (x - c), -700.0, 700.0)
    s = 1.0 / (1.0 + np.exp(z))  # logistic core, y = a*s
    return a * s, s


def _jacobian(theta, x, s):
    a, b, c = theta
    w = s * (1.0 - s)
    return np.column_stack((s, -a * (x - c) * w, a * b * w))


def initial_guess(x, y):
    """Deterministic starting point: a0 = max y, c0 at the sample nearest
    a0/2, b0 from the central finite-difference slope there."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    a0 = float(ys.max())
    if a0 <= 0.0:
        raise NoFitError("all outputs are non-positive; no sigmoid span")
    k = int(np.argmin(np.abs(ys - 0.5 * a0)))
    c0 = float(xs[k])
    lo, hi = max(k - 1, 0), min(k + 1, len(xs) - 1)
    if xs[hi] == xs[lo]:
        raise NoFitError("samples around the half-span point share one x value")
    slope = (ys[hi] - ys[lo]) / (xs[hi] - xs[lo])
    if slope == 0.0:
        slope = (ys[-1] - ys[0]) / (xs[-1] - xs[0])
    if slope == 0.0:
        raise NoFitError("transfer data is flat; cannot orient the sigmoid")
    # sigmoid slope at x = c is -a*b/4
    b0 = -4.0 * slope / a0
    return np.array([a0, b0, c0])


def fit_sigmoid(samples, max_iter: int = 100) -> SigmoidParams:
    """Least-squares (a, b, c) from (x, y) samples by damped Gauss-Newton.

    The start point comes from `initial_guess`; steps that fail to decrease
    the squared residual are retried with Levenberg-style damping, so the
    returned rmse never exceeds the initial guess's.  If the iteration
    budget runs out the best parameters so far are returned with
    converged=False.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidInputError(f"samples must be (x, y) pairs, got shape {arr.shape}")
    if arr.shape[0] < 4:
        raise InvalidInputError(f"need at least 4 samples, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("samples contain non-finite values")
    x, y = arr[:, 0], arr[:, 1]
    if np.ptp(x) == 0.0:
        raise NoFitError("all x values are equal")
    if np.ptp(y) == 0.0:
        raise NoFitError("constant y data cannot constrain a sigmoid")

    theta = initial_guess(x, y)
    model, s = _model(theta, x)
    r = y - model
    sse = float(r @ r)
    best_theta, best_sse = theta.copy(), sse

    lam = 0.0
    converged = False
    for _ in range(max_iter):
        jac = _jacobian(theta, x, s)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        step_taken = False
        for _ in range(25):  # escalate damping until the step improves
            damp = jtj + lam * np.diag(np.diag(jtj)) if lam else jtj
            try:
                delta = np.linalg.solve(damp, jtr)
            except np.linalg.LinAlgError:
                delta = None
            if delta is not None and np.all(np.isfinite(delta)):
                cand = theta + delta
                model, s_cand = _model(cand, x)
                r_cand = y - model
                sse_cand = float(r_cand @ r_cand)
                if np.isfinite(sse_cand) and sse_cand <= sse:
                    theta, r, s, sse = cand, r_cand, s_cand, sse_cand
                    lam = lam / 10.0 if lam > 1e-14 else 0.0
                    step_taken = True
                    break
            lam = max(lam * 10.0, 1e-10)
        if not step_taken:
            converged = True  # damping exhausted: local minimum to fp precision
            break
        if sse < best_sse:
            best_theta, best_sse = theta.copy(), sse
        rel_step = np.max(np.abs(delta) / np.maximum(np.abs(theta), 1e-300))
        if rel_step < 1e-13:
            converged = True
            break

    if sse < best_sse:
        best_theta, best_sse = theta, sse
    a, b, c = best_theta
    if not (math.isfinite(a) and a > 0.0 and b != 0.0 and math.isfinite(b)):
        raise NoFitError(f"fit collapsed to non-physical parameters a={a!r}, b={b!r}")
    rmse = math.sqrt(best_sse / len(x))
    return SigmoidParams(a=float(a), b=float(b), c=float(c), rmse=rmse, converged=converged)
