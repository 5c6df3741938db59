"""Memristor element model.

A device is a two-terminal resistive element whose conductance interpolates
linearly between a low bound g_off and a high bound g_on as a dimensionless
internal state x sweeps 0 -> 1.  Below the write threshold |v| <= v_th the
state is frozen and the element is a plain resistor; above it the state
drifts in proportion to the terminal current and saturates at the dopant
boundaries x = 0 and x = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "MemristorDevice",
    "DeviceState",
    "conductance",
    "device_current",
    "evolve_state",
    "program_to_conductance",
]


@dataclass(frozen=True)
class MemristorDevice:
    """Device constants.

    g_off, g_on : conductance bounds in siemens (low / high dopant state)
    v_th        : write threshold voltage in volts (>= 0)
    k_mob       : state-mobility constant in 1/(ampere * second)
    """

    g_off: float
    g_on: float
    v_th: float
    k_mob: float

    def __post_init__(self):
        for name in ("g_off", "g_on", "v_th", "k_mob"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"device {name} must be finite")
        if not 0.0 < self.g_off < self.g_on:
            raise InvalidInputError(
                "device requires 0 < g_off < g_on, "
                f"got g_off={self.g_off!r}, g_on={self.g_on!r}"
            )
        if self.v_th < 0.0:
            raise InvalidInputError(f"device v_th must be >= 0, got {self.v_th!r}")
        if self.k_mob <= 0.0:
            raise InvalidInputError(f"device k_mob must be > 0, got {self.k_mob!r}")


@dataclass(frozen=True)
class DeviceState:
    """Dimensionless dopant state, always inside [0, 1]."""

    x: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and 0.0 <= self.x <= 1.0):
            raise InvalidInputError(f"device state must lie in [0, 1], got {self.x!r}")


def conductance(dev: MemristorDevice, state: DeviceState) -> float:
    """Net conductance g_off*(1-x) + g_on*x, in siemens."""
    return dev.g_off * (1.0 - state.x) + dev.g_on * state.x


def device_current(dev: MemristorDevice, state: DeviceState, v: float) -> float:
    """Terminal current in amperes for terminal voltage v."""
    return conductance(dev, state) * v


def evolve_state(
    dev: MemristorDevice, state: DeviceState, v_samples, dt: float
) -> DeviceState:
    """Integrate dx/dt = k_mob * i(t) across a fixed-step voltage waveform.

    Samples with |v| <= v_th leave the state untouched (sub-threshold
    operation is a pure read).  Integration is explicit forward stepping at
    the waveform sample rate; the state saturates at 0 and 1 instead of
    leaving the physical range.
    """
    if not (isinstance(dt, (int, float)) and math.isfinite(dt)) or dt <= 0.0:
        raise InvalidInputError(f"dt must be a positive finite number, got {dt!r}")
    v_samples = np.asarray(v_samples, dtype=float)
    if v_samples.ndim > 1:
        raise InvalidInputError("waveform must be one-dimensional")
    if v_samples.size and not np.all(np.isfinite(v_samples)):
        bad = int(np.flatnonzero(~np.isfinite(v_samples))[0])
        raise InvalidInputError(f"waveform sample {bad} is not finite")

    x = state.x
    span = dev.g_on - dev.g_off
    rate = dt * dev.k_mob
    for v in v_samples:
        if abs(v) <= dev.v_th:
            continue
        x += rate * (dev.g_off + span * x) * v
        if x < 0.0:
            x = 0.0
        elif x > 1.0:
            x = 1.0
    return DeviceState(x)


def program_to_conductance(dev: MemristorDevice, g_target: float) -> DeviceState:
    """State realizing a target conductance; the inverse of `conductance`."""
    if not (dev.g_off <= g_target <= dev.g_on):
        raise InvalidInputError(
            f"target conductance {g_target!r} S is outside the feasible interval "
            f"[{dev.g_off!r}, {dev.g_on!r}] S"
        )
    return DeviceState((g_target - dev.g_off) / (dev.g_on - dev.g_off))
