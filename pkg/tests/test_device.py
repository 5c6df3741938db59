import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xbarsim import (
    DeviceState,
    InvalidInputError,
    MemristorDevice,
    conductance,
    device_current,
    evolve_state,
    program_to_conductance,
)

DEV = MemristorDevice(g_off=1e-5, g_on=1e-3, v_th=1.0, k_mob=1e4)


def test_conductance_endpoints_and_midpoint():
    assert conductance(DEV, DeviceState(0.0)) == pytest.approx(1e-5, rel=1e-15)
    assert conductance(DEV, DeviceState(1.0)) == pytest.approx(1e-3, rel=1e-15)
    assert conductance(DEV, DeviceState(0.5)) == pytest.approx(5.05e-4, rel=1e-15)


def test_device_current_examples():
    assert device_current(DEV, DeviceState(0.5), 0.5) == pytest.approx(2.525e-4, rel=1e-15)
    assert device_current(DEV, DeviceState(0.7), 0.0) == 0.0
    assert device_current(DEV, DeviceState(1.0), 0.1) == pytest.approx(1e-4, rel=1e-15)


def test_program_to_conductance_inversion():
    assert program_to_conductance(DEV, DEV.g_off).x == 0.0
    assert program_to_conductance(DEV, (DEV.g_on + DEV.g_off) / 2).x == pytest.approx(0.5)
    with pytest.raises(InvalidInputError, match="feasible interval"):
        program_to_conductance(DEV, 2 * DEV.g_on)


def test_device_invariant_validation():
    with pytest.raises(InvalidInputError, match="g_off < g_on"):
        MemristorDevice(g_off=1e-3, g_on=1e-5, v_th=1.0, k_mob=1.0)
    with pytest.raises(InvalidInputError, match="v_th"):
        MemristorDevice(g_off=1e-5, g_on=1e-3, v_th=-0.1, k_mob=1.0)
    with pytest.raises(InvalidInputError, match="state"):
        DeviceState(1.5)


def test_evolve_empty_waveform_is_identity():
    out = evolve_state(DEV, DeviceState(0.3), [], dt=1e-6)
    assert out.x == 0.3


def test_evolve_subthreshold_is_bit_exact():
    x0 = 0.3
    out = evolve_state(DEV, DeviceState(x0), np.full(1000, 0.5), dt=1e-6)
    assert out.x == x0  # exact: sub-threshold samples must not touch the state
    out = evolve_state(DEV, DeviceState(x0), np.linspace(-1.0, 1.0, 501), dt=1e-6)
    assert out.x == x0  # |v| == v_th counts as below threshold


def test_evolve_constant_drive_matches_separable_ode():
    # dx/dt = k*(g_off + span*x)*v with constant v has the closed form
    # x(t) = ((g_off + span*x0)*exp(span*k*v*t) - g_off)/span, the oracle here.
    x0, v, t_total, n = 0.2, 2.0, 0.025, 400_000
    span = DEV.g_on - DEV.g_off
    mu = span * DEV.k_mob * v
    expected = ((DEV.g_off + span * x0) * math.exp(mu * t_total) - DEV.g_off) / span
    out = evolve_state(DEV, DeviceState(x0), np.full(n, v), dt=t_total / n)
    assert out.x == pytest.approx(expected, rel=1e-6)


def test_evolve_rejects_nonfinite_sample():
    with pytest.raises(InvalidInputError, match="not finite"):
        evolve_state(DEV, DeviceState(0.5), [1.5, math.nan, 2.0], dt=1e-6)
    with pytest.raises(InvalidInputError, match="dt"):
        evolve_state(DEV, DeviceState(0.5), [1.5], dt=0.0)


def test_evolve_state_saturates():
    nearly_on = evolve_state(DEV, DeviceState(0.9), np.full(10_000, 5.0), dt=1.0)
    assert nearly_on.x == 1.0
    nearly_off = evolve_state(DEV, DeviceState(0.1), np.full(10_000, -5.0), dt=1.0)
    assert nearly_off.x == 0.0


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_conductance_monotone_in_state(x1, x2):
    lo, hi = sorted((x1, x2))
    assert conductance(DEV, DeviceState(lo)) <= conductance(DEV, DeviceState(hi))


@given(st.floats(1e-5, 1e-3))
@settings(max_examples=200)
def test_program_then_conductance_is_identity(g_target):
    state = program_to_conductance(DEV, g_target)
    assert conductance(DEV, state) == pytest.approx(g_target, rel=1e-12)


@given(
    st.floats(0.0, 1.0),
    st.lists(st.floats(-5.0, 5.0), max_size=50),
)
@settings(max_examples=100, deadline=None)
def test_evolve_state_stays_in_unit_interval(x0, waveform):
    out = evolve_state(DEV, DeviceState(x0), waveform, dt=0.5)
    assert 0.0 <= out.x <= 1.0
