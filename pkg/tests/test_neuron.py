import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xbarsim import (
    CrossbarConfig,
    DriveMode,
    InvalidInputError,
    NoFitError,
    Parasitics,
    SigmoidParams,
    SmallSignalParams,
    builtin_presets,
    fit_sigmoid,
    input_impedance,
    neuron_transfer,
    preset_by_label,
    sigmoid,
)
from xbarsim.neuron import initial_guess

from conftest import solve_columns

TABLE_VM = SigmoidParams(a=1.754, b=-2.13e6, c=4.963e-6)
TABLE_CM = SigmoidParams(a=4.917e-6, b=-2e6, c=2.618e-6)


def test_sigmoid_midpoints_from_published_fits():
    assert sigmoid(TABLE_VM, TABLE_VM.c) == pytest.approx(0.877, rel=1e-12)
    assert sigmoid(TABLE_CM, 2.618e-6) == pytest.approx(2.4585e-6, rel=1e-12)


def test_sigmoid_asymptotes():
    p = SigmoidParams(a=2.0, b=-3.0, c=0.5)
    assert sigmoid(p, 1e6) == pytest.approx(p.a, abs=1e-300)
    assert sigmoid(p, -1e6) == pytest.approx(0.0, abs=1e-300)
    # overflow-sized exponents saturate instead of raising
    extreme = SigmoidParams(a=1.0, b=-1e9, c=0.0)
    assert sigmoid(extreme, 100.0) == pytest.approx(1.0, rel=1e-12)
    assert sigmoid(extreme, -100.0) == pytest.approx(0.0, abs=1e-300)


def test_input_impedance_formula():
    s = SmallSignalParams(r_ds7=1e5, g_m7=1e-3, gain_a=100.0)
    assert input_impedance(s) == pytest.approx(1e5 / (1 + 1e-3 * 1e5 * 100), rel=1e-15)
    assert input_impedance(s) == pytest.approx(9.999, rel=1e-4)
    # degenerate gain limit: A -> 0 leaves the bare r_ds7 via the formula
    tiny_gain = SmallSignalParams(r_ds7=1e5, g_m7=1e-3, gain_a=1e-300)
    assert input_impedance(tiny_gain) == pytest.approx(1e5, rel=1e-12)


@given(st.floats(1.0, 1e6), st.floats(2.0, 1e7))
@settings(max_examples=100)
def test_input_impedance_monotone_in_gain(a1, a2):
    lo, hi = sorted((a1, a2))
    base = dict(r_ds7=1e5, g_m7=1e-3)
    assert input_impedance(SmallSignalParams(gain_a=hi, **base)) <= input_impedance(
        SmallSignalParams(gain_a=lo, **base)
    )


def test_builtin_presets_published_values():
    presets = {p.label: p for p in builtin_presets()}
    assert set(presets) == {"vm-1.8", "cm-1.8", "cm-1.5", "cm-1.0"}

    vm = presets["vm-1.8"]
    assert (vm.params.a, vm.params.b, vm.params.c) == (1.754, -2.13e6, 4.963e-6)
    assert (vm.z_in, vm.bandwidth, vm.power, vm.vdd) == (243.0, 50e6, 100.8e-6, 1.8)

    cm18 = presets["cm-1.8"]
    assert (cm18.params.a, cm18.params.b, cm18.params.c) == (4.917e-6, -2e6, 2.618e-6)
    assert (cm18.z_in, cm18.bandwidth, cm18.power) == (200.0, 6.25e6, 40.5e-6)
    assert presets["cm-1.5"].z_in == 126.0
    assert presets["cm-1.5"].bandwidth == 5.2e6
    assert presets["cm-1.5"].power == 33.75e-6
    assert presets["cm-1.0"].z_in == 274.0
    assert presets["cm-1.0"].bandwidth == 10e6
    assert presets["cm-1.0"].power == 12.5e-6

    with pytest.raises(InvalidInputError, match="unknown neuron preset"):
        preset_by_label("vm-9.9")


@pytest.mark.parametrize("planted", [TABLE_VM, TABLE_CM])
def test_fit_recovers_planted_parameters(planted):
    x = np.linspace(0.0, 10e-6, 200)
    samples = np.column_stack((x, sigmoid(planted, x)))
    fit = fit_sigmoid(samples)
    assert fit.a == pytest.approx(planted.a, rel=1e-3)
    assert fit.b == pytest.approx(planted.b, rel=1e-3)
    assert fit.c == pytest.approx(planted.c, rel=1e-3)
    assert fit.rmse < 1e-9 * planted.a
    assert fit.converged


def test_fit_degenerate_data_rejected():
    x = np.linspace(0.0, 1.0, 10)
    with pytest.raises(NoFitError):
        fit_sigmoid(np.column_stack((x, np.full(10, 0.7))))
    with pytest.raises(InvalidInputError, match="at least 4"):
        fit_sigmoid([(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)])
    with pytest.raises(NoFitError, match="x values"):
        fit_sigmoid([(1.0, 0.1), (1.0, 0.2), (1.0, 0.3), (1.0, 0.4)])


def test_fit_with_noise_bounded_rmse():
    rng = np.random.default_rng(5)
    eps = 0.01 * TABLE_VM.a
    x = np.linspace(0.0, 10e-6, 300)
    y = sigmoid(TABLE_VM, x) + rng.uniform(-eps, eps, x.size)
    fit = fit_sigmoid(np.column_stack((x, y)))
    assert fit.rmse <= 2 * eps


def test_fit_never_beats_initial_guess_backwards():
    rng = np.random.default_rng(11)
    x = np.linspace(0.0, 10e-6, 120)
    y = sigmoid(TABLE_CM, x) + rng.normal(0.0, 0.03 * TABLE_CM.a, x.size)
    theta0 = initial_guess(x, y)
    rmse0 = np.sqrt(np.mean((y - sigmoid(SigmoidParams(*theta0), x)) ** 2))
    fit = fit_sigmoid(np.column_stack((x, y)))
    assert fit.rmse <= rmse0


def test_fit_iteration_budget_flags_unconverged():
    x = np.linspace(0.0, 10e-6, 200)
    samples = np.column_stack((x, sigmoid(TABLE_VM, x)))
    fit = fit_sigmoid(samples, max_iter=1)
    assert not fit.converged
    assert fit.rmse is not None


def test_sigmoid_params_validation():
    with pytest.raises(InvalidInputError):
        SigmoidParams(a=-1.0, b=1.0, c=0.0)
    with pytest.raises(InvalidInputError):
        SigmoidParams(a=1.0, b=0.0, c=0.0)


@given(st.floats(-1e-5, 1e-5), st.floats(-1e-5, 1e-5))
@settings(max_examples=200)
def test_sigmoid_bounded_and_monotone(x1, x2):
    lo, hi = sorted((x1, x2))
    y_lo, y_hi = sigmoid(TABLE_CM, lo), sigmoid(TABLE_CM, hi)
    assert 0.0 <= y_lo <= TABLE_CM.a and 0.0 <= y_hi <= TABLE_CM.a
    assert y_hi >= y_lo  # b < 0: increasing


@given(st.floats(1e-8, 10.0), st.floats(-3e6, -1e3), st.floats(-1e-4, 1e-4))
@settings(max_examples=200)
def test_sigmoid_midpoint_exact(a, b, c):
    p = SigmoidParams(a=a, b=b, c=c)
    assert sigmoid(p, c) == a / 2  # exp(0) == 1 makes this exact


def test_neuron_transfer_midpoint_and_saturation():
    cm = preset_by_label("cm-1.8")
    assert neuron_transfer(cm, 2.618e-6) == pytest.approx(2.4585e-6, rel=1e-12)
    assert neuron_transfer(cm, 1e-3) == pytest.approx(cm.params.a, rel=1e-12)


def test_transfer_composition_monotone_over_crossbar():
    # sweep one row input through an 8x8 circuit; the composed neuron output
    # must be monotone while the other inputs stay fixed
    rng = np.random.default_rng(9)
    g = rng.uniform(1e-5, 1e-4, (8, 8))
    cfg = CrossbarConfig(8, 8, g, Parasitics(r_p=1.0, r_t=200.0), DriveMode.CURRENT)
    cm = preset_by_label("cm-1.8")
    base = np.full(8, 5e-7)
    outputs = []
    for u in np.linspace(0.0, 2e-6, 9):
        drive = base.copy()
        drive[3] = u
        i_col = solve_columns(cfg, drive)[5]
        outputs.append(neuron_transfer(cm, i_col))
    diffs = np.diff(outputs)
    assert np.all(diffs >= 0.0) or np.all(diffs <= 0.0)
