import json

import numpy as np
import pytest

from xbarsim import NumericalFailureError, fit_sigmoid, sigmoid, preset_by_label
from xbarsim.cli import main

KEYSTONE = """
[crossbar]
n_rows = 2
n_cols = 2

[crossbar.conductance]
matrix = [[1e-4, 2e-4], [3e-4, 4e-4]]

[analysis]
drive = [1.0, 0.5]
"""


def _cfg(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_dotprod_keystone_via_cli(tmp_path, capsys):
    out = tmp_path / "dp.json"
    code = main(["dotprod", "--config", _cfg(tmp_path, KEYSTONE),
                 "--format", "json", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    ideal = np.array(doc["results"]["ideal_ampere"])
    simulated = np.array(doc["results"]["simulated_ampere"])
    assert simulated == pytest.approx(ideal, rel=1e-9)
    assert ideal == pytest.approx([2.5e-4, 4e-4], rel=1e-12)


def test_missing_config_is_exit_1(tmp_path, capsys):
    assert main(["dotprod", "--config", str(tmp_path / "nope.toml")]) == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_key_is_exit_1(tmp_path, capsys):
    bad = _cfg(tmp_path, KEYSTONE.replace("n_rows", "n_row"))
    assert main(["dotprod", "--config", bad]) == 1
    assert "n_row" in capsys.readouterr().err


def test_bad_flag_is_exit_1(tmp_path, capsys):
    assert main(["sweep", "--config", _cfg(tmp_path, KEYSTONE), "--format", "xml"]) == 1


def test_numerical_failure_maps_to_exit_2(tmp_path, capsys, monkeypatch):
    import xbarsim.cli as cli

    def boom(sys_):
        raise NumericalFailureError("synthetic pivot failure", pivot=3)

    monkeypatch.setattr(cli, "solve_dc", boom)
    assert main(["dotprod", "--config", _cfg(tmp_path, KEYSTONE)]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_settling_timeout_maps_to_exit_3(tmp_path, capsys):
    text = KEYSTONE + "\n[parasitics]\nc_p = 1e-12\nr_t = 1e3\n" + \
        "\n[output]\npath = \"e\"\nformat = \"json\"\n"
    code = main(["energy", "--config", _cfg(tmp_path, text),
                 "--set", "analysis.max_settle_time=1e-15",
                 "--out", str(tmp_path / "e.json")])
    assert code == 3
    assert "timeout" in capsys.readouterr().err


def test_presets_emitted_exactly(tmp_path, capsys):
    out = tmp_path / "presets.json"
    assert main(["presets", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    by_label = {p["label"]: p for p in doc["results"]["presets"]}
    assert by_label["vm-1.8"]["a"] == 1.754
    assert by_label["vm-1.8"]["b"] == -2.13e6
    assert by_label["vm-1.8"]["c"] == 4.963e-6
    assert by_label["vm-1.8"]["power_watt"] == 100.8e-6
    assert by_label["cm-1.8"]["z_in_ohm"] == 200.0
    assert by_label["cm-1.0"]["bandwidth_hz"] == 10e6


def test_fit_sigmoid_from_planted_csv(tmp_path, capsys):
    planted = preset_by_label("cm-1.8").params
    x = np.linspace(0.0, 10e-6, 200)
    y = sigmoid(planted, x)
    data = tmp_path / "samples.csv"
    data.write_text("x,y\n" + "\n".join(f"{xi:.17g},{yi:.17g}" for xi, yi in zip(x, y)))
    out = tmp_path / "fit.json"
    code = main(["fit-sigmoid", "--data", str(data), "--format", "json", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["results"]["a"] == pytest.approx(planted.a, rel=1e-3)
    assert doc["results"]["b"] == pytest.approx(planted.b, rel=1e-3)
    assert doc["results"]["c"] == pytest.approx(planted.c, rel=1e-3)


def test_neuron_transfer_midpoint(tmp_path, capsys):
    out = tmp_path / "nt.json"
    code = main(["neuron-transfer", "--preset", "cm-1.8", "--input", "2.618e-6",
                 "--format", "json", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["results"]["output_A"] == pytest.approx(2.4585e-6, rel=1e-12)


def test_sweep_csv_layout_and_roundtrip(tmp_path, capsys):
    text = KEYSTONE + "\n[parasitics]\nr_p = 1.0\nr_t = 10.0\n"
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--config", _cfg(tmp_path, text),
                 "--parameter", "r_t", "--values", "10,100,1000",
                 "--metrics", "error_vm,error_cm",
                 "--format", "csv", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# config = ")
    assert lines[1] == "r_t_ohm,error_vm,error_cm"
    assert len(lines) == 5  # comment + header + 3 rows
    first = [float(v) for v in lines[2].split(",")]
    assert first[0] == 10.0

    # round trip: the embedded config reproduces the result bit-identically
    embedded = json.loads(lines[0][len("# config = "):])
    cfg2 = tmp_path / "embedded.json"
    cfg2.write_text(json.dumps(embedded))
    out2 = tmp_path / "sweep2.csv"
    code = main(["sweep", "--config", str(cfg2),
                 "--parameter", "r_t", "--values", "10,100,1000",
                 "--metrics", "error_vm,error_cm",
                 "--format", "csv", "--out", str(out2)])
    assert code == 0
    assert out2.read_text().splitlines()[1:] == lines[1:]


def test_montecarlo_deterministic_via_cli(tmp_path, capsys):
    text = KEYSTONE + "mc_samples = 20\nmc_g_std = 0.01\nseed = 42\n"
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["montecarlo", "--config", _cfg(tmp_path, text), "--format", "json", "--out", str(a)]) == 0
    assert main(["montecarlo", "--config", _cfg(tmp_path, text), "--format", "json", "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()


def test_seventeen_digit_rendering_roundtrips(tmp_path, capsys):
    out = tmp_path / "dp.json"
    main(["dotprod", "--config", _cfg(tmp_path, KEYSTONE), "--format", "json", "--out", str(out)])
    doc = json.loads(out.read_text())
    # parse back and compare bit-exact against a direct computation
    from conftest import solve_columns
    from xbarsim import CrossbarConfig

    cfg = CrossbarConfig(2, 2, np.array([[1e-4, 2e-4], [3e-4, 4e-4]]))
    direct = solve_columns(cfg, np.array([1.0, 0.5]))
    assert doc["results"]["simulated_ampere"] == direct.tolist()


def test_output_lands_only_at_requested_path(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    before = set(tmp_path.iterdir())
    out = tmp_path / "only_here.json"
    main(["presets", "--format", "json", "--out", str(out)])
    created = set(tmp_path.iterdir()) - before
    assert created == {out}
