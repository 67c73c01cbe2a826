import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

from anisovac.cli import main
from anisovac.config import load_config
from anisovac.runner import data_section, render_csv, run, sweep
from anisovac.vacuum import read_tabulated, tabulated_tensor

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
PI = math.pi


def read_rows(path):
    lines = data_section(Path(path).read_text()).splitlines()
    cols = lines[0].split(",")
    return [dict(zip(cols, map(float, ln.split(",")))) for ln in lines[1:]]


def cli(tmp_path, *args):
    code = main([*map(str, args), "--out", str(tmp_path / "out")])
    return code


def only_csv(tmp_path, command):
    found = list((tmp_path / "out").glob(f"{command}-*/data.csv"))
    assert len(found) == 1
    return found[0]


def test_coeffs_plates(tmp_path):
    assert cli(tmp_path, "--config", CONFIGS / "coeffs_plates.toml") == 0
    (row,) = read_rows(only_csv(tmp_path, "coeffs"))
    assert row["gamma1"] == pytest.approx(11 / 9, rel=1e-12)
    assert row["re_kappa1"] == pytest.approx(-2 / 9, rel=1e-12)
    assert row["gamma2"] == pytest.approx(11 / 9, rel=1e-12)


def test_cutoff_sweep_kappa_equals_gamma(tmp_path):
    code = cli(tmp_path, "--config", CONFIGS / "sweep_cutoff.toml", "--sweep.axes",
               "[{name='kd', min=0.05, max=3.141592653589793, count=20}]", "--format", "csv")
    assert code == 0
    rows = read_rows(only_csv(tmp_path, "sweep"))
    assert len(rows) == 20
    for r in rows:
        assert r["kappa1_over_gamma1"] == 1.0 and r["kappa2_over_gamma2"] == 1.0


def test_negative_separation_is_config_error(tmp_path, capsys):
    code = cli(tmp_path, "coeffs", "--model.kind", "plates", "--model.plates.d", "-1", "--model.plates.b", "0.5")
    assert code == 1
    assert "model.plates.d" in capsys.readouterr().err


def test_unsupported_axis_is_config_error(tmp_path, capsys):
    code = cli(tmp_path, "--config", CONFIGS / "sweep_cutoff.toml", "--sweep.axes", "[{name='d', min=1, max=2}]")
    assert code == 1
    assert "unsupported axis" in capsys.readouterr().err


def test_pole_is_numerical_error(tmp_path, capsys):
    code = cli(tmp_path, "--config", CONFIGS / "two_photon_zero.toml", "--two_photon.scan",
               "{min=0.5, max=1.0, count=3}")
    assert code == 2
    assert "numerical error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert cli(tmp_path, "--config", tmp_path / "nope.toml") == 1


def test_sweep_grid_ordering():
    base = {
        "model": {"kind": "plates", "plates": {"kd": 1.0, "b_over_d": 0.5}},
        "sweep": {"target": "coeffs", "axes": [{"name": "kd", "min": 1.0, "max": 5.0, "count": 5}]},
    }
    res = sweep(base)
    kds = [r[0] for r in res.table.rows]
    assert kds == sorted(kds) and len(kds) == 5

    base["sweep"]["axes"] = [
        {"name": "kd", "min": 1.0, "max": 3.0, "count": 3},
        {"name": "b_over_d", "min": 0.2, "max": 0.8, "count": 4},
    ]
    rows = sweep(base).table.rows
    assert len(rows) == 12
    expected = [(a, b) for a in np.linspace(1, 3, 3) for b in np.linspace(0.2, 0.8, 4)]
    assert [(r[0], r[1]) for r in rows] == pytest.approx(expected)


def test_log_spacing_and_count_one():
    base = {"model": {"kind": "plates", "plates": {"kd": 1.0, "b_over_d": 0.5}},
            "sweep": {"target": "coeffs", "axes": [{"name": "kd", "min": 1.0, "max": 100.0, "count": 3,
                                                    "spacing": "log"}]}}
    assert [r[0] for r in sweep(base).table.rows] == pytest.approx([1.0, 10.0, 100.0])
    base["sweep"]["axes"][0]["count"] = 1
    assert len(sweep(base).table.rows) == 1


def test_trapping_destroyed_by_splitting(tmp_path):
    assert cli(tmp_path, "--config", CONFIGS / "evolve_trapping.toml") == 0
    rows = read_rows(only_csv(tmp_path, "sweep"))
    excited = [r["excited"] for r in rows]
    assert excited[0] == pytest.approx(0.5, abs=1e-6)
    assert excited[0] > excited[1] > excited[2]


def test_determinism_and_parallel_equivalence(tmp_path):
    cfg = load_config(CONFIGS / "sweep_cutoff.toml")
    cfg["output"] = {"dir": str(tmp_path / "a"), "formats": ["csv"]}
    one = run(dict(cfg, workers=1))[0].read_text()
    two = run(dict(cfg, workers=1))[0].read_text()
    par = run(dict(cfg, workers=3))[0].read_text()
    assert data_section(one) == data_section(two) == data_section(par)
    strip = lambda t: [ln for ln in t.splitlines() if not ln.startswith("# timestamp")]
    assert strip(one) == strip(two) == strip(par)


def test_config_roundtrip_from_header(tmp_path):
    first = run(load_config(CONFIGS / "evolve_trapping.toml") | {"output": {"dir": str(tmp_path / "a")}})[0]
    again = main(["--config", str(first), "--out", str(tmp_path / "b")])
    assert again == 0
    second = next((tmp_path / "b").glob("sweep-*/data.csv"))
    assert second.parent.name == first.parent.name
    assert data_section(second.read_text()) == data_section(first.read_text())


def test_header_format():
    text = render_csv(
        sweep({"model": {"kind": "free-space"}, "tensor": {"omega": 1.0},
               "sweep": {"target": "tensor", "axes": [{"name": "omega1", "values": [1.0]}]}}).table,
        {"command": "sweep"}, "sweep", timestamp="T",
    )
    lines = text.splitlines()
    assert lines[0].startswith("# anisovac ")
    assert any(ln.startswith("# config_hash: ") for ln in lines)
    json.loads(next(ln for ln in lines if ln.startswith("# config: "))[len("# config: "):])
    assert lines[-1].split(",")[1] == "1"


def test_floats_have_17_significant_digits(tmp_path):
    assert cli(tmp_path, "--config", CONFIGS / "coeffs_plates.toml") == 0
    text = data_section(only_csv(tmp_path, "coeffs").read_text())
    assert "1.2222222222222223" in text and "-0.22222222222222221" in text


def test_tensor_output_is_ingestible(tmp_path):
    code = cli(tmp_path, "tensor", "--model.kind", "plates", "--model.plates.d", "1.0",
               "--model.plates.b", "0.3", "--tensor.grid", "{min=1.0, max=9.0, count=9}")
    assert code == 0
    tab = read_tabulated(only_csv(tmp_path, "tensor"))
    assert tabulated_tensor(tab, 1.5 * PI if 1.5 * PI <= 9 else 9).matrix.shape == (3, 3)
    # feed it back as a tabulated model and recover the coefficients
    code = cli(tmp_path, "coeffs", "--model.kind", "tabulated", "--model.tabulated.path",
               f'"{only_csv(tmp_path, "tensor")}"', "--atom.omega1", "3.0", "--atom.omega2", "3.0")
    assert code == 0


def test_dark_command(tmp_path):
    code = cli(tmp_path, "dark", "--coefficients", "{gamma1=1.0, gamma2=1.0, kappa1=1.0, kappa2=1.0}")
    assert code == 0
    rows = read_rows(only_csv(tmp_path, "dark"))
    assert len(rows) == 2
    assert rows[1]["excited_population"] == pytest.approx(1.0)


def test_evolve_command_columns(tmp_path):
    code = cli(tmp_path, "evolve", "--coefficients", "{gamma1=0.5, gamma2=0.5}", "--evolve.t_end", "1.0",
               "--evolve.dt", "0.01", "--evolve.stride", "10", "--atom.omega1", "1.0")
    assert code == 0
    path = only_csv(tmp_path, "evolve")
    header = data_section(path.read_text()).splitlines()[0]
    assert header == "t,rho11,rho22,rho33,re_rho12,im_rho12,emission_rate"
    rows = read_rows(path)
    assert len(rows) == 11
    assert rows[-1]["rho11"] == pytest.approx(math.exp(-1.0), abs=1e-8)


def test_two_photon_zero_header(tmp_path):
    assert cli(tmp_path, "--config", CONFIGS / "two_photon_zero.toml") == 0
    text = only_csv(tmp_path, "two-photon").read_text()
    zero = float(next(ln for ln in text.splitlines() if ln.startswith("# zero:")).split(":")[1])
    assert zero == pytest.approx(1.5, abs=1e-9)
    assert data_section(text).splitlines()[0] == "omega_l,T_total,T_direct,T_interference"


def test_plot_failure_does_not_fail_run(tmp_path, monkeypatch):
    monkeypatch.setitem(sys.modules, "matplotlib", None)
    assert cli(tmp_path, "--config", CONFIGS / "coeffs_plates.toml", "--format", "csv,svg") == 0
    assert not list((tmp_path / "out").glob("*/plot.svg"))


def test_svg_written(tmp_path):
    pytest.importorskip("matplotlib")
    assert cli(tmp_path, "--config", CONFIGS / "two_photon_zero.toml", "--format", "csv,svg") == 0
    assert list((tmp_path / "out").glob("two-photon-*/plot.svg"))


def test_hash_ignores_output_location_but_not_units():
    from anisovac.config import config_hash

    base = {"command": "coeffs", "output": {"dir": "a", "formats": ["csv"]}}
    assert config_hash(base) == config_hash({"command": "coeffs", "output": {"dir": "b"}, "workers": 4})
    assert config_hash(base) != config_hash({"command": "coeffs", "output": {"units": "absolute"}})


def test_run_does_not_mutate_input(tmp_path):
    data = {"command": "coeffs", "model": {"kind": "free-space"}, "output": {"dir": str(tmp_path)}}
    snapshot = json.dumps(data, sort_keys=True)
    run(data)
    assert json.dumps(data, sort_keys=True) == snapshot
