import json

import numpy as np
import pytest
import yaml

from mimocorr import cli
from mimocorr.capacity import CapacityCurve
from mimocorr.errors import NumericalFailure
from mimocorr.scenario import ConfigError, load_scenario, parse_scenario

SMALL = {
    "format_version": 1,
    "scenario": "small",
    "seed": 5,
    "trials": 200,
    "snr_db": [0, 10, 20],
    "variants": ["exact", "kronecker", "iid"],
    "tx_array": {"type": "uca", "elements": 3, "radius": 0.5},
    "rx_array": {"type": "uca", "elements": 2, "radius": 0.25},
    "psd": [{"id": "g", "family": "gaussian", "mean_departure": 90, "mean_arrival": 90,
             "spread_t": 10, "spread_r": 20, "rho": 0.8}],
    "outputs": {"dir": "out", "psd_grid": {"resolution": 31, "variants": ["exact", "kronecker"]}},
}


def write_config(tmp_path, data, name="small.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def test_run_writes_curves_and_manifest(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    out = tmp_path / "res"
    assert cli.main(["run", str(cfg), "--out-dir", str(out)]) == 0
    for variant in ("exact", "kronecker", "iid"):
        curve = CapacityCurve.from_csv(out / f"small__g__{variant}.csv")
        assert curve.trials == 200 and list(curve.snr_db) == [0, 10, 20]
        assert np.all(np.isfinite(curve.mean_mi))
    manifest = json.loads((out / "manifest.json").read_text())
    for key in ("config", "config_sha256", "seed", "trials", "snr_db", "variants", "method",
                "mode_half_width", "numerics", "versions", "diagnostics", "timings_s", "outputs"):
        assert key in manifest
    assert manifest["seed"] == 5
    assert manifest["mode_half_width"] == {"tx": 5, "rx": 3}
    assert len(manifest["outputs"]["psd_grids"]) == 2
    assert "small__g__exact.csv" in capsys.readouterr().out


def test_runs_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    for d in ("a", "b"):
        assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path / d)]) == 0
    for variant in ("exact", "kronecker", "iid"):
        name = f"small__g__{variant}.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_and_trial_overrides(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path / "a"), "--trials", "30"]) == 0
    assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path / "b"), "--trials", "30",
                     "--seed", "6"]) == 0
    a = CapacityCurve.from_csv(tmp_path / "a" / "small__g__iid.csv")
    b = CapacityCurve.from_csv(tmp_path / "b" / "small__g__iid.csv")
    assert a.trials == 30
    assert not np.array_equal(a.mean_mi, b.mean_mi)


def test_invalid_rho_is_a_config_error(tmp_path, capsys):
    data = json.loads(json.dumps(SMALL))
    data["psd"][0]["rho"] = 1.5
    cfg = write_config(tmp_path, data)
    assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path / "x")]) == 2
    assert "psd[0].rho" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d.update(colour="red"), "colour"),
    (lambda d: d["psd"][0].update(family="vonmises"), "psd[0].family"),
    (lambda d: d["psd"][0].update(spread_t=-1), "psd[0].spread_t"),
    (lambda d: d["tx_array"].update(elements=0), "tx_array.elements"),
    (lambda d: d.update(variants=["exact", "other"]), "variants[1]"),
    (lambda d: d.pop("snr_db"), "snr_db"),
])
def test_config_errors_name_the_field(mutate, field):
    data = json.loads(json.dumps(SMALL))
    mutate(data)
    with pytest.raises(ConfigError) as info:
        parse_scenario(data)
    assert info.value.field == field


def test_closed_form_rejected_for_mixture():
    data = json.loads(json.dumps(SMALL))
    data["method"] = "closed-form"
    data["psd"] = {"family": "mixture", "components": [SMALL["psd"][0], SMALL["psd"][0]]}
    with pytest.raises(ConfigError) as info:
        parse_scenario(data)
    assert info.value.field == "method"


def test_missing_file_is_config_error(tmp_path):
    assert cli.main(["run", str(tmp_path / "nope.yaml")]) == 2


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def fail(*args, **kwargs):
        raise NumericalFailure("quadrature did not converge")

    monkeypatch.setattr(cli, "build_rs", fail)
    cfg = write_config(tmp_path, SMALL)
    assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path / "o")]) == 3
    assert "did not converge" in capsys.readouterr().err


def test_export_psd(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    assert cli.main(["export-psd", str(cfg), "--variant", "kronecker", "--resolution", "40",
                     "--out-dir", str(tmp_path)]) == 0
    path = tmp_path / "small__g__psd_kronecker.csv"
    lines = path.read_text().splitlines()
    assert lines[0] == "phi_deg,varphi_deg,density"
    assert len(lines) == 1 + 40 * 40
    assert "local_maxima=1" in capsys.readouterr().out


def test_shipped_scenarios_load():
    from pathlib import Path
    root = Path(__file__).resolve().parent.parent / "scenarios"
    single = load_scenario(root / "single_cluster.yaml")
    multi = load_scenario(root / "three_clusters.yaml")
    assert [c.id for c in single.cases] == ["sigma_r_30", "sigma_r_10"]
    assert len(multi.cases[0].psd.components) == 3
    assert single.snr_db == (0, 5, 10, 15, 20, 25, 30)
