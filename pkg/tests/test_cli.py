import csv
import json
import math
import subprocess
import sys

import pytest

from plsrmt.cli import main


def run(args, tmp_path, capsys=None):
    code = main([*args, "--out", str(tmp_path)])
    out = capsys.readouterr() if capsys else None
    return code, out


def test_threshold_prints_two(tmp_path, capsys):
    code, out = run(["theory-threshold", "--beta-p", "1", "--beta-q", "1"], tmp_path, capsys)
    assert code == 0
    assert out.out.strip() == "2.0"


def test_bulk_edges_in_json(tmp_path, capsys):
    code, out = run(["theory-bulk", "--beta-p", "1", "--beta-q", "1"], tmp_path, capsys)
    assert code == 0
    data = json.loads(out.out)
    assert abs(data["x_minus"]) < 1e-8 and abs(data["x_plus"] - 6.75) < 1e-8
    saved = json.loads((tmp_path / "bulk.json").read_text())
    assert saved["x_plus"] == data["x_plus"]
    with open(tmp_path / "density.csv") as fh:
        assert next(csv.reader(fh)) == ["x", "f", "F"]


def test_missing_required_flag_exits_nonzero(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["theory-threshold", "--beta-p", "1", "--out", str(tmp_path)])
    assert exc.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_manifest_records_inputs_seed_and_versions(tmp_path):
    code, _ = run(["simulate", "--n", "200", "--p", "100", "--q", "50", "--lambdas-M", "30", "--seed", "0x10"],
                  tmp_path)
    assert code == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["seed"] == 16
    assert {"python", "numpy", "scipy", "plsrmt"} <= set(manifest["versions"])
    assert manifest["wall_time_s"] >= 0
    assert "spectrum.csv" in manifest["outputs"]


def test_data_files_are_idempotent(tmp_path):
    args = ["experiment", "--n", "300", "--p", "100", "--q", "150", "--lambdas-M", "25", "--trials", "3",
            "--seed", "5", "--threads", "2"]
    files = {}
    for sub in ("a", "b"):
        assert main([*args, "--out", str(tmp_path / sub)]) == 0
        files[sub] = {p.name: p.read_bytes() for p in (tmp_path / sub).iterdir() if p.name != "manifest.json"}
    assert files["a"] and files["a"] == files["b"]


def test_bad_override_exits_one(tmp_path, capsys):
    code, out = run(["simulate", "--n", "100", "--p", "50", "--q", "50", "--set", "nonsense=3"], tmp_path, capsys)
    assert code == 1
    assert "error" in out.err


def test_invalid_model_exits_one(tmp_path, capsys):
    code, out = run(["simulate", "--n", "2", "--p", "50", "--q", "50", "--lambdas-M", "3,2,1"], tmp_path, capsys)
    assert code == 1


def test_spike_map_columns(tmp_path):
    code, _ = run(["theory-spikes", "--beta-p", "10", "--beta-q", "2", "--lambdas", "25,1"], tmp_path)
    assert code == 0
    with open(tmp_path / "spike_map.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["lambda", "xi", "zeta_P", "zeta_R", "zeta_M", "zeta_N"]
    assert math.isclose(float(rows[0]["xi"]), 26 * 35 * 27 / 625, rel_tol=1e-9)


def test_reproduce_fig7_writes_three_heatmaps(tmp_path):
    code, _ = run(["reproduce", "fig7"], tmp_path)
    assert code == 0
    for name in ("pls", "pca", "difference"):
        svg = (tmp_path / f"fig7_{name}.svg").read_text()
        assert svg.startswith("<svg") or svg.startswith("<?xml")
    summary = json.loads((tmp_path / "fig7_summary.json").read_text())
    assert summary["beta_p"] == 4.0 and summary["beta_q"] == 4.0
    assert summary["min_difference_where_pca_detects"] >= -1e-12


def test_unknown_figure_is_rejected(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "fig9", "--out", str(tmp_path)])
    assert exc.value.code != 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "plsrmt", "theory-threshold", "--beta-p", "4", "--beta-q", "4", "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert abs(float(proc.stdout) - (2 + 2 * math.sqrt(3))) < 1e-9
