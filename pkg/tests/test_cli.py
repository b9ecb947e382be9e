import json
import subprocess
import sys

import pytest

from fddlab.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_fdd_compute_threshold(capsys):
    code, out, _ = run(["fdd", "compute", "--phi", "kl", "--class", "threshold", "--h", "0.5"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "fdd-lab/1" and doc["command"] == "fdd"
    assert doc["result"]["value"] == pytest.approx(0.130812, abs=1e-6)
    assert doc["config"]["seed"] == 0


def test_config_round_trip_is_identical(capsys, tmp_path):
    code, first, _ = run(["fdd", "compute", "--phi", "kl", "--rashomon", "0.25"], capsys)
    assert code == 0
    cfg = tmp_path / "run.json"
    cfg.write_text(first)
    code, second, _ = run(["fdd", "--config", str(cfg)], capsys)
    assert code == 0 and second == first


def test_flags_override_config(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"phi": "chi2", "h": 0.5}))
    _, out, _ = run(["fdd", "--config", str(cfg), "--phi", "kl"], capsys)
    assert json.loads(out)["config"]["phi"] == "kl"


def test_unknown_config_key_is_usage_error(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"phi": "kl", "bogus": 1}))
    code, _, _ = run(["fdd", "--config", str(cfg)], capsys)
    assert code == 2


def test_bad_flag_exit_code(capsys):
    code, _, _ = run(["fdd", "--no-such-flag"], capsys)
    assert code == 2


def test_domain_error_exit_code(capsys):
    code, _, err = run(["phi", "--kind", "reverse_kl", "--at", "1.0"], capsys)
    assert code == 3 and "numerical" in err


def test_bounds_fastrate(capsys):
    code, out, _ = run(["bounds", "fastrate", "--m", "0", "--c2", "0.999"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert 1.255 <= res["C1"] <= 1.257


def test_bounds_csv(capsys):
    code, out, _ = run(["bounds", "target", "--kind", "localized", "--c2", "0.1", "--csv"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "component,value,coefficient" and lines[-1].startswith("total,")


def test_estimate_chi2_scaled(capsys, tmp_path):
    inp = tmp_path / "w.json"
    inp.write_text(json.dumps({"on_P": [1.0, 0.0], "on_Q": [1.0, 0.0], "weights_P": [0.5, 0.5], "weights_Q": [0.25, 0.75]}))
    code, out, _ = run(["estimate", "--phi", "chi2", "--method", "scaled", "--input", str(inp)], capsys)
    assert code == 0
    assert json.loads(out)["result"]["value"] == pytest.approx(1 / 3, abs=1e-8)


def test_reproduce_threshold_example(capsys):
    code, out, err = run(["reproduce", "threshold-example"], capsys)
    assert code == 0
    assert "fdd_kl" in err
    rows = json.loads(out)["result"]["rows"]
    assert all(r["pass"] for r in rows)


def test_dataset_blind_csv(capsys, tmp_path):
    path = tmp_path / "d.csv"
    code, _, _ = run(["dataset", "--task", "two-moons", "--n", "4", "--m", "3", "--blind", "--csv", "--out", str(path)], capsys)
    assert code == 0
    assert len(path.read_text().strip().splitlines()) == 8


def test_train_small(capsys, tmp_path):
    log = tmp_path / "t.csv"
    code, out, _ = run(["train", "--discrepancy", "kl", "--outer-steps", "20", "--hidden", "4", "--log", str(log)], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert "source_acc" in res["metrics"]
    assert log.read_text().startswith("step,discrepancy")


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "fddlab.cli", "bounds", "fastrate", "--m", "1", "--c2", "0.1"], capture_output=True, text=True)
    assert r.returncode == 0
    assert 3.73 <= json.loads(r.stdout)["result"]["C1"] <= 3.75
