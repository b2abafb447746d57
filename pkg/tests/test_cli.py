import json

import pytest

from spiked_wigner import cli, experiment as ex

CONFIG = """N = 64
trials = 30
lambda = 0.8
master_seed = 3
[noise]
kind = "mixture"
[transform]
type = "optimal"
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "mix.toml"
    p.write_text(CONFIG)
    return p


def test_predict_supercritical(cfg_path, capsys):
    assert cli.main(["predict", str(cfg_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["lambda_e"] == pytest.approx(2.902, abs=1e-3)
    assert out["location"] == pytest.approx(2.2905, abs=2e-4)
    assert out["detection_threshold"] == pytest.approx(0.276, abs=2e-3)


def test_predict_identity_subcritical(capsys):
    assert cli.main(["predict", "--set", "lambda=0.5"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["regime"] == "subcritical" and out["location"] == 2.0


def test_predict_scaled_prints_shift(capsys):
    args = ["predict", "--set", "scaled=true", "--set", "lambda0=3.0",
            "--set", "transform.type=polynomial", "--set", "transform.coeffs=[-1, 3, 1]",
            "--set", "noise.kind=gaussian"]
    # (x^2 + 3x - 1)/sqrt(11) has E f' != 0, so the scaled branch is refused;
    # the quadratic with E f' = 0 is (x^2 - 1)/sqrt(2)
    assert cli.main(args) == cli.EXIT_CONFIG
    args = ["predict", "--set", "scaled=true", "--set", "lambda0=2.8284271247461903",
            "--set", "transform.type=hermite2"]
    assert cli.main(args) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["shift"] == pytest.approx(1.25, rel=1e-8)


def test_exit_codes(cfg_path, tmp_path):
    assert cli.main(["predict", "--set", "lambda=1.0"]) == cli.EXIT_NUMERICAL
    assert cli.main(["predict", str(cfg_path), "--set", "colour=red"]) == cli.EXIT_CONFIG
    assert cli.main(["predict", str(cfg_path), "--set", "novalue"]) == cli.EXIT_CONFIG
    assert cli.main(["predict", str(tmp_path / "absent.toml")]) == cli.EXIT_CONFIG
    with pytest.raises(SystemExit):
        cli.main(["figure", "9z", "--out", str(tmp_path)])


def test_overrides_nested():
    data = cli.apply_overrides({"noise": {"kind": "gaussian"}}, ["noise.kind=mixture", "N=12", "scaled=true"])
    assert data == {"noise": {"kind": "mixture"}, "N": 12, "scaled": True}


def test_simulate_then_analyze(cfg_path, tmp_path, capsys, monkeypatch):
    out = tmp_path / "run"
    assert cli.main(["simulate", str(cfg_path), "--out", str(out), "--quiet", "--dump-matrix"]) == 0
    for name in (cli.RESULTS_FILE, cli.EFFECTIVE_CONFIG, cli.MATRIX_FILE):
        assert (out / name).exists()
    capsys.readouterr()
    assert cli.main(["analyze", str(out / cli.RESULTS_FILE)]) == 0
    summary = json.loads(capsys.readouterr().out)
    # same summary as an in-process run
    cfg = ex.load_config(cfg_path)
    direct = ex.summarize(ex.run(cfg), cfg.prediction()).to_json_dict()
    assert summary["mean"] == direct["mean"] and summary["ks"] == direct["ks"]
    assert (out / cli.HISTOGRAM_FILE).exists() and (out / cli.SUMMARY_FILE).exists()


def test_workers_env_and_flag(cfg_path, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    cli.main(["simulate", str(cfg_path), "--out", str(tmp_path / "a"), "--quiet", "--canonical"])
    eff = json.loads((tmp_path / "a" / cli.EFFECTIVE_CONFIG).read_text())
    assert eff["config"]["workers"] == 3
    cli.main(["simulate", str(cfg_path), "--out", str(tmp_path / "b"), "--quiet", "--canonical", "--workers", "1"])
    eff = json.loads((tmp_path / "b" / cli.EFFECTIVE_CONFIG).read_text())
    assert eff["config"]["workers"] == 1
    a = (tmp_path / "a" / cli.RESULTS_FILE).read_bytes()
    assert a == (tmp_path / "b" / cli.RESULTS_FILE).read_bytes()


def test_seed_flag_changes_results(cfg_path, tmp_path):
    cli.main(["simulate", str(cfg_path), "--out", str(tmp_path / "a"), "--quiet", "--canonical"])
    cli.main(["simulate", str(cfg_path), "--out", str(tmp_path / "b"), "--quiet", "--canonical", "--seed", "99"])
    assert (tmp_path / "a" / cli.RESULTS_FILE).read_bytes() != (tmp_path / "b" / cli.RESULTS_FILE).read_bytes()


def test_validate_and_table_check(capsys):
    assert cli.main(["validate", "qve"]) == 0
    assert cli.main(["validate", "interpolation"]) == 0
    assert cli.main(["tw-table", "check"]) == 0
    assert "PASS" in capsys.readouterr().out
