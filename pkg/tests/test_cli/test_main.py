import json
import logging

import numpy as np
import pytest

from randes.base.exceptions import ConfigError
from randes.cli.config import bundled_config
from randes.cli.main import THREADS_ENV, _config_path, main, read_data_csv, resolve_seed, resolve_threads
from randes.simulation.verify import Cell, VerificationReport

from .conftest import write_data


def test_select(exact_csv, capsys, tmp_path):
    assert main(["select", str(exact_csv), "--dmax", "2", "--audit", str(tmp_path / "audit.csv")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("model: 1,2\n")
    assert float(out.splitlines()[1].split(" = ")[1]) == pytest.approx(1.5)
    assert (tmp_path / "audit.csv").read_text().startswith("model,dim,criterion\n")


@pytest.mark.parametrize(
    "options",
    [
        ["--collection", "ordered"],
        ["--penalty", "heuristic"],
        ["--penalty", "minimal", "--K", "2"],
        ["--penalty", "complexity", "--K", "1.5", "--dmax", "3"],
    ],
)
def test_select_options(exact_csv, capsys, options):
    assert main(["select", str(exact_csv), *options]) == 0
    assert capsys.readouterr().out.startswith("model: 1,2\n")


def test_select_explicit_collection(exact_csv, capsys, tmp_path):
    models = tmp_path / "models.txt"
    models.write_text("1: 0.5\n1,2: 0.25\n{}: 0.25\n", encoding="utf-8")
    argv = ["select", str(exact_csv), "--collection", "explicit", "--models", str(models), "--penalty", "prior"]
    assert main(argv + ["--K", "1.1"]) == 0
    assert capsys.readouterr().out.startswith("model: 1,2\n")


def test_select_warns_above_recommended_dmax(tmp_path, rng, capsys, caplog):
    x = rng.standard_normal((12, 4))
    path = write_data(tmp_path / "small.csv", x, x[:, 0] + 0.1 * rng.standard_normal(12))
    with caplog.at_level(logging.WARNING):
        assert main(["select", str(path), "--dmax", "3"]) == 0
    assert "dmax=3 exceeds the recommended cap 2 for n=12, p=4" in caplog.text


@pytest.mark.parametrize(
    "content,message",
    [
        ["", "empty data file"],
        ["y,x1\n", "no observations"],
        ["y,z1\n1,2\n", "header must be y,x1,...,xp"],
        ["y\n1\n", "header must be y,x1,...,xp"],
        ["y,x1,x2\n1,2\n", "every row needs 3 values"],
        ["y,x1\n1,abc\n", "could not convert"],
    ],
)
def test_select_bad_data(tmp_path, capsys, content, message):
    path = tmp_path / "data.csv"
    path.write_text(content, encoding="utf-8")
    assert main(["select", str(path)]) == 1
    assert message in capsys.readouterr().err


def test_read_data_csv(exact_csv):
    data = read_data_csv(exact_csv)
    assert (data.n, data.p) == (30, 4)
    assert data.y == pytest.approx(1.5 * data.x[:, 0] - 2.0 * data.x[:, 1])


@pytest.mark.parametrize(
    "options,message",
    [
        [["--collection", "explicit"], "needs --models"],
        [["--eta", "0.5"], "assumption check failed"],
        [["--penalty", "prior", "--K", "1.1"], "explicit collection with prior weights"],
        [["--dmax", "40"], "dmax"],
        [["--K", "-1"], "greater than 0"],
    ],
)
def test_select_errors(exact_csv, capsys, options, message):
    assert main(["select", str(exact_csv), *options]) == 1
    assert message in capsys.readouterr().err


def test_missing_data_file(tmp_path, capsys):
    assert main(["select", str(tmp_path / "missing.csv")]) == 1
    assert "error:" in capsys.readouterr().err


def test_usage_errors_exit_with_one(capsys):
    with pytest.raises(SystemExit) as e:
        main(["verify", "everything"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["covariance", "sigma2"])
    assert e.value.code == 1


def test_verify_circulant(capsys):
    assert main(["verify", "circulant-psd"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "circulant-psd: passed, 42/42 asserted cells pass"


def test_verify_concentration(capsys):
    argv = ["verify", "concentration", "--kind", "chi2_lower", "--d", "20", "--x", "1", "--reps", "2000", "--seed", "1"]
    assert main(argv) == 0
    assert "PASS  chi2_lower(d=20, x=1.0)" in capsys.readouterr().out


def test_verify_concentration_needs_d_and_x(capsys):
    assert main(["verify", "concentration", "--kind", "chi2_upper", "--seed", "1"]) == 1
    assert "--kind needs --d and --x" in capsys.readouterr().err


def test_verify_risk_identities(capsys):
    argv = ["verify", "risk-identities", "--reps", "5000", "--seed", "3", "--n", "20", "--model", "1,2"]
    assert main(argv) == 0
    assert "risk-identities: passed" in capsys.readouterr().out


def test_verify_lemma21_alias(capsys):
    assert main(["verify", "lemma21", "--reps", "2000", "--seed", "7"]) == 0
    aliased = capsys.readouterr().out
    assert main(["verify", "risk-identities", "--reps", "2000", "--seed", "7"]) == 0
    assert capsys.readouterr().out == aliased
    assert "risk-identities: passed" in aliased


def test_verify_failure_exits_with_two(monkeypatch, capsys):
    failing = VerificationReport(
        suite="fpe-trend",
        cells=[Cell(name="median at n=400", observed=2.0, expected=1.5, tolerance=0.0, passed=False)],
    )
    monkeypatch.setattr("randes.cli.main.run_suite", lambda args: failing)
    assert main(["verify", "fpe-trend"]) == 2
    assert "fpe-trend: failed, 0/1 asserted cells pass" in capsys.readouterr().out


def test_verify_theta_longer_than_p(capsys):
    assert main(["verify", "risk-identities", "--theta", "1,2,3", "--p", "2", "--seed", "1"]) == 1
    assert "--theta has 3 entries but p=2" in capsys.readouterr().err


def test_covariance(capsys, tmp_path):
    assert main(["covariance", "sigma2", "--p", "5"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert len(rows) == 5
    assert [len(row.split(",")) for row in rows] == [5] * 5

    out = tmp_path / "psi.csv"
    assert main(["covariance", "exp_circulant", "--p", "7", "--omega", "0.5", "--out", str(out)]) == 0
    assert np.loadtxt(out, delimiter=",").shape == (7, 7)


@pytest.mark.parametrize(
    "argv,message",
    [
        [["covariance", "exp_circulant", "--p", "7"], "needs --omega"],
        [["covariance", "poly_circulant", "--p", "7"], "needs --t"],
        [["covariance", "exp_circulant", "--p", "8", "--omega", "1"], "odd p"],
        [["covariance", "sigma2", "--p", "3"], "p >= 4"],
    ],
)
def test_covariance_errors(capsys, argv, message):
    assert main(argv) == 1
    assert message in capsys.readouterr().err


def test_simulate_is_reproducible(tiny_config, capsys):
    assert main(["simulate", str(tiny_config), "--seed", "5"]) == 0
    first = capsys.readouterr().out
    assert main(["simulate", str(tiny_config), "--seed", "5"]) == 0
    assert capsys.readouterr().out == first
    lines = first.splitlines()
    assert lines[0] == "# seed: 5"
    assert lines[3] == "estimator,n,metric,value,ci_half_width,reps,seed"
    assert len(lines) == 4 + 2 * 3
    assert lines[4].startswith("fpe,12,risk_ratio,")
    assert lines[4].endswith(",3,5")


def test_simulate_json_to_file(tiny_config, tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["simulate", str(tiny_config), "--seed", "5", "--format", "json", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    document = json.loads(out.read_text())
    assert document["seed"] == 5
    assert {row["estimator"] for row in document["rows"]} == {"fpe", "K=1.1"}


def test_simulate_draws_and_prints_a_seed(tiny_config, capsys):
    assert main(["simulate", str(tiny_config)]) == 0
    captured = capsys.readouterr()
    seed = int(captured.err.split("seed: ")[1].split()[0])
    assert captured.out.startswith(f"# seed: {seed}\n")


def test_simulate_rejects_unknown_keys(tiny_config, capsys):
    tiny_config.write_text(tiny_config.read_text() + "\n[extra]\nkind = lasso\nsolver = lars\n")
    assert main(["simulate", str(tiny_config), "--seed", "1"]) == 1
    assert "unknown key 'solver'" in capsys.readouterr().err


def test_config_path():
    assert _config_path("experiment1_n30") == bundled_config("experiment1_n30")
    assert str(_config_path("runs/mine.cfg")) == "runs/mine.cfg"
    with pytest.raises(ConfigError):
        _config_path("experiment42")


def test_resolve_threads(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert resolve_threads(None) == 1
    assert resolve_threads(None, 3) == 3
    assert resolve_threads(2, 3) == 2
    monkeypatch.setenv(THREADS_ENV, "4")
    assert resolve_threads(None, 3) == 4
    assert resolve_threads(2, 3) == 2
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigError, match="must be an integer"):
        resolve_threads(None)
    with pytest.raises(ConfigError, match="positive"):
        resolve_threads(0)


def test_resolve_seed(capsys):
    assert resolve_seed(11).master_seed == 11
    assert capsys.readouterr().err == ""
    drawn = resolve_seed(None)
    assert capsys.readouterr().err == f"seed: {drawn.master_seed}\n"
