"""Tests for the fraclap command line."""

import json

import pytest

from fraclap.cli import _glue_negative_values, main


@pytest.fixture
def solution(tmp_path):
    out = tmp_path / "sol.json"
    code = main(["solve", "--s", "0.5", "--domain", "-1,1", "--f", "const:1", "--n", "512",
                 "--out", str(out)])
    assert code == 0
    return out


def test_glue_negative_values():
    assert _glue_negative_values(["--domain", "-1,1", "--n", "8"]) == ["--domain=-1,1", "--n", "8"]
    assert _glue_negative_values(["--domain", "-.5,1"]) == ["--domain=-.5,1"]
    assert _glue_negative_values(["-v", "--s", "0.5"]) == ["-v", "--s", "0.5"]


# --- solve ---


def test_solve_writes_solution_report_and_manifest(solution):
    report = solution.with_name("sol.report.json")
    manifest = solution.with_name("sol.json.manifest.json")
    assert report.exists() and manifest.exists()
    doc = json.loads(solution.read_text())
    assert doc["grid"]["shape"] == [513]
    assert doc["meta"]["source"] == "solve"
    assert set(json.loads(report.read_text())) >= {"energy", "stability_gap", "cond_est"}
    meta = json.loads(manifest.read_text())
    assert meta["command"] == "solve"
    assert meta["argv"][:3] == ["solve", "--s", "0.5"]
    assert meta["params"]["n"] == 512
    assert "handler" not in meta["params"]


def test_solve_is_deterministic(tmp_path):
    argv = ["solve", "--s", "0.25", "--n", "64", "--out", str(tmp_path / "u.json")]
    assert main(argv) == 0
    first = [(tmp_path / name).read_bytes() for name in ("u.json", "u.report.json")]
    assert main(argv) == 0
    second = [(tmp_path / name).read_bytes() for name in ("u.json", "u.report.json")]
    assert first == second


def test_solve_rejects_bad_descriptor(tmp_path):
    code = main(["solve", "--s", "0.5", "--f", "spline:1", "--out", str(tmp_path / "u.json")])
    assert code == 2
    assert not (tmp_path / "u.json").exists()


def test_solve_rejects_misaligned_domain(tmp_path):
    argv = ["solve", "--s", "0.5", "--domain", "-1,0;0.3,1", "--n", "16",
            "--out", str(tmp_path / "u.json")]
    assert main(argv) == 1


# --- analyze ---


def test_analyze_writes_rates_profile_and_k(solution, tmp_path):
    rates = tmp_path / "rates.csv"
    k_out = tmp_path / "k.csv"
    argv = ["analyze", "--input", str(solution), "--sigma", "1.0,1.5", "--out", str(rates),
            "--k-out", str(k_out)]
    assert main(argv) == 0
    lines = rates.read_text().splitlines()
    assert lines[0] == "sigma_star,ci_low,ci_high,r2,sigma,verdict"
    assert len(lines) == 3
    assert [line.split(",")[4] for line in lines[1:]] == ["1.0", "1.5"]
    profile = (tmp_path / "rates.profile.csv").read_text().splitlines()
    assert profile[0] == "order,h,omega,restriction"
    assert len(profile) == 6
    assert len(k_out.read_text().splitlines()) == 162
    assert (tmp_path / "rates.csv.manifest.json").exists()


def test_analyze_fails_on_coarse_solution(tmp_path):
    coarse = tmp_path / "coarse.json"
    assert main(["solve", "--s", "0.5", "--n", "64", "--out", str(coarse)]) == 0
    assert main(["analyze", "--input", str(coarse), "--out", str(tmp_path / "r.csv")]) == 1


def test_analyze_rejects_bad_threads_env(solution, tmp_path, monkeypatch):
    monkeypatch.setenv("FRACLAP_THREADS", "many")
    assert main(["analyze", "--input", str(solution), "--out", str(tmp_path / "r.csv")]) == 2


# --- verify ---


def test_verify_prints_table(capsys, tmp_path):
    out = tmp_path / "verify.csv"
    assert main(["verify", "--suite", "bootstrap", "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "suite,case,value,tolerance,passed"
    assert len(lines) == 7
    assert all(line.endswith(",true") for line in lines[1:])
    assert out.read_text().splitlines() == lines
    assert (tmp_path / "verify.csv.manifest.json").exists()


def test_verify_accepts_threads_and_quiet(capsys):
    assert main(["verify", "--suite", "k-functional", "--threads", "2", "-q"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


def test_verbose_and_quiet_are_exclusive():
    assert main(["verify", "--suite", "bootstrap", "-v", "-q"]) == 2


def test_verify_several_suites(capsys):
    assert main(["verify", "--suite", "bootstrap,k-functional"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 9


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--suite", "holder"],
        ["verify", "--suite", "bootstrap", "--s", "a,b"],
    ],
)
def test_verify_usage_errors(argv):
    assert main(argv) == 2


@pytest.mark.slow
def test_verify_default_suites_pass(capsys):
    assert main(["verify", "--points", "3"]) == 0
    suites = {line.split(",")[0] for line in capsys.readouterr().out.splitlines()[1:]}
    assert suites == {"getoor", "cone-identity", "marchaud", "k-functional", "equivalence"}


# --- sweep ---


def test_sweep_from_config_file(tmp_path):
    config = tmp_path / "sweep.json"
    config.write_text(json.dumps({"s_grid": []}))
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", str(config), "--out", str(out)]) == 0
    assert out.read_text() == "s,sigma_star,ci_low,ci_high,r2,predicted,open_endpoint,R,error\n"
    meta = json.loads((tmp_path / "sweep.csv.manifest.json").read_text())
    assert meta["params"]["config"]["s_grid"] == []


def test_sweep_failed_rows_exit_one(tmp_path):
    out = tmp_path / "sweep.csv"
    argv = ["sweep", "--s", "0.5", "--n", "16", "--domain", "-1,0;0.3,1", "--out", str(out)]
    assert main(argv) == 1
    assert "not a node" in out.read_text()


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--out", "x.csv"],
        ["sweep", "--s", "0.99", "--out", "x.csv"],
        ["sweep", "--s", "0.5", "--n", "8", "--out", "x.csv"],
    ],
)
def test_sweep_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2
    assert not (tmp_path / "x.csv").exists()


def test_sweep_rejects_invalid_config(tmp_path):
    config = tmp_path / "sweep.json"
    config.write_text(json.dumps({"s_grid": [0.5], "mesh": 3}))
    assert main(["sweep", "--config", str(config), "--out", str(tmp_path / "s.csv")]) == 2


# --- usage ---


def test_no_command_prints_help(capsys):
    assert main([]) == 2
    assert "usage: fraclap" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    assert main(["solve", "--s", "0.5", "--out", "x.json", "--mesh", "3"]) == 2


def test_missing_required_flag():
    assert main(["solve", "--out", "x.json"]) == 2
