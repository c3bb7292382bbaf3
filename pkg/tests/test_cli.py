import json

import numpy as np
import pandas as pd
import pytest

from cli.config import BenchmarkConfig, CalibrateConfig, JOBS_ENV, dump_config, load_config, resolve_jobs
from cli.data_io import read_computer_csv, read_experimental_csv
from cli.report import config_path, read_report, to_jsonable
from core.bench import generate_toy_data
from core.errors import ConfigError, DataFileError
from main import main


def _write_dataset(tmp_path, fid=6, seed=0, **sizes):
    dataset = generate_toy_data(fid, seed=seed, **sizes)
    comp, exp = dataset.computer, dataset.experimental
    computer = pd.DataFrame(comp.t_inputs, columns=[f"t{k + 1}" for k in range(comp.q)])
    for k in range(comp.p):
        computer[f"x{k + 1}"] = comp.x_inputs[:, k]
    computer["y"] = comp.responses
    experimental = pd.DataFrame(exp.x_inputs, columns=[f"x{k + 1}" for k in range(exp.p)])
    experimental["y"] = exp.responses
    computer_path, experimental_path = tmp_path / "computer.csv", tmp_path / "experimental.csv"
    computer.to_csv(computer_path, index=False)
    experimental.to_csv(experimental_path, index=False)
    return computer_path, experimental_path


# --- настройки ---


def test_config_precedence(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('computer = "c.csv"\nexperimental = "e.csv"\nmethod = "smle"\nseed = 5\n', encoding="utf-8")
    config = load_config("calibrate", str(path), {"seed": "9", "method": None})
    assert config.method == "smle"
    assert config.seed == 9
    assert config.maxagain == 7


def test_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('computer = "c.csv"\nexperimental = "e.csv"\nmaxagian = 3\n', encoding="utf-8")
    with pytest.raises(ConfigError, match="maxagian"):
        load_config("calibrate", str(path))


def test_config_list_override_from_strings():
    config = load_config("benchmark", None, {"function_ids": ["1", "6"], "fluctuation": "false"})
    assert config.function_ids == [1, 6]
    assert config.fluctuation is False
    assert config.maxmin_override().fluctuation is False


def test_design_config_needs_one_source():
    with pytest.raises(ConfigError):
        load_config("design", None, {})
    with pytest.raises(ConfigError):
        load_config("design", None, {"function_id": 6, "simulator": "./sim"})


def test_resolve_jobs_precedence(monkeypatch):
    config = BenchmarkConfig(jobs=3)
    monkeypatch.setenv(JOBS_ENV, "2")
    assert resolve_jobs(config, 5) == 5
    assert resolve_jobs(config) == 2
    monkeypatch.delenv(JOBS_ENV)
    assert resolve_jobs(config) == 3
    monkeypatch.setenv(JOBS_ENV, "many")
    with pytest.raises(ConfigError):
        resolve_jobs(config)


def test_dump_config_round_trip(tmp_path):
    config = CalibrateConfig(computer="c.csv", experimental="e.csv", tau_lower=[1.0, 1.0], tau_upper=[8.0, 8.0])
    path = tmp_path / "echo.toml"
    path.write_text(dump_config(config), encoding="utf-8")
    assert load_config("calibrate", str(path)) == config


# --- CSV ---


def test_read_csv_reports_row_and_column(tmp_path):
    path = tmp_path / "computer.csv"
    path.write_text("t1,x1,y\n1,2,3\n4,abc,6\n", encoding="utf-8")
    with pytest.raises(DataFileError) as info:
        read_computer_csv(path)
    assert info.value.row == 3
    assert info.value.column == "x1"


def test_read_csv_requires_y_column(tmp_path):
    path = tmp_path / "experimental.csv"
    path.write_text("x1,x2\n1,2\n", encoding="utf-8")
    with pytest.raises(DataFileError, match="'y'"):
        read_experimental_csv(path)


def test_read_csv_rejects_gap_in_numbering(tmp_path):
    path = tmp_path / "computer.csv"
    path.write_text("t1,t3,x1,y\n1,2,3,4\n", encoding="utf-8")
    with pytest.raises(DataFileError):
        read_computer_csv(path)


def test_read_csv_missing_file(tmp_path):
    with pytest.raises(DataFileError, match="не найден"):
        read_computer_csv(tmp_path / "absent.csv")


def test_read_computer_csv_shapes(tmp_path):
    computer_path, experimental_path = _write_dataset(tmp_path)
    comp = read_computer_csv(computer_path)
    exp = read_experimental_csv(experimental_path)
    assert (comp.n, comp.q, comp.p) == (20, 2, 2)
    assert (exp.n, exp.p) == (20, 2)


# --- отчёты ---


def test_to_jsonable_handles_numpy_and_nonfinite():
    value = to_jsonable({"a": np.array([1.0, np.inf]), "b": np.int64(3), "c": np.bool_(True)})
    assert value == {"a": [1.0, None], "b": 3, "c": True}
    json.dumps(value)


# --- команды ---


def test_main_fit_reports_all_coefficients(tmp_path, capsys):
    computer_path, _ = _write_dataset(tmp_path, n_C=12, n_E=5)
    output = tmp_path / "fit.json"
    code = main(["fit", "--computer", str(computer_path), "--n_starts", "2", "--output", str(output)])
    assert code == 0
    document = read_report(output)
    assert len(document["results"]["beta"]) == 2 + 2 + 1
    assert document["results"]["source"] == "computer"
    assert config_path(output).exists()


def test_main_fit_combined_lists_gamma(tmp_path):
    computer_path, experimental_path = _write_dataset(tmp_path, n_C=12, n_E=5)
    output = tmp_path / "fit.json"
    code = main([
        "fit", "--computer", str(computer_path), "--experimental", str(experimental_path),
        "--tau", "4", "4", "--n-starts", "2", "--output", str(output),
    ])
    assert code == 0
    results = read_report(output)["results"]
    assert results["source"] == "combined"
    assert results["gamma_E"] is not None
    assert list(results["coefficients"]) == ["1", "t1", "t2", "x1", "x2"]


def test_main_calibrate_and_rerun_from_echo(tmp_path, capsys):
    computer_path, experimental_path = _write_dataset(tmp_path)
    output = tmp_path / "anls.json"
    args = [
        "calibrate", "--computer", str(computer_path), "--experimental", str(experimental_path),
        "--method", "anls", "--n_starts", "2", "--n_tau_starts", "2", "--output", str(output),
        "--alpha", "0.05", "--grid_points", "4",
    ]
    assert main(args) == 0
    first = read_report(output)
    assert len(first["results"]["tau_hat"]) == 2
    assert len(first["results"]["trace"]) == 1
    assert set(first["results"]["residuals"]["source"]) == {"C", "E"}
    grid = pd.read_csv(tmp_path / "anls.confidence.csv")
    assert {"tau_1", "tau_2", "rss_p", "inside", "threshold"} <= set(grid.columns)

    rerun = tmp_path / "rerun.json"
    assert main(["calibrate", "--config", str(config_path(output)), "--output", str(rerun)]) == 0
    assert read_report(rerun)["results"]["tau_hat"] == first["results"]["tau_hat"]
    assert "τ̂" in capsys.readouterr().out


def test_main_calibrate_maxmin_single_iteration_matches_anls(tmp_path):
    computer_path, experimental_path = _write_dataset(tmp_path, seed=1)
    common = [
        "calibrate", "--computer", str(computer_path), "--experimental", str(experimental_path),
        "--n_starts", "2", "--n_tau_starts", "2",
    ]
    assert main(common + ["--method", "anls", "--output", str(tmp_path / "a.json")]) == 0
    assert main(common + ["--method", "maxmin", "--max_iterations", "1", "--output", str(tmp_path / "m.json")]) == 0
    anls_results = read_report(tmp_path / "a.json")["results"]
    maxmin_results = read_report(tmp_path / "m.json")["results"]
    assert maxmin_results["tau_hat"] == anls_results["tau_hat"]
    assert maxmin_results["rss_p"] == anls_results["rss_p"]


def test_main_benchmark_single_cell(tmp_path, capsys):
    output = tmp_path / "bench.json"
    code = main([
        "benchmark", "--function_ids", "6", "--methods", "anls", "--repetitions", "1",
        "--n_starts", "1", "--n_tau_starts", "2", "--output", str(output), "--jobs", "1",
    ])
    assert code == 0
    document = read_report(output)
    assert "Average distance to the true value (SD)" in document["results"]["summary"]
    assert (tmp_path / "bench.records.csv").exists()
    assert "Average distance" in capsys.readouterr().out


def test_main_benchmark_invalid_function_fails_fast(tmp_path, capsys):
    code = main(["benchmark", "--function_ids", "42", "--output", str(tmp_path / "b.json"), "--jobs", "1"])
    assert code == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("error: DomainError:")
    assert len(err.splitlines()) == 1
    assert not (tmp_path / "b.json").exists()


def test_main_design_builtin_function(tmp_path):
    design_csv = tmp_path / "design.csv"
    code = main([
        "design", "--function_id", "6", "--n_initial", "10", "--max_stages", "1",
        "--n_starts", "2", "--n_weight", "100", "--pool_size", "30",
        "--design_csv", str(design_csv), "--output", str(tmp_path / "design.json"),
    ])
    assert code == 0
    plan = pd.read_csv(design_csv)
    assert len(plan) == 10
    assert list(plan.columns) == ["t1", "t2", "x1", "x2", "stage", "y"]
    results = read_report(tmp_path / "design.json")["results"]
    assert results["stages"] == 1
    assert len(results["mmse_history"]) == 1


def test_main_reports_bad_csv_with_exit_code(tmp_path, capsys):
    bad = tmp_path / "computer.csv"
    bad.write_text("t1,x1,y\n1,2,oops\n", encoding="utf-8")
    code = main(["fit", "--computer", str(bad), "--output", str(tmp_path / "f.json")])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("error: DataFileError:")
    assert "строка 2" in err


def test_main_report_prints_document(tmp_path, capsys):
    computer_path, _ = _write_dataset(tmp_path, n_C=12, n_E=5)
    output = tmp_path / "fit.json"
    assert main(["fit", "--computer", str(computer_path), "--n_starts", "1", "--output", str(output)]) == 0
    capsys.readouterr()
    assert main(["report", str(output)]) == 0
    assert "Команда: fit" in capsys.readouterr().out
