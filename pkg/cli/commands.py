"""Команды CLI: fit, calibrate, benchmark, design, report.

Каждая команда получает проверенные настройки, пишет отчёт и возвращает
путь к нему и краткую сводку для печати.
"""

from pathlib import Path

import numpy as np

from cli.config import BenchmarkConfig, CalibrateConfig, DesignConfig, FitConfig, resolve_jobs
from cli.data_io import read_computer_csv, read_experimental_csv, write_design_csv
from cli.report import format_report, read_report, write_report
from core import datamodel
from core.bench import BenchmarkMatrix, comparison_table, get_test_function, run_benchmark, simulator_for
from core.calculator import calibrate_dataset
from core.calibrate import confidence_region, residual_table
from core.design import SubprocessSimulator, run_sequential
from core.errors import ConfigError
from core.gp import fit_matrices, fit_mle
from core.gp.fit import FIT_STREAM, FittedGP
from core.models import CalibrationDataset, CalibrationOptions, DesignSpec, GridSpec, Scaling, TuningEstimate
from core.optimizer import rng_stream


def coefficient_names(q: int, p: int) -> list[str]:
    """Подписи β: свободный член, затем t1..tq, x1..xp."""
    return ["1"] + [f"t{k}" for k in range(1, q + 1)] + [f"x{k}" for k in range(1, p + 1)]


def _gp_results(fitted: FittedGP, q: int, p: int) -> dict:
    summary = fitted.summary()
    summary["coefficients"] = dict(zip(coefficient_names(q, p), summary["beta"]))
    return summary


# --- fit ---


def cmd_fit(config: FitConfig) -> tuple[Path, str]:
    """ММП-оценка ГП: по данным кода или по объединённым данным при τ = tau."""
    computer = read_computer_csv(config.computer)
    rng = rng_stream(config.seed, FIT_STREAM)
    if config.experimental is None:
        inputs = computer.inputs
        scaling = Scaling.from_ranges(inputs.min(axis=0), inputs.max(axis=0), computer.responses)
        data = datamodel.computer_matrices(computer, scaling)
        fitted = fit_matrices(data, config.model, config.fit_options(), rng, scaling=scaling, source="computer")
    else:
        dataset = CalibrationDataset(computer=computer, experimental=read_experimental_csv(config.experimental))
        fitted = fit_mle(dataset, config.model, "combined", tau=config.tau, opts=config.fit_options(), rng=rng)

    results = _gp_results(fitted, computer.q, computer.p)
    path = write_report(config.output, "fit", config, results)
    lines = [
        f"ГП {config.model} ({fitted.source}): θ = {np.round(fitted.kernel.theta, 6).tolist()}",
        f"σ² = {fitted.sigma2_raw:.6g}, γ_E = {fitted.gamma_E:.6g}",
    ]
    lines += [f"  β[{name}] = {value:.6g}" for name, value in results["coefficients"].items()]
    lines.append(f"Отчёт: {path}")
    return path, "\n".join(lines)


# --- calibrate ---


def _calibration_results(est: TuningEstimate) -> dict:
    return {
        "method": est.method,
        "variant": est.variant,
        "tau_hat": est.tau_hat.tolist(),
        "rss_p": est.rss_p,
        "rho": None if est.bias is None else est.bias[0],
        "delta": None if est.bias is None else est.bias[1],
        "iterations": est.iterations,
        "extras": dict(est.extras),
        "trace": [
            {"iteration": e.iteration, "tau": list(e.tau), "rss_p": e.rss_p, "running_min": e.running_min}
            for e in est.trace
        ],
    }


def cmd_calibrate(config: CalibrateConfig) -> tuple[Path, str]:
    """Калибровка τ выбранным методом; при заданном alpha — доверительная область."""
    dataset = CalibrationDataset(
        computer=read_computer_csv(config.computer),
        experimental=read_experimental_csv(config.experimental),
        tau_lower=config.tau_lower,
        tau_upper=config.tau_upper,
    )
    est = calibrate_dataset(
        dataset, config.method, config.model, config.calibration_options(), config.maxmin_config()
    )
    results = _calibration_results(est)
    results["gp"] = _gp_results(est.fitted_gp, dataset.q, dataset.p)
    results["residuals"] = residual_table(est, dataset)

    tables = {}
    lines = [
        f"{config.method} ({config.model}): τ̂ = {np.round(est.tau_hat, 6).tolist()}",
        f"RSS_p = {est.rss_p:.6g}, итераций {est.iterations}",
    ]
    if est.bias is not None:
        lines.append(f"ρ = {est.bias[0]:.6g}, δ = {est.bias[1]:.6g}")
    if config.alpha is not None:
        pair = (config.pair[0] - 1, config.pair[1] - 1)
        region = confidence_region(
            est, dataset, config.alpha, pair, GridSpec(n_points=config.grid_points, profile=config.profile)
        )
        tables["confidence"] = region.grid
        results["confidence"] = {
            "alpha": region.alpha,
            "pair": list(config.pair),
            "profile": region.profile,
            "threshold": region.threshold,
            "f_value": region.f_value,
            "inside": int(region.grid["inside"].sum()),
            "nodes": len(region.grid),
        }
        lines.append(
            f"Область {100 * (1 - region.alpha):.0f}%: порог RSS_p {region.threshold:.6g}, "
            f"узлов внутри {results['confidence']['inside']} из {len(region.grid)}"
        )

    path = write_report(config.output, "calibrate", config, results, tables)
    lines.append(f"Отчёт: {path}")
    return path, "\n".join(lines)


# --- benchmark ---


def benchmark_matrix(config: BenchmarkConfig) -> BenchmarkMatrix:
    for fid in config.function_ids:
        get_test_function(fid)
    return BenchmarkMatrix(
        function_ids=config.function_ids,
        methods=config.methods,
        models=config.models,
        variants=config.variants,
        bias=config.bias,
        repetitions=config.repetitions,
        base_seed=config.seed,
        n_computer=config.n_computer,
        n_experimental=config.n_experimental,
        options=CalibrationOptions(fit=config.fit_options(), n_tau_starts=config.n_tau_starts, seed=config.seed),
        maxmin=config.maxmin_override(),
    )


def cmd_benchmark(config: BenchmarkConfig, jobs: int | None = None) -> tuple[Path, str]:
    """Повторные калибровки на тестовых функциях; сводная таблица в отчёте и на экране."""
    matrix = benchmark_matrix(config)
    report = run_benchmark(matrix, jobs=resolve_jobs(config, jobs))
    table = comparison_table(report)
    results = {
        "summary": table,
        "aggregates": [a.model_dump() for a in report.aggregates],
        "failed": sum(a.n_failed for a in report.aggregates),
    }
    tables = {"records": report.records_frame(), "aggregates": report.aggregates_frame()}
    path = write_report(config.output, "benchmark", config, results, tables)
    return path, f"{table.to_string(index=False)}\nОтчёт: {path}"


# --- design ---


def _design_source(config: DesignConfig):
    """Симулятор, диапазоны и имена столбцов плана.

    Для встроенной функции диапазоны по умолчанию — её области (T, x);
    lower/upper из настроек их заменяют.
    """
    if config.function_id is not None:
        tf = get_test_function(config.function_id)
        lower, upper = tf.input_ranges()
        columns = [f"t{k}" for k in range(1, tf.q + 1)] + [f"x{k}" for k in range(1, tf.p + 1)]
        simulator = simulator_for(config.function_id)
    else:
        columns = [f"z{k}" for k in range(1, len(config.lower) + 1)]
        simulator = SubprocessSimulator(config.simulator)
    lower = lower if config.lower is None else np.asarray(config.lower)
    upper = upper if config.upper is None else np.asarray(config.upper)
    if not len(lower) == len(upper) == len(columns):
        raise ConfigError(f"Диапазоны плана: ожидается {len(columns)} координат, получено {len(lower)} и {len(upper)}")
    return simulator, lower, upper, columns


def cmd_design(config: DesignConfig) -> tuple[Path, str]:
    """Последовательный IMSE/MMSE-план; план пишется в design_csv, истории — в отчёт."""
    simulator, lower, upper, columns = _design_source(config)
    spec = DesignSpec(n_points=config.n_initial, lower=lower, upper=upper, scheme=config.scheme)
    state = run_sequential(
        spec,
        simulator,
        target_mmse=config.target_mmse,
        stage_size=config.stage_size,
        max_stages=config.max_stages,
        model=config.model,
        rng=rng_stream(config.seed),
        optimal_initial=config.optimal_initial,
        fit_opts=config.fit_options(),
        n_weight=config.n_weight,
        pool_size=config.pool_size,
    )
    csv_path = write_design_csv(config.design_csv, state.design, columns, state.stage_of_row, state.responses)
    history = state.history_frame()
    results = {
        "n_points": int(state.design.shape[0]),
        "stages": state.stages,
        "design_csv": str(csv_path),
        "imse_history": list(state.imse_history),
        "mmse_history": list(state.mmse_history),
        "history": history,
        "gp": state.gp.summary(),
    }
    path = write_report(config.output, "design", config, results)
    return path, f"{history.to_string(index=False)}\nПлан: {csv_path}\nОтчёт: {path}"


# --- report ---


def cmd_report(path: str | Path) -> str:
    return format_report(read_report(path))
