"""Повторные калибровки на тестовых функциях и сводные метрики.

Повторение r функции fid использует данные из потока (base_seed, fid, r)
и генератор калибровки из потока (base_seed, fid, r, 1): все методы,
модели и предикторы одной строки получают одинаковые данные, и результат
не зависит от порядка и числа параллельных процессов.
"""

import hashlib
import logging
import multiprocessing
import time
from itertools import product
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from core.bench.functions import TEST_FUNCTIONS, generate_toy_data, get_test_function
from core.calculator import calibrate_dataset
from core.calibrate.methods import BIAS_METHODS
from core.calibrate.objective import relative_improvement
from core.errors import CodetuneError, DimensionError, DomainError
from core.models import DEFAULT_SEED, CalibrationDataset, CalibrationOptions, MaxMinConfig, Method, ModelKind
from core.optimizer import rng_stream

logger = logging.getLogger(__name__)

# Профиль останова Max-min для точных функций 1–5: без возмущения
EXACT_PROFILE = {"maxagain": 2, "fluctuation": False}


class BenchmarkMatrix(BaseModel):
    """Сетка запусков: функции × методы × модели × предикторы × поправка."""

    function_ids: list[int] = Field(default=[1], min_length=1)
    methods: list[Method] = Field(default=["anls", "smle", "maxmin"], min_length=1)
    models: list[ModelKind] = Field(default=["model1"], min_length=1)
    variants: list[Literal["B", "CgB"]] = Field(default=["B"], min_length=1, description="Предикторы шага 4 Max-min")
    bias: list[bool] = Field(default=[False], min_length=1)
    repetitions: int = Field(default=30, ge=1)
    base_seed: int = Field(default=DEFAULT_SEED, ge=0)
    n_computer: int | None = Field(default=None, ge=1)
    n_experimental: int | None = Field(default=None, ge=1)
    options: CalibrationOptions = Field(default_factory=CalibrationOptions)
    maxmin: MaxMinConfig | None = Field(default=None, description="Переопределение профиля останова Max-min")

    @field_validator("function_ids")
    @classmethod
    def check_ids(cls, value):
        unknown = [fid for fid in value if fid not in TEST_FUNCTIONS]
        if unknown:
            raise DomainError(f"Неизвестные тестовые функции {unknown}; доступны {sorted(TEST_FUNCTIONS)}")
        return value


class RunRecord(BaseModel):
    """Один запуск калибровки."""

    function_id: int
    repetition: int
    method: Method
    model: ModelKind
    variant: str
    bias: bool
    dataset_hash: str
    tau_hat: list[float] | None = None
    distance: float | None = None
    rss_p: float | None = None
    rho: float | None = None
    delta: float | None = None
    iterations: int | None = None
    stop_reason: str | None = None
    wall_time: float = 0.0
    error: str | None = None


class CellSummary(BaseModel):
    """Сводка по ячейке сетки."""

    function_id: int
    method: Method
    model: ModelKind
    variant: str
    bias: bool
    n_runs: int
    n_failed: int
    mean_distance: float | None = None
    sd_distance: float | None = None
    distance_of_means: float | None = None
    tau_mean: list[float] | None = None
    tau_sd: list[float] | None = None
    mse: float | None = None
    mean_rss_p: float | None = None
    relative_improvement: float | None = None


class BenchmarkReport(BaseModel):
    matrix: BenchmarkMatrix
    records: list[RunRecord]
    aggregates: list[CellSummary]

    def records_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.model_dump() for r in self.records])

    def aggregates_frame(self) -> pd.DataFrame:
        return pd.DataFrame([a.model_dump() for a in self.aggregates])


def distance(tau_hat, tau_star) -> float:
    """Евклидово расстояние ‖τ̂ − τ*‖."""
    tau_hat = np.asarray(tau_hat, dtype=float).reshape(-1)
    tau_star = np.asarray(tau_star, dtype=float).reshape(-1)
    if tau_hat.shape != tau_star.shape:
        raise DimensionError(f"Длины τ̂ и τ* различаются: {tau_hat.shape[0]} и {tau_star.shape[0]}")
    return float(np.linalg.norm(tau_hat - tau_star))


def dataset_hash(dataset: CalibrationDataset) -> str:
    """Отпечаток данных для проверки парности запусков."""
    digest = hashlib.sha256()
    for array in (
        dataset.computer.t_inputs,
        dataset.computer.x_inputs,
        dataset.computer.responses,
        dataset.experimental.x_inputs,
        dataset.experimental.responses,
    ):
        digest.update(np.ascontiguousarray(array, dtype=float).tobytes())
    return digest.hexdigest()[:16]


def maxmin_profile(fid: int, variant: str, override: MaxMinConfig | None = None) -> MaxMinConfig:
    """Настройки Max-min для функции: точный профиль для 1–5, по умолчанию для 6–7."""
    if override is not None:
        return override.model_copy(update={"variant": variant})
    if get_test_function(fid).exact:
        return MaxMinConfig(variant=variant, **EXACT_PROFILE)
    return MaxMinConfig(variant=variant)


def _tasks(matrix: BenchmarkMatrix) -> list[tuple]:
    """Задачи сетки; ячейки с поправкой ρ, δ для методов без неё пропускаются."""
    skipped = sorted({m for m in matrix.methods if m not in BIAS_METHODS}) if any(matrix.bias) else []
    if skipped:
        logger.warning("Поправка ρ, δ не поддерживается методами %s: ячейки с bias=True пропущены", skipped)
    tasks = []
    for fid, rep, model, bias, method in product(
        matrix.function_ids, range(matrix.repetitions), matrix.models, matrix.bias, matrix.methods
    ):
        if bias and method not in BIAS_METHODS:
            continue
        variants = matrix.variants if method == "maxmin" else ["-"]
        for variant in variants:
            tasks.append((matrix, fid, rep, method, model, variant, bias))
    return tasks


def _run_task(task: tuple) -> RunRecord:
    matrix, fid, rep, method, model, variant, bias = task
    tf = get_test_function(fid)
    dataset = generate_toy_data(
        fid, matrix.n_computer, matrix.n_experimental, rng=rng_stream(matrix.base_seed, (fid, rep))
    )
    record = RunRecord(
        function_id=fid,
        repetition=rep,
        method=method,
        model=model,
        variant=variant,
        bias=bias,
        dataset_hash=dataset_hash(dataset),
    )
    opts = matrix.options.model_copy(update={"bias": bias})
    cfg = maxmin_profile(fid, variant, matrix.maxmin) if method == "maxmin" else None
    started = time.perf_counter()
    try:
        est = calibrate_dataset(
            dataset, method, model, opts, cfg, rng=rng_stream(matrix.base_seed, (fid, rep, 1))
        )
    except (CodetuneError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        logger.warning("Функция %d, повторение %d, %s/%s: %s", fid, rep, method, model, exc)
        return record.model_copy(
            update={"error": f"{type(exc).__name__}: {exc}", "wall_time": time.perf_counter() - started}
        )

    return record.model_copy(
        update={
            "tau_hat": est.tau_hat.tolist(),
            "distance": distance(est.tau_hat, tf.tau_star),
            "rss_p": est.rss_p,
            "rho": None if est.bias is None else est.bias[0],
            "delta": None if est.bias is None else est.bias[1],
            "iterations": est.iterations,
            "stop_reason": est.extras.get("stop_reason"),
            "wall_time": time.perf_counter() - started,
        }
    )


def _sd(values: np.ndarray) -> float | None:
    return float(np.std(values, ddof=1)) if values.shape[0] >= 2 else None


def summarize(records: list[RunRecord], tau_star) -> CellSummary:
    """Сводка по записям одной ячейки.

    MSE = Dist² + Σ SD(τ̂_i)², где Dist — среднее расстояний по повторениям.
    """
    first = records[0]
    done = [r for r in records if r.error is None]
    summary = CellSummary(
        function_id=first.function_id,
        method=first.method,
        model=first.model,
        variant=first.variant,
        bias=first.bias,
        n_runs=len(records),
        n_failed=len(records) - len(done),
    )
    if not done:
        return summary
    distances = np.array([r.distance for r in done])
    taus = np.array([r.tau_hat for r in done])
    tau_sd = [float(np.std(taus[:, k], ddof=1)) for k in range(taus.shape[1])] if len(done) >= 2 else None
    mean_distance = float(np.mean(distances))
    return summary.model_copy(
        update={
            "mean_distance": mean_distance,
            "sd_distance": _sd(distances),
            "distance_of_means": distance(taus.mean(axis=0), tau_star),
            "tau_mean": taus.mean(axis=0).tolist(),
            "tau_sd": tau_sd,
            "mse": mean_distance**2 + (sum(s**2 for s in tau_sd) if tau_sd else 0.0),
            "mean_rss_p": float(np.mean([r.rss_p for r in done])),
        }
    )


def _with_relative_improvement(aggregates: list[CellSummary]) -> list[CellSummary]:
    anls_rss = {
        (a.function_id, a.model, a.bias): a.mean_rss_p
        for a in aggregates
        if a.method == "anls" and a.mean_rss_p is not None
    }
    result = []
    for a in aggregates:
        base = anls_rss.get((a.function_id, a.model, a.bias))
        if a.method == "maxmin" and a.mean_rss_p is not None and base is not None and base > 0:
            a = a.model_copy(update={"relative_improvement": relative_improvement(base, a.mean_rss_p)})
        result.append(a)
    return result


def run_benchmark(
    matrix: BenchmarkMatrix,
    repetitions: int | None = None,
    base_seed: int | None = None,
    jobs: int = 1,
) -> BenchmarkReport:
    """Все ячейки сетки по repetitions повторений; сбои записываются, а не прерывают расчёт.

    Args:
        matrix: Сетка запусков.
        repetitions, base_seed: Переопределение значений из matrix.
        jobs: Число процессов; 1 — в текущем процессе.
    """
    update = {}
    if repetitions is not None:
        update["repetitions"] = repetitions
    if base_seed is not None:
        update["base_seed"] = base_seed
    matrix = BenchmarkMatrix.model_validate({**matrix.model_dump(), **update}) if update else matrix

    tasks = _tasks(matrix)
    if not tasks:
        raise DomainError("Сетка не содержит ни одного запуска: поправка ρ, δ задана только для методов без неё")
    logger.info("Бенчмарк: %d запусков, процессов %d", len(tasks), jobs)
    if jobs > 1:
        with multiprocessing.Pool(min(jobs, len(tasks))) as pool:
            records = pool.map(_run_task, tasks)
    else:
        records = [_run_task(task) for task in tasks]

    cells: dict[tuple, list[RunRecord]] = {}
    for r in records:
        cells.setdefault((r.function_id, r.method, r.model, r.variant, r.bias), []).append(r)
    aggregates = [
        summarize(group, get_test_function(key[0]).tau_star) for key, group in cells.items()
    ]
    for a in aggregates:
        if a.n_failed:
            logger.warning(
                "Функция %d, %s/%s/%s: %d сбоев из %d", a.function_id, a.method, a.model, a.variant, a.n_failed, a.n_runs
            )
    return BenchmarkReport(matrix=matrix, records=records, aggregates=_with_relative_improvement(aggregates))


def comparison_table(report: BenchmarkReport) -> pd.DataFrame:
    """Таблица в форме «Average distance to the true value (SD)», MSE, средние τ̂_i (SD)."""
    rows = []
    for a in report.aggregates:
        row = {"function": a.function_id, "method": a.method, "model": a.model, "variant": a.variant, "bias": a.bias}
        if a.mean_distance is not None:
            sd = "-" if a.sd_distance is None else f"{a.sd_distance:.3f}"
            row["Average distance to the true value (SD)"] = f"{a.mean_distance:.3f} ({sd})"
            for k, mean in enumerate(a.tau_mean or []):
                sd_k = "-" if a.tau_sd is None else f"{a.tau_sd[k]:.3f}"
                row[f"tau_{k + 1} (SD)"] = f"{mean:.3f} ({sd_k})"
            row["MSE"] = a.mse
            row["mean RSS_p"] = a.mean_rss_p
        row["RI, %"] = a.relative_improvement
        row["failed"] = a.n_failed
        rows.append(row)
    return pd.DataFrame(rows)
