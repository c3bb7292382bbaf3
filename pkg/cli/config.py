"""Настройки запуска команд CLI.

Файл настроек — плоский TOML (`key = value`, комментарии `#`). Каждое поле
можно задать и опцией `--key value`. Приоритет: командная строка > файл >
значение по умолчанию. Неизвестные ключи отклоняются.
"""

import math
import os
import tomllib
from pathlib import Path
from typing import Literal

import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from core.errors import ConfigError
from core.models import (
    DEFAULT_SEED,
    CalibrationOptions,
    FitOptions,
    MaxMinConfig,
    Method,
    ModelKind,
    StopRule,
)

JOBS_ENV = "CODETUNE_JOBS"


class RunConfig(BaseModel):
    """Общие поля всех команд."""

    model_config = ConfigDict(extra="forbid")

    model: ModelKind = Field(default="model1", description="model1 — общий θ, model2 — θ по координатам")
    seed: int = Field(default=DEFAULT_SEED, ge=0, description="Сид всех случайных потоков")
    n_starts: int = Field(default=8, ge=1, description="Стартов ММП-оценки ГП")
    output: str = Field(default="report.json", description="Путь JSON-отчёта")

    def fit_options(self) -> FitOptions:
        return FitOptions(n_starts=self.n_starts)


class FitConfig(RunConfig):
    """Команда fit: ММП-оценка ГП по данным кода или по объединённым данным."""

    computer: str = Field(description="CSV данных кода: t1..tq, x1..xp, y")
    experimental: str | None = Field(default=None, description="CSV эксперимента: x1..xp, y")
    tau: list[float] | None = Field(default=None, description="τ̂ для объединённой выборки")

    @model_validator(mode="after")
    def check_combined(self):
        if (self.tau is None) != (self.experimental is None):
            raise ValueError("Для объединённой выборки нужны и experimental, и tau")
        return self


class CalibrateConfig(RunConfig):
    """Команда calibrate."""

    computer: str
    experimental: str
    method: Method = "maxmin"
    variant: Literal["B", "CgB"] = Field(default="B", description="Предиктор шага 4 Max-min")
    bias: bool = Field(default=False, description="Оценивать ρ, δ")
    tau_lower: list[float] | None = None
    tau_upper: list[float] | None = None
    n_tau_starts: int = Field(default=8, ge=1)
    max_iterations: int = Field(default=20, ge=1)
    ftol: float = Field(default=1e-4, gt=0)
    maxagain: int = Field(default=7, ge=1)
    fluctuation: bool = True
    stop_rule: StopRule = "all"
    alpha: float | None = Field(default=None, gt=0, lt=1, description="Уровень доверительной области; пусто — не строить")
    pair: list[int] = Field(default=[1, 2], min_length=2, max_length=2, description="Пара координат τ, с единицы")
    grid_points: int = Field(default=21, ge=2)
    profile: bool = False

    def calibration_options(self) -> CalibrationOptions:
        return CalibrationOptions(
            fit=self.fit_options(), n_tau_starts=self.n_tau_starts, bias=self.bias, seed=self.seed
        )

    def maxmin_config(self) -> MaxMinConfig:
        return MaxMinConfig(
            max_iterations=self.max_iterations,
            ftol=self.ftol,
            maxagain=self.maxagain,
            fluctuation=self.fluctuation,
            variant=self.variant,
            stop_rule=self.stop_rule,
        )


class BenchmarkConfig(RunConfig):
    """Команда benchmark. Пустые поля Max-min — профиль по функции."""

    function_ids: list[int] = Field(default=[1], min_length=1)
    methods: list[Method] = Field(default=["anls", "smle", "maxmin"], min_length=1)
    models: list[ModelKind] = Field(default=["model1"], min_length=1)
    variants: list[Literal["B", "CgB"]] = Field(default=["B"], min_length=1)
    bias: list[bool] = Field(default=[False], min_length=1)
    repetitions: int = Field(default=30, ge=1)
    n_computer: int | None = Field(default=None, ge=1)
    n_experimental: int | None = Field(default=None, ge=1)
    n_tau_starts: int = Field(default=8, ge=1)
    max_iterations: int | None = Field(default=None, ge=1)
    ftol: float | None = Field(default=None, gt=0)
    maxagain: int | None = Field(default=None, ge=1)
    fluctuation: bool | None = None
    jobs: int | None = Field(default=None, ge=1, description="Процессов; по умолчанию CODETUNE_JOBS или число ядер")

    def maxmin_override(self) -> MaxMinConfig | None:
        fields = {
            k: v
            for k, v in (
                ("max_iterations", self.max_iterations),
                ("ftol", self.ftol),
                ("maxagain", self.maxagain),
                ("fluctuation", self.fluctuation),
            )
            if v is not None
        }
        return MaxMinConfig(**fields) if fields else None


class DesignConfig(RunConfig):
    """Команда design: последовательный план для тестовой функции или внешнего симулятора."""

    function_id: int | None = Field(default=None, description="Встроенная тестовая функция")
    simulator: str | None = Field(default=None, description="Команда внешнего симулятора")
    lower: list[float] | None = None
    upper: list[float] | None = None
    n_initial: int = Field(default=10, ge=1)
    scheme: Literal["random", "maximin"] = "maximin"
    optimal_initial: bool = False
    stage_size: int = Field(default=5, ge=0)
    max_stages: int = Field(default=3, ge=1)
    target_mmse: float = Field(default=math.inf, gt=0)
    n_weight: int = Field(default=1000, ge=1)
    pool_size: int = Field(default=500, ge=1)
    design_csv: str = Field(default="design.csv")

    @model_validator(mode="after")
    def check_source(self):
        if (self.function_id is None) == (self.simulator is None):
            raise ValueError("Нужно задать ровно одно: function_id или simulator")
        if self.simulator is not None and (self.lower is None or self.upper is None):
            raise ValueError("Для внешнего симулятора нужны lower и upper")
        return self


COMMAND_CONFIGS: dict[str, type[RunConfig]] = {
    "fit": FitConfig,
    "calibrate": CalibrateConfig,
    "benchmark": BenchmarkConfig,
    "design": DesignConfig,
}


def read_toml(path: str | Path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except OSError as exc:
        raise ConfigError(f"{path}: не удалось прочитать файл настроек: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_config(command: str, path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Собрать настройки команды: значения по умолчанию, затем файл, затем overrides."""
    try:
        model = COMMAND_CONFIGS[command]
    except KeyError:
        raise ConfigError(f"Неизвестная команда {command!r}") from None
    values = read_toml(path) if path else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return model.model_validate(values)
    except ValidationError as exc:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '-'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(f"Некорректные настройки {command}: {details}") from exc


def resolve_jobs(config: BenchmarkConfig, cli_jobs: int | None = None) -> int:
    """--jobs, затем CODETUNE_JOBS, затем файл настроек, затем число ядер."""
    if cli_jobs is not None:
        return cli_jobs
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            jobs = int(env)
        except ValueError:
            raise ConfigError(f"{JOBS_ENV}={env!r}: ожидается целое число") from None
        if jobs < 1:
            raise ConfigError(f"{JOBS_ENV}={jobs}: нужно ≥ 1")
        return jobs
    if config.jobs is not None:
        return config.jobs
    return max(1, os.cpu_count() or 1)


def dump_config(config: RunConfig) -> str:
    """Действующие настройки в TOML; пустые поля опускаются."""
    return tomli_w.dumps(config.model_dump(exclude_none=True))
