"""Модели данных для калибровки вычислительных кодов."""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from core.errors import DimensionError, DomainError

if TYPE_CHECKING:
    from core.gp.fit import FittedGP


ModelKind = Literal["model1", "model2"]
Variant = Literal["C", "B", "CgB"]
Method = Literal["anls", "smle", "full_mle", "maxmin"]
StopRule = Literal["max_iter", "min_improvement", "min_rel_improvement", "all"]

# Сид по умолчанию: любой запуск воспроизводим без явного --seed
DEFAULT_SEED = 20240517


def _as_matrix(value: Any, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name}: ожидается матрица, получено измерений {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: все элементы должны быть конечными")
    arr.flags.writeable = False
    return arr


def _as_tuple(value: Any) -> tuple[float, ...] | None:
    if value is None:
        return None
    return tuple(float(v) for v in np.atleast_1d(np.asarray(value, dtype=float)))


def _as_vector(value: Any, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: все элементы должны быть конечными")
    arr.flags.writeable = False
    return arr


# --- Данные ---


class ComputerData(BaseModel):
    """Данные вычислительного кода: входы (T, x) и детерминированные отклики y_C."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t_inputs: np.ndarray = Field(description="Настроечные входы T, матрица n_C × q")
    x_inputs: np.ndarray = Field(description="Управляющие входы x, матрица n_C × p")
    responses: np.ndarray = Field(description="Отклики y_C, вектор длины n_C")

    @model_validator(mode="before")
    @classmethod
    def allow_missing_tuning_columns(cls, data: Any) -> Any:
        """Без настроечных столбцов (q = 0) T — пустая матрица n_C × 0."""
        if isinstance(data, dict) and data.get("t_inputs") is None and "responses" in data:
            n = len(np.asarray(data["responses"]).reshape(-1))
            data = {**data, "t_inputs": np.empty((n, 0))}
        return data

    @field_validator("t_inputs", "x_inputs", mode="before")
    @classmethod
    def to_matrix(cls, value, info):
        return _as_matrix(value, info.field_name)

    @field_validator("responses", mode="before")
    @classmethod
    def to_vector(cls, value, info):
        return _as_vector(value, info.field_name)

    @model_validator(mode="after")
    def check_shapes(self):
        n = self.responses.shape[0]
        if n < 1:
            raise DimensionError("Данные кода: нужна хотя бы одна строка (n_C ≥ 1)")
        if self.t_inputs.shape[0] != n or self.x_inputs.shape[0] != n:
            raise DimensionError(
                f"Данные кода: число строк T ({self.t_inputs.shape[0]}), x ({self.x_inputs.shape[0]}) "
                f"и y ({n}) должно совпадать"
            )
        return self

    @property
    def n(self) -> int:
        return self.responses.shape[0]

    @property
    def q(self) -> int:
        return self.t_inputs.shape[1]

    @property
    def p(self) -> int:
        return self.x_inputs.shape[1]

    @property
    def inputs(self) -> np.ndarray:
        """Матрица X_C = [T, x]."""
        return np.hstack([self.t_inputs, self.x_inputs])


class ExperimentalData(BaseModel):
    """Экспериментальные данные: управляющие входы x и зашумлённые отклики y_E."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x_inputs: np.ndarray = Field(description="Управляющие входы x, матрица n_E × p")
    responses: np.ndarray = Field(description="Отклики y_E, вектор длины n_E")

    @field_validator("x_inputs", mode="before")
    @classmethod
    def to_matrix(cls, value, info):
        return _as_matrix(value, info.field_name)

    @field_validator("responses", mode="before")
    @classmethod
    def to_vector(cls, value, info):
        return _as_vector(value, info.field_name)

    @model_validator(mode="after")
    def check_shapes(self):
        n = self.responses.shape[0]
        if n < 1:
            raise DimensionError("Экспериментальные данные пусты (нужно n_E ≥ q + 1)")
        if self.x_inputs.shape[0] != n:
            raise DimensionError(
                f"Экспериментальные данные: строк x ({self.x_inputs.shape[0]}) ≠ длине y ({n})"
            )
        return self

    @property
    def n(self) -> int:
        return self.responses.shape[0]

    @property
    def p(self) -> int:
        return self.x_inputs.shape[1]


class CalibrationDataset(BaseModel):
    """Пара наборов данных (код + эксперимент) и область поиска τ.

    Если границы τ не заданы, берутся размахи столбцов T данных кода:
    суррогату доверяем только внутри его обучающей области.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    computer: ComputerData
    experimental: ExperimentalData
    tau_lower: tuple[float, ...] | None = Field(default=None, description="Нижние границы τ")
    tau_upper: tuple[float, ...] | None = Field(default=None, description="Верхние границы τ")

    @field_validator("tau_lower", "tau_upper", mode="before")
    @classmethod
    def to_tuple(cls, value):
        return _as_tuple(value)

    @model_validator(mode="after")
    def check_consistency(self):
        q = self.computer.q
        if self.experimental.p != self.computer.p:
            raise DimensionError(
                f"Число управляющих входов различается: код p={self.computer.p}, "
                f"эксперимент p={self.experimental.p}"
            )
        if self.experimental.n < q + 1:
            raise DimensionError(
                f"Нужно n_E ≥ q + 1 = {q + 1} экспериментальных точек, получено {self.experimental.n}"
            )
        for name, bound in (("tau_lower", self.tau_lower), ("tau_upper", self.tau_upper)):
            if bound is not None and len(bound) != q:
                raise DimensionError(f"{name}: ожидается q={q} значений, получено {len(bound)}")
        lower, upper = self.tau_bounds
        if np.any(upper <= lower):
            raise DomainError(f"Границы τ должны удовлетворять lower < upper: {lower} / {upper}")
        return self

    @property
    def q(self) -> int:
        return self.computer.q

    @property
    def p(self) -> int:
        return self.computer.p

    @property
    def tau_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        T = self.computer.t_inputs
        lower = np.asarray(self.tau_lower, dtype=float) if self.tau_lower is not None else T.min(axis=0)
        upper = np.asarray(self.tau_upper, dtype=float) if self.tau_upper is not None else T.max(axis=0)
        return lower, upper

    def scaling(self) -> "Scaling":
        """Нормировка входов в [0, 1] и откликов по среднему/СКО y_B."""
        lower_t, upper_t = self.tau_bounds
        x_all = np.vstack([self.computer.x_inputs, self.experimental.x_inputs])
        lower = np.concatenate([lower_t, x_all.min(axis=0)])
        upper = np.concatenate([upper_t, x_all.max(axis=0)])
        y_all = np.concatenate([self.computer.responses, self.experimental.responses])
        return Scaling.from_ranges(lower, upper, y_all)


# --- Параметры ГП ---


class KernelSpec(BaseModel):
    """Гауссовская корреляция exp(−Σ θ_i (t_i − u_i)²).

    model1 — общий θ для всех координат, model2 — свой θ_i для каждой.
    """

    model_config = ConfigDict(frozen=True)

    kind: ModelKind = "model1"
    theta: tuple[float, ...] = Field(default=(1.0,), description="Параметры корреляции θ ≥ 0")

    @field_validator("theta", mode="before")
    @classmethod
    def to_tuple(cls, value):
        return tuple(float(v) for v in np.atleast_1d(np.asarray(value, dtype=float)))

    @model_validator(mode="after")
    def check_theta(self):
        theta = np.asarray(self.theta)
        if not np.all(np.isfinite(theta)):
            raise DomainError(f"θ должны быть конечными: {self.theta}")
        if np.any(theta < 0):
            raise DomainError(f"θ не может быть отрицательным: {self.theta}")
        if self.kind == "model1" and len(self.theta) != 1:
            raise DimensionError(f"Model 1 использует один θ, получено {len(self.theta)}")
        return self

    def theta_vector(self, d: int) -> np.ndarray:
        """θ, развёрнутый до размерности входа d."""
        theta = np.asarray(self.theta, dtype=float)
        if self.kind == "model1":
            return np.full(d, theta[0])
        if theta.shape[0] != d:
            raise DimensionError(f"Model 2: ожидается {d} значений θ, получено {theta.shape[0]}")
        return theta


class VarianceRatios(BaseModel):
    """Отношения дисперсий шума к дисперсии процесса: γ_C = σ²_εC/σ², γ_E = σ²_εE/σ²."""

    model_config = ConfigDict(frozen=True)

    gamma_C: float = Field(default=0.0, ge=0, allow_inf_nan=False, description="γ_C; 0 для детерминированного кода")
    gamma_E: float = Field(default=0.0, ge=0, allow_inf_nan=False, description="γ_E")


# --- Настройки ---


class OptimizerOptions(BaseModel):
    """Критерии останова квазиньютоновского оптимизатора."""

    gtol: float = Field(default=1e-6, gt=0, description="Порог ∞-нормы проекции градиента")
    ftol: float = Field(default=1e-10, gt=0, description="Порог относительного убывания функции")
    max_iters: int = Field(default=500, ge=1, description="Максимум итераций на один старт")


class FitOptions(BaseModel):
    """Настройки ММП-оценки гиперпараметров."""

    n_starts: int = Field(default=8, ge=1, description="Число стартов мультистарта")
    theta_bounds: tuple[float, float] = Field(default=(1e-4, 1e4), description="Область поиска θ")
    gamma_bounds: tuple[float, float] = Field(default=(1e-8, 1e3), description="Область поиска γ_E")
    theta_start_box: tuple[float, float] = Field(default=(1e-2, 1e2), description="Область стартов θ")
    gamma_start_box: tuple[float, float] = Field(default=(1e-3, 1e1), description="Область стартов γ_E")
    optimizer: OptimizerOptions = Field(default_factory=OptimizerOptions)

    @model_validator(mode="after")
    def check_boxes(self):
        for name in ("theta_bounds", "gamma_bounds", "theta_start_box", "gamma_start_box"):
            lo, hi = getattr(self, name)
            if not 0 < lo < hi:
                raise DomainError(f"{name}: нужно 0 < lower < upper, получено ({lo}, {hi})")
        return self


class CalibrationOptions(BaseModel):
    """Общие настройки методов калибровки."""

    fit: FitOptions = Field(default_factory=FitOptions)
    optimizer: OptimizerOptions = Field(default_factory=OptimizerOptions)
    n_tau_starts: int = Field(default=8, ge=1, description="Число стартов при минимизации RSS_p")
    bias: bool = Field(default=False, description="Оценивать константы ρ, δ вместе с τ")
    seed: int = Field(default=DEFAULT_SEED, ge=0)


class MaxMinConfig(BaseModel):
    """Настройки алгоритма Max-min и его правил останова."""

    max_iterations: int = Field(default=20, ge=1, description="Правило 1: максимум итераций")
    ftol: float = Field(default=1e-4, gt=0, description="Порог улучшения RSS_p")
    maxagain: int = Field(default=7, ge=1, description="Допустимое число итераций подряд без улучшения")
    fluctuation: bool = Field(default=True, description="Случайное возмущение τ при росте RSS_p")
    variant: Literal["B", "CgB"] = Field(default="B", description="Предиктор на шаге 4")
    stop_rule: StopRule = Field(default="all")


class GridSpec(BaseModel):
    """Решётка для доверительной области по паре координат τ."""

    n_points: int = Field(default=21, ge=2, description="Узлов по каждой оси")
    profile: bool = Field(default=False, description="Минимизировать по остальным координатам в каждом узле")
    lower: tuple[float, float] | None = None
    upper: tuple[float, float] | None = None


class DesignSpec(BaseModel):
    """План эксперимента: число точек, диапазоны координат и схема ЛГК."""

    n_points: int = Field(ge=1, description="Число точек плана")
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    scheme: Literal["random", "maximin"] = "random"
    n_candidates: int = Field(default=100, ge=1, description="Кандидатов для maximin-ЛГК")

    @field_validator("lower", "upper", mode="before")
    @classmethod
    def to_tuple(cls, value):
        return _as_tuple(value)

    @model_validator(mode="after")
    def check_ranges(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise DimensionError("Диапазоны плана: lower и upper должны быть непустыми и одной длины")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise DomainError(f"Диапазоны плана: нужно lower < upper, получено {self.lower} / {self.upper}")
        return self

    @computed_field
    @property
    def dimension(self) -> int:
        return len(self.lower)


# --- Внутренние структуры ---


@dataclass(frozen=True)
class Scaling:
    """Аффинная нормировка: входы → [0, 1], отклик → (y − mean)/std."""

    lower: np.ndarray
    upper: np.ndarray
    y_mean: float = 0.0
    y_std: float = 1.0

    @classmethod
    def identity(cls, d: int) -> "Scaling":
        return cls(lower=np.zeros(d), upper=np.ones(d))

    @classmethod
    def from_ranges(cls, lower, upper, y=None) -> "Scaling":
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        # Постоянный столбец: ширина 1, чтобы не делить на ноль
        upper = np.where(upper > lower, upper, lower + 1.0)
        if y is None or len(y) == 0:
            return cls(lower=lower, upper=upper)
        y = np.asarray(y, dtype=float)
        std = float(np.std(y))
        return cls(lower=lower, upper=upper, y_mean=float(np.mean(y)), y_std=std if std > 0 else 1.0)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def inputs(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.lower) / self.width

    def response(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_std

    def response_inverse(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float) * self.y_std + self.y_mean

    def variance_inverse(self, v):
        return np.asarray(v, dtype=float) * self.y_std**2


@dataclass(frozen=True)
class DesignMatrixSet:
    """Матрицы X, F, y обучающей выборки; строки кода идут первыми.

    V — ковариационная матрица, если она уже собрана.
    """

    X: np.ndarray
    F: np.ndarray
    y: np.ndarray
    n_computer: int
    V: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def n_experimental(self) -> int:
        return self.n - self.n_computer


@dataclass(frozen=True)
class LikelihoodValue:
    """Значение n·log σ̂² + log|V| (константы отброшены)."""

    neg2loglik: float
    sigma2: float
    log_det: float

    def __float__(self) -> float:
        return self.neg2loglik


@dataclass(frozen=True)
class TraceEntry:
    """Одна итерация калибровки."""

    iteration: int
    tau: tuple[float, ...]
    rss_p: float
    running_min: float


@dataclass(frozen=True)
class TuningEstimate:
    """Результат калибровки.

    rss_p воспроизводится повторным вычислением RSS_p в tau_hat
    с сохранёнными fitted_gp, variant и bias.
    """

    tau_hat: np.ndarray
    rss_p: float
    method: Method
    variant: Variant
    fitted_gp: "FittedGP"
    trace: tuple[TraceEntry, ...]
    bias: tuple[float, float] | None = None
    extras: dict[str, float | str] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.trace)


@dataclass(frozen=True)
class ConfidenceRegion:
    """Приближённая доверительная область уровня 1 − α на решётке пары координат τ."""

    alpha: float
    threshold: float
    f_value: float
    pair: tuple[int, int]
    profile: bool
    grid: pd.DataFrame

    @property
    def inside(self) -> pd.DataFrame:
        return self.grid[self.grid["inside"]]
