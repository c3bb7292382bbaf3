"""Последовательный адаптивный план по критериям IMSE и MMSE.

Этапы:
1. начальный план (ЛГК или IMSE-оптимальный при априорных θ, γ_C);
2. отклики симулятора и ММП-оценка ГП;
3. если MMSE ≤ цели, остановка;
4. жадное добавление stage_size точек пула, минимизирующих IMSE;
5. отклики в новых точках, переход к шагу 2.

IMSE и MMSE считаются по весовому набору точек (эмпирическая мера
равномерно распределённых точек области) в единицах отклика в квадрате.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.linalg import qr, solve_triangular

from core import datamodel
from core.errors import CodetuneError, DimensionError, DomainError, SimulatorError
from core.gp.fit import FittedGP, fit_matrices
from core.gp.likelihood import check_gls, cholesky_factor
from core.gp.predict import cross_correlation, msep_factor
from core.models import DesignMatrixSet, DesignSpec, FitOptions, KernelSpec, ModelKind, Scaling, VarianceRatios
from core.design.lhs import lhs
from core.optimizer import latin_hypercube

logger = logging.getLogger(__name__)

# Априорные параметры до первой оценки
PRIOR_THETA = 0.5
PRIOR_GAMMA_C = 0.001

N_WEIGHT_POINTS = 1000
N_POOL = 500

# Точки пула ближе этого (в нормированных координатах) к плану считаются совпадающими
POOL_TOL = 1e-9


@dataclass(frozen=True)
class PriorGP:
    """Гиперпараметры ГП без данных: для планирования до первой оценки."""

    kernel: KernelSpec
    ratios: VarianceRatios
    sigma2_raw: float
    scaling: Scaling
    jitter: float = datamodel.JITTER


def prior_gp(
    lower, upper, model: ModelKind = "model1", theta: float = PRIOR_THETA, gamma_C: float = PRIOR_GAMMA_C
) -> PriorGP:
    d = len(lower)
    n_theta = 1 if model == "model1" else d
    return PriorGP(
        kernel=KernelSpec(kind=model, theta=(theta,) * n_theta),
        ratios=VarianceRatios(gamma_C=gamma_C),
        sigma2_raw=1.0,
        scaling=Scaling.from_ranges(lower, upper),
    )


def design_mse(gp: FittedGP | PriorGP, design, points) -> np.ndarray:
    """MSEP в точках points для ГП с гиперпараметрами gp, обученного на плане design.

    Отклики не нужны: MSEP зависит только от входов. Пустой план даёт σ².
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    design = np.asarray(design, dtype=float).reshape(-1, points.shape[1])
    if design.shape[0] == 0:
        return np.full(points.shape[0], gp.sigma2_raw)
    Z = gp.scaling.inputs(design)
    Z0 = gp.scaling.inputs(points)
    V = datamodel.assemble_covariance(Z, None, gp.kernel, 1.0, gp.ratios, jitter=gp.jitter)
    L = cholesky_factor(V)
    Ft = solve_triangular(L, datamodel.regression_basis(Z), lower=True)
    _, G = qr(Ft, mode="economic")
    check_gls(G)
    r0 = cross_correlation(gp.kernel, Z0, Z, gp.jitter)
    return gp.sigma2_raw * msep_factor(L, Ft, G, r0, datamodel.regression_basis(Z0))


def imse(gp: FittedGP | PriorGP, candidate_design, weight_points) -> float:
    """Среднее MSEP по весовым точкам для плана candidate_design."""
    weight_points = np.atleast_2d(weight_points)
    if weight_points.shape[0] == 0:
        raise DomainError("Весовой набор точек пуст")
    return float(np.mean(design_mse(gp, candidate_design, weight_points)))


def mmse(gp: FittedGP | PriorGP, weight_points, design=None) -> float:
    """Максимум MSEP по весовым точкам.

    По умолчанию план — обучающие входы модели gp.
    """
    weight_points = np.atleast_2d(weight_points)
    if weight_points.shape[0] == 0:
        raise DomainError("Весовой набор точек пуст")
    if design is None:
        if not isinstance(gp, FittedGP):
            raise DomainError("Для априорной модели план нужно задать явно")
        design = gp.scaling.lower + gp.data.X * gp.scaling.width
    return float(np.max(design_mse(gp, design, weight_points)))


@dataclass(frozen=True)
class SequentialDesignState:
    """Состояние последовательного плана.

    Строки design сверх len(responses) ещё ждут отклика симулятора.
    stage_of_row — номер этапа (с 1), на котором строка добавлена.
    """

    design: np.ndarray
    responses: np.ndarray
    gp: FittedGP | PriorGP
    weight_points: np.ndarray
    target_mmse: float
    stage_of_row: tuple[int, ...]
    imse_history: tuple[float, ...] = field(default_factory=tuple)
    mmse_history: tuple[float, ...] = field(default_factory=tuple)

    @property
    def stages(self) -> int:
        return len(self.imse_history)

    @property
    def pending(self) -> np.ndarray:
        return self.design[self.responses.shape[0]:]

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "stage": np.arange(1, self.stages + 1),
                "n_points": [self.stage_of_row.count(s) for s in range(1, self.stages + 1)],
                "imse": self.imse_history,
                "mmse": self.mmse_history,
            }
        )


def weight_points(lower, upper, rng: np.random.Generator, k: int = N_WEIGHT_POINTS) -> np.ndarray:
    """K равномерно распределённых точек области."""
    return rng.uniform(np.asarray(lower, dtype=float), np.asarray(upper, dtype=float), size=(k, len(lower)))


def _greedy_pick(gp, design: np.ndarray, pool: np.ndarray, n_pick: int, weights: np.ndarray) -> np.ndarray:
    design = design.copy()
    available = np.ones(pool.shape[0], dtype=bool)
    for _ in range(n_pick):
        best_k, best_value = -1, math.inf
        for k in np.flatnonzero(available):
            try:
                value = imse(gp, np.vstack([design, pool[k]]), weights)
            except CodetuneError:
                continue
            if value < best_value:
                best_k, best_value = k, value
        if best_k < 0:
            raise DomainError("Ни одна точка пула не дала положительно определённой ковариации")
        design = np.vstack([design, pool[best_k]])
        available[best_k] = False
    return design


def augment_design(
    state: SequentialDesignState,
    n2: int,
    candidate_pool=None,
    rng: np.random.Generator | None = None,
) -> SequentialDesignState:
    """Жадно добавить n2 точек пула, каждая минимизирует IMSE при уже выбранных.

    Пул по умолчанию — N_POOL точек случайного ЛГК (нужен rng). Точки пула,
    совпадающие с точками плана, отбрасываются. К историям добавляются IMSE
    и MMSE нового плана при текущих гиперпараметрах.

    Raises:
        DomainError: В пуле меньше n2 точек.
    """
    if n2 == 0:
        return state
    if n2 < 0:
        raise DomainError(f"Число добавляемых точек должно быть ≥ 0, получено {n2}")
    scaling = state.gp.scaling
    if candidate_pool is None:
        if rng is None:
            raise DomainError("Для пула по умолчанию нужен генератор")
        candidate_pool = latin_hypercube(N_POOL, scaling.lower, scaling.upper, rng)
    pool = np.atleast_2d(np.asarray(candidate_pool, dtype=float))
    if pool.shape[1] != state.design.shape[1]:
        raise DimensionError(f"Пул размерности {pool.shape[1]}, план — {state.design.shape[1]}")
    Zp = scaling.inputs(pool)
    Zd = scaling.inputs(state.design)
    gaps = np.min(np.linalg.norm(Zp[:, None, :] - Zd[None, :, :], axis=2), axis=1)
    pool = pool[gaps > POOL_TOL]
    if pool.shape[0] < n2:
        raise DomainError(f"В пуле {pool.shape[0]} точек вне плана, нужно {n2}")

    design = _greedy_pick(state.gp, state.design, pool, n2, state.weight_points)
    stage = state.stages + 1
    value_imse = imse(state.gp, design, state.weight_points)
    value_mmse = mmse(state.gp, state.weight_points, design)
    logger.info("Этап %d: добавлено %d точек, IMSE=%.6g, MMSE=%.6g (прежние гиперпараметры)", stage, n2, value_imse, value_mmse)
    return replace(
        state,
        design=design,
        stage_of_row=state.stage_of_row + (stage,) * n2,
        imse_history=state.imse_history + (value_imse,),
        mmse_history=state.mmse_history + (value_mmse,),
    )


def initial_design(
    spec: DesignSpec,
    rng: np.random.Generator,
    optimal: bool = False,
    model: ModelKind = "model1",
    n_weight: int = N_WEIGHT_POINTS,
    pool_size: int = N_POOL,
) -> np.ndarray:
    """Начальный план: ЛГК по DesignSpec или IMSE-оптимальный при θ = 0.5, γ_C = 0.001.

    Оптимальный план начинается с maximin-ЛГК из 1 + d точек и дополняется
    жадным выбором из пула ЛГК.
    """
    if not optimal:
        return lhs(spec, rng)
    d = spec.dimension
    start = lhs(spec.model_copy(update={"n_points": min(spec.n_points, 1 + d), "scheme": "maximin"}), rng)
    if spec.n_points <= 1 + d:
        return start
    gp = prior_gp(spec.lower, spec.upper, model)
    weights = weight_points(spec.lower, spec.upper, rng, n_weight)
    pool = latin_hypercube(pool_size, spec.lower, spec.upper, rng)
    return _greedy_pick(gp, start, pool, spec.n_points - start.shape[0], weights)


def _collect(simulator: Callable[[np.ndarray], float], rows: np.ndarray, stage: int) -> np.ndarray:
    values = []
    for row in rows:
        try:
            value = float(simulator(row))
        except SimulatorError as exc:
            exc.stage = stage
            raise
        except Exception as exc:
            raise SimulatorError(f"Этап {stage}: симулятор завершился ошибкой в точке {row.tolist()}: {exc}", stage) from exc
        if not math.isfinite(value):
            raise SimulatorError(f"Этап {stage}: неконечный отклик {value} в точке {row.tolist()}", stage)
        values.append(value)
    return np.array(values)


def _fit(design: np.ndarray, responses: np.ndarray, spec: DesignSpec, model: ModelKind, opts, rng) -> FittedGP:
    scaling = Scaling.from_ranges(spec.lower, spec.upper, responses)
    Z = scaling.inputs(design)
    data = DesignMatrixSet(
        X=Z, F=datamodel.regression_basis(Z), y=scaling.response(responses), n_computer=design.shape[0]
    )
    return fit_matrices(data, model, opts, rng, scaling=scaling, source="computer")


def run_sequential(
    initial: DesignSpec,
    simulator: Callable[[np.ndarray], float],
    target_mmse: float = math.inf,
    stage_size: int = 5,
    max_stages: int = 5,
    model: ModelKind = "model1",
    rng: np.random.Generator | None = None,
    optimal_initial: bool = False,
    fit_opts: FitOptions | None = None,
    n_weight: int = N_WEIGHT_POINTS,
    pool_size: int = N_POOL,
) -> SequentialDesignState:
    """Последовательное построение плана до MMSE ≤ target_mmse или max_stages этапов.

    После каждой переоценки ГП последние значения историй пересчитываются
    при новых гиперпараметрах.

    Args:
        initial: Начальный план (число точек, диапазоны, схема ЛГК).
        simulator: Функция строка плана → отклик.
        target_mmse: Целевое MMSE; +∞ — один этап.
        stage_size: Точек на этапе дополнения.
        max_stages: Максимум этапов (включая начальный).
        model: Модель ГП.
        rng: Генератор.
        optimal_initial: IMSE-оптимальный начальный план вместо ЛГК.

    Raises:
        SimulatorError: Сбой симулятора; .stage — номер этапа.
    """
    if max_stages < 1 or stage_size < 0:
        raise DomainError(f"Нужно max_stages ≥ 1 и stage_size ≥ 0: {max_stages}, {stage_size}")
    if initial.n_points < initial.dimension + 2:
        raise DomainError(f"Начальный план: нужно не меньше d + 2 = {initial.dimension + 2} точек")
    rng = rng if rng is not None else np.random.default_rng()
    fit_opts = fit_opts or FitOptions()

    design = initial_design(initial, rng, optimal_initial, model, n_weight, pool_size)
    weights = weight_points(initial.lower, initial.upper, rng, n_weight)
    responses = _collect(simulator, design, 1)
    gp = _fit(design, responses, initial, model, fit_opts, rng)
    state = SequentialDesignState(
        design=design,
        responses=responses,
        gp=gp,
        weight_points=weights,
        target_mmse=target_mmse,
        stage_of_row=(1,) * design.shape[0],
        imse_history=(imse(gp, design, weights),),
        mmse_history=(mmse(gp, weights, design),),
    )
    logger.info("Этап 1: %d точек, IMSE=%.6g, MMSE=%.6g", design.shape[0], state.imse_history[-1], state.mmse_history[-1])

    while state.mmse_history[-1] > target_mmse and state.stages < max_stages and stage_size > 0:
        pool = latin_hypercube(pool_size, initial.lower, initial.upper, rng)
        state = augment_design(state, stage_size, pool, rng)
        stage = state.stages
        new = _collect(simulator, state.pending, stage)
        responses = np.concatenate([state.responses, new])
        gp = _fit(state.design, responses, initial, model, fit_opts, rng)
        state = replace(
            state,
            responses=responses,
            gp=gp,
            imse_history=state.imse_history[:-1] + (imse(gp, state.design, weights),),
            mmse_history=state.mmse_history[:-1] + (mmse(gp, weights, state.design),),
        )
        logger.info(
            "Этап %d: %d точек, IMSE=%.6g, MMSE=%.6g",
            stage, state.design.shape[0], state.imse_history[-1], state.mmse_history[-1],
        )
    return state
