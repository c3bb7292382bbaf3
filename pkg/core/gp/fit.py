"""ММП-оценка гиперпараметров гауссовского процесса."""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np

from core import datamodel
from core.errors import CodetuneError, DomainError, FitError, OptimizationError
from core.gp.likelihood import GLSFactors, concentrated_neg2loglik, factors_with_beta, gls_factors
from core.models import (
    DEFAULT_SEED,
    CalibrationDataset,
    DesignMatrixSet,
    FitOptions,
    KernelSpec,
    ModelKind,
    Scaling,
    VarianceRatios,
)
from core.optimizer import OptProblem, latin_hypercube, minimize, rng_stream

logger = logging.getLogger(__name__)

# Поток ГСЧ для стартов мультистарта по умолчанию
FIT_STREAM = 101

# Первый старт: θ = 1, γ_E = 0.01
THETA_START = 1.0
GAMMA_START = 0.01


@dataclass(frozen=True)
class FittedGP:
    """Оценённый ГП.

    data и все оценки (β, σ²) — в нормированных единицах; scaling переводит
    входы и прогнозы в исходные. source показывает обучающую выборку:
    "computer" — только данные кода, "combined" — объединённые при τ = tau.
    """

    kernel: KernelSpec
    ratios: VarianceRatios
    data: DesignMatrixSet
    factors: GLSFactors
    scaling: Scaling
    source: Literal["computer", "combined"]
    jitter: float
    tau: np.ndarray | None = None
    neg2loglik: float = math.nan

    @property
    def beta(self) -> np.ndarray:
        return self.factors.beta

    @property
    def sigma2(self) -> float:
        return self.factors.sigma2

    @property
    def sigma2_raw(self) -> float:
        """σ² в единицах исходного отклика."""
        return float(self.scaling.variance_inverse(self.sigma2))

    @property
    def gamma_E(self) -> float:
        return self.ratios.gamma_E

    @property
    def dimension(self) -> int:
        return self.data.X.shape[1]

    def beta_raw(self) -> np.ndarray:
        """β в исходных единицах входов и отклика."""
        s = self.scaling
        slopes = s.y_std * self.beta[1:] / s.width
        intercept = s.y_mean + s.y_std * self.beta[0] - float(slopes @ s.lower)
        return np.concatenate([[intercept], slopes])

    @cached_property
    def computer_factors(self) -> GLSFactors:
        """Структуры по строкам кода с β̂ и σ̂² объединённой модели (прогноз C|B).

        Множитель Холецкого ведущего блока V_CC совпадает с ведущим блоком L.
        """
        n_c = self.data.n_computer
        return factors_with_beta(
            self.factors.chol[:n_c, :n_c], self.data.F[:n_c], self.data.y[:n_c], self.beta, self.sigma2
        )

    def summary(self) -> dict:
        """Оценки в исходных единицах для отчёта."""
        return {
            "model": self.kernel.kind,
            "source": self.source,
            "theta": list(self.kernel.theta),
            "beta": self.beta_raw().tolist(),
            "sigma2": self.sigma2_raw,
            "gamma_E": self.gamma_E,
            "neg2loglik": self.neg2loglik,
            "n_computer": self.data.n_computer,
            "n_experimental": self.data.n_experimental,
            "tau": None if self.tau is None else self.tau.tolist(),
        }


def build_fitted(
    data: DesignMatrixSet,
    kernel: KernelSpec,
    ratios: VarianceRatios,
    scaling: Scaling | None = None,
    source: Literal["computer", "combined"] = "computer",
    tau=None,
    jitter: float | None = None,
) -> FittedGP:
    """FittedGP при заданных гиперпараметрах; β̂ и σ̂² считаются по ОМНК."""
    jitter = datamodel.JITTER if jitter is None else jitter
    factors = gls_factors(data, kernel, ratios, jitter)
    value = math.nan
    if factors.sigma2 > 0:
        value = data.n * math.log(factors.sigma2) + factors.log_det
    return FittedGP(
        kernel=kernel,
        ratios=ratios,
        data=data,
        factors=factors,
        scaling=scaling or Scaling.identity(data.X.shape[1]),
        source=source,
        tau=None if tau is None else np.asarray(tau, dtype=float),
        jitter=jitter,
        neg2loglik=value,
    )


def _hyper_starts(n_theta: int, with_gamma: bool, opts: FitOptions, rng: np.random.Generator) -> list[np.ndarray]:
    first = [math.log(THETA_START)] * n_theta + ([math.log(GAMMA_START)] if with_gamma else [])
    lower = [math.log(opts.theta_start_box[0])] * n_theta
    upper = [math.log(opts.theta_start_box[1])] * n_theta
    if with_gamma:
        lower.append(math.log(opts.gamma_start_box[0]))
        upper.append(math.log(opts.gamma_start_box[1]))
    starts = [np.array(first)]
    if opts.n_starts > 1:
        starts.extend(latin_hypercube(opts.n_starts - 1, lower, upper, rng))
    return starts


def hyper_bounds(n_theta: int, with_gamma: bool, opts: FitOptions) -> tuple[np.ndarray, np.ndarray]:
    """Границы (log θ, log γ_E)."""
    lower = [math.log(opts.theta_bounds[0])] * n_theta
    upper = [math.log(opts.theta_bounds[1])] * n_theta
    if with_gamma:
        lower.append(math.log(opts.gamma_bounds[0]))
        upper.append(math.log(opts.gamma_bounds[1]))
    return np.array(lower), np.array(upper)


def unpack_hyper(
    params: np.ndarray, model: ModelKind, n_theta: int, with_gamma: bool, gamma_C: float = 0.0
) -> tuple[KernelSpec, VarianceRatios]:
    """(log θ, log γ_E) → KernelSpec, VarianceRatios."""
    kernel = KernelSpec(kind=model, theta=np.exp(params[:n_theta]))
    gamma_E = float(np.exp(params[n_theta])) if with_gamma else 0.0
    return kernel, VarianceRatios(gamma_C=gamma_C, gamma_E=gamma_E)


def fit_matrices(
    data: DesignMatrixSet,
    model: ModelKind,
    opts: FitOptions | None = None,
    rng: np.random.Generator | None = None,
    estimate_gamma_E: bool = False,
    gamma_C: float = 0.0,
    scaling: Scaling | None = None,
    source: Literal["computer", "combined"] = "computer",
    tau=None,
) -> FittedGP:
    """Минимизация концентрированного правдоподобия по log θ (и log γ_E).

    Raises:
        FitError: Ни в одном старте ковариация не разложилась.
    """
    opts = opts or FitOptions()
    rng = rng if rng is not None else rng_stream(DEFAULT_SEED, FIT_STREAM)
    n_theta = 1 if model == "model1" else data.X.shape[1]
    with_gamma = estimate_gamma_E and data.n_experimental > 0

    def objective(params: np.ndarray) -> float:
        kernel, ratios = unpack_hyper(params, model, n_theta, with_gamma, gamma_C)
        try:
            return concentrated_neg2loglik(kernel, ratios, data).neg2loglik
        except CodetuneError:
            return math.inf

    lower, upper = hyper_bounds(n_theta, with_gamma, opts)
    problem = OptProblem(objective, lower, upper, _hyper_starts(n_theta, with_gamma, opts, rng))
    try:
        res = minimize(problem, opts.optimizer)
    except OptimizationError as exc:
        raise FitError(f"ММП-оценка ({model}, {source}): ни один старт не дал положительно определённой V") from exc

    kernel, ratios = unpack_hyper(res.argmin, model, n_theta, with_gamma, gamma_C)
    fitted = build_fitted(data, kernel, ratios, scaling, source, tau)
    logger.info(
        "ГП %s (%s, n=%d): θ=%s, γ_E=%.3g, −2logL=%.6g",
        model, source, data.n, np.round(kernel.theta, 4).tolist(), ratios.gamma_E, fitted.neg2loglik,
    )
    return fitted


def fit_mle(
    dataset: CalibrationDataset,
    model: ModelKind,
    which: Literal["computer", "combined"] = "computer",
    tau=None,
    opts: FitOptions | None = None,
    rng: np.random.Generator | None = None,
    scaling: Scaling | None = None,
) -> FittedGP:
    """ММП-оценка по данным кода или по объединённым данным при фиксированном τ̂.

    Для данных кода γ_E = 0 точно; для объединённых γ_E оценивается.

    Args:
        dataset: Данные калибровки.
        model: "model1" (общий θ) или "model2" (θ по координатам).
        which: "computer" или "combined".
        tau: τ̂ для объединённой выборки.
        opts: Настройки мультистарта.
        rng: Генератор для стартов.
        scaling: Нормировка (по умолчанию — по данным).
    """
    scaling = scaling or dataset.scaling()
    if which == "computer":
        data = datamodel.computer_matrices(dataset.computer, scaling)
        return fit_matrices(data, model, opts, rng, scaling=scaling, source="computer")
    if which == "combined":
        if tau is None:
            raise DomainError("Для объединённой выборки нужно задать τ̂")
        data = datamodel.combined_matrices(dataset, tau, scaling)
        return fit_matrices(
            data, model, opts, rng, estimate_gamma_E=True, scaling=scaling, source="combined", tau=tau
        )
    raise DomainError(f"Неизвестная обучающая выборка: {which!r}")
