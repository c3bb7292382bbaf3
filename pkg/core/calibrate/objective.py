"""Целевая функция RSS_p и её минимизация по τ (и константам ρ, δ)."""

import logging
import math

import numpy as np
import pandas as pd

from core.datamodel import assemble_experimental_inputs
from core.errors import CodetuneError, DomainError
from core.gp.fit import FittedGP
from core.gp.predict import predict_many
from core.models import CalibrationDataset, CalibrationOptions, ExperimentalData, TuningEstimate, Variant
from core.optimizer import OptProblem, minimize, multistart_points

logger = logging.getLogger(__name__)

# Область поиска мультипликативной поправки ρ
RHO_BOUNDS = (1e-3, 1e2)


def predictions(tau, fitted: FittedGP, variant: Variant, exp: ExperimentalData, bias=None) -> np.ndarray:
    """Ŷ(τ, x_Ei) для всех экспериментальных точек; с bias — ρŶ + δ."""
    q = fitted.dimension - exp.p
    pred = predict_many(fitted, assemble_experimental_inputs(exp, tau, q), variant)
    if bias is not None:
        rho, delta = bias
        pred = rho * pred + delta
    return pred


def rss_p(tau, fitted: FittedGP, variant: Variant, exp: ExperimentalData, bias=None) -> float:
    """RSS_p(τ) = Σ (y_Ei − Ŷ(τ, x_Ei))²."""
    residuals = exp.responses - predictions(tau, fitted, variant, exp, bias)
    return float(residuals @ residuals)


def bias_bounds(dataset: CalibrationDataset) -> tuple[np.ndarray, np.ndarray]:
    """Границы (ρ, δ): δ ограничена масштабом откликов."""
    span = 10.0 * (np.max(np.abs(dataset.experimental.responses)) + np.max(np.abs(dataset.computer.responses))) + 1.0
    return np.array([RHO_BOUNDS[0], -span]), np.array([RHO_BOUNDS[1], span])


def minimize_rss(
    fitted: FittedGP,
    variant: Variant,
    dataset: CalibrationDataset,
    opts: CalibrationOptions,
    rng: np.random.Generator,
    first=None,
    first_bias=None,
) -> tuple[np.ndarray, float, tuple[float, float] | None]:
    """Мультистарт-минимизация RSS_p по τ (при opts.bias — по (τ, ρ, δ)).

    Args:
        first: Первый старт по τ (по умолчанию центр области).
        first_bias: Стартовые (ρ, δ) для первого старта; по умолчанию (1, 0).

    Returns:
        (τ̂, RSS_p(τ̂), (ρ̂, δ̂) или None).
    """
    q = dataset.q
    lower, upper = dataset.tau_bounds
    starts = multistart_points(opts.n_tau_starts, lower, upper, rng, first)
    if opts.bias:
        b_lower, b_upper = bias_bounds(dataset)
        lower = np.concatenate([lower, b_lower])
        upper = np.concatenate([upper, b_upper])
        head = np.asarray(first_bias if first_bias is not None else (1.0, 0.0), dtype=float)
        starts = [np.concatenate([s, head if k == 0 else [1.0, 0.0]]) for k, s in enumerate(starts)]

    exp = dataset.experimental

    def objective(params: np.ndarray) -> float:
        bias = (params[q], params[q + 1]) if opts.bias else None
        try:
            return rss_p(params[:q], fitted, variant, exp, bias)
        except CodetuneError:
            return math.inf

    res = minimize(OptProblem(objective, lower, upper, starts), opts.optimizer)
    bias_hat = (float(res.argmin[q]), float(res.argmin[q + 1])) if opts.bias else None
    logger.debug("RSS_p(%s) = %.6g: τ̂=%s, ρ,δ=%s", variant, res.value, res.argmin[:q], bias_hat)
    return res.argmin[:q].copy(), res.value, bias_hat


def relative_improvement(rss_anls_mean: float, rss_maxmin_mean: float) -> float:
    """Относительное улучшение Max-min над ANLS, %: 100·(anls − maxmin)/anls."""
    if not rss_anls_mean > 0:
        raise DomainError(f"Среднее RSS_p ANLS должно быть положительным: {rss_anls_mean}")
    return 100.0 * (rss_anls_mean - rss_maxmin_mean) / rss_anls_mean


def residual_table(est: TuningEstimate, dataset: CalibrationDataset) -> pd.DataFrame:
    """Прогноз и остатки итогового предиктора по данным кода (C) и эксперимента (E).

    Строки кода прогнозируются в своих входах (T, x) без поправки ρ, δ,
    экспериментальные — в (τ̂, x) с поправкой, если она оценивалась.
    """
    fitted = est.fitted_gp
    comp = dataset.computer
    pred_c = predict_many(fitted, comp.inputs, est.variant)
    pred_e = predictions(est.tau_hat, fitted, est.variant, dataset.experimental, est.bias)
    return pd.DataFrame(
        {
            "source": ["C"] * comp.n + ["E"] * dataset.experimental.n,
            "observed": np.concatenate([comp.responses, dataset.experimental.responses]),
            "predicted": np.concatenate([pred_c, pred_e]),
        }
    ).assign(residual=lambda df: df["observed"] - df["predicted"])
