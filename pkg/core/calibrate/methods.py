"""Одноэтапные методы калибровки: ANLS, SMLE и полный ММП."""

import logging
import math

import numpy as np
from scipy.linalg import solve_triangular

from core import datamodel
from core.calibrate.objective import minimize_rss, rss_p
from core.errors import CodetuneError, DomainError, FitError, OptimizationError
from core.gp.fit import FittedGP, build_fitted, fit_mle, hyper_bounds, unpack_hyper
from core.gp.kernels import correlation_matrix
from core.gp.likelihood import cholesky_factor, concentrated_neg2loglik
from core.models import (
    CalibrationDataset,
    CalibrationOptions,
    ModelKind,
    TraceEntry,
    TuningEstimate,
    VarianceRatios,
)
from core.optimizer import OptProblem, latin_hypercube, minimize, multistart_points, rng_stream

logger = logging.getLogger(__name__)

# Поток ГСЧ калибровки: общий для ANLS и шагов 1–2 Max-min
CALIBRATION_STREAM = 1

# Методы с поправкой ρ·Ŷ + δ
BIAS_METHODS = ("anls", "maxmin")


def calibration_rng(opts: CalibrationOptions) -> np.random.Generator:
    return rng_stream(opts.seed, CALIBRATION_STREAM)


def reject_bias(opts: CalibrationOptions, method: str) -> None:
    if opts.bias:
        raise DomainError(f"Метод {method}: поправка ρ, δ не поддерживается (есть у {', '.join(BIAS_METHODS)})")


def anls_stage(
    dataset: CalibrationDataset,
    model: ModelKind,
    opts: CalibrationOptions,
    rng: np.random.Generator,
) -> tuple[FittedGP, np.ndarray, float, tuple[float, float] | None]:
    """Шаги 1–2: ГП по данным кода и минимизация RSS_p с прогнозом C."""
    fit_c = fit_mle(dataset, model, "computer", opts=opts.fit, rng=rng, scaling=dataset.scaling())
    tau, value, bias = minimize_rss(fit_c, "C", dataset, opts, rng)
    return fit_c, tau, value, bias


def anls(
    dataset: CalibrationDataset,
    model: ModelKind = "model1",
    opts: CalibrationOptions | None = None,
    rng: np.random.Generator | None = None,
) -> TuningEstimate:
    """Приближённый нелинейный МНК: суррогат по данным кода считается истинной моделью."""
    opts = opts or CalibrationOptions()
    rng = rng if rng is not None else calibration_rng(opts)
    fit_c, tau, value, bias = anls_stage(dataset, model, opts, rng)
    logger.info("ANLS (%s): τ̂=%s, RSS_p=%.6g", model, np.round(tau, 4).tolist(), value)
    return TuningEstimate(
        tau_hat=tau,
        rss_p=value,
        method="anls",
        variant="C",
        fitted_gp=fit_c,
        trace=(TraceEntry(1, tuple(tau.tolist()), value, value),),
        bias=bias,
    )


# --- SMLE ---


def conditional_moments(fitted: FittedGP, X_E, gamma_E: float) -> tuple[np.ndarray, np.ndarray]:
    """Условные среднее и ковариация (в долях σ²) экспериментальных откликов при данных кода.

    μ_E|C = F_Eβ̂ + V_CEᵀV_CC⁻¹(y_C − F_Cβ̂), V_E|C = V_EE − V_CEᵀV_CC⁻¹V_CE.
    Величины в нормированных единицах модели fitted (оценённой по данным кода).
    """
    Z_E = fitted.scaling.inputs(np.atleast_2d(X_E))
    X_C = fitted.data.X
    R_CE = correlation_matrix(X_C, Z_E, fitted.kernel)
    ratios = VarianceRatios(gamma_C=fitted.ratios.gamma_C, gamma_E=gamma_E)
    V_EE = datamodel.assemble_covariance(Z_E, None, fitted.kernel, 1.0, ratios, n_computer=0, jitter=fitted.jitter)
    W = solve_triangular(fitted.factors.chol, R_CE, lower=True)
    mu = datamodel.regression_basis(Z_E) @ fitted.beta + R_CE.T @ fitted.factors.alpha
    return mu, V_EE - W.T @ W


def conditional_neg2loglik(fitted: FittedGP, X_E, y_E, gamma_E: float) -> float:
    """n_E·log σ̂²_E|C + log|V_E|C| с σ̂²_E|C, исключённой аналитически."""
    mu, V = conditional_moments(fitted, X_E, gamma_E)
    L = cholesky_factor(V)
    rho = solve_triangular(L, fitted.scaling.response(y_E) - mu, lower=True)
    n = rho.shape[0]
    sigma2 = float(rho @ rho) / n
    if not sigma2 > 0:
        raise FitError("σ̂²_E|C = 0: условное правдоподобие не определено")
    return n * math.log(sigma2) + 2.0 * float(np.sum(np.log(np.diag(L))))


def smle(
    dataset: CalibrationDataset,
    model: ModelKind = "model1",
    opts: CalibrationOptions | None = None,
    rng: np.random.Generator | None = None,
) -> TuningEstimate:
    """Раздельный ММП.

    Этап 1 — (θ, β, σ²) по данным кода; этап 2 — (τ, γ_E) по условному
    правдоподобию экспериментальных данных. RSS_p считается в τ̂ с прогнозом C.
    """
    opts = opts or CalibrationOptions()
    reject_bias(opts, "smle")
    rng = rng if rng is not None else calibration_rng(opts)
    exp = dataset.experimental
    q = dataset.q
    fit_c = fit_mle(dataset, model, "computer", opts=opts.fit, rng=rng, scaling=dataset.scaling())

    def objective(params: np.ndarray) -> float:
        X_E = datamodel.assemble_experimental_inputs(exp, params[:q], q)
        try:
            return conditional_neg2loglik(fit_c, X_E, exp.responses, math.exp(params[q]))
        except CodetuneError:
            return math.inf

    tau_lower, tau_upper = dataset.tau_bounds
    g_lower, g_upper = (math.log(b) for b in opts.fit.gamma_bounds)
    log_gamma0 = math.log(0.01)
    starts = [np.append(s, log_gamma0) for s in multistart_points(opts.n_tau_starts, tau_lower, tau_upper, rng)]
    problem = OptProblem(
        objective, np.append(tau_lower, g_lower), np.append(tau_upper, g_upper), starts
    )
    res = minimize(problem, opts.optimizer)
    tau = res.argmin[:q].copy()
    gamma_E = math.exp(res.argmin[q])
    value = rss_p(tau, fit_c, "C", exp)
    logger.info("SMLE (%s): τ̂=%s, γ_E=%.3g, RSS_p=%.6g", model, np.round(tau, 4).tolist(), gamma_E, value)
    return TuningEstimate(
        tau_hat=tau,
        rss_p=value,
        method="smle",
        variant="C",
        fitted_gp=fit_c,
        trace=(TraceEntry(1, tuple(tau.tolist()), value, value),),
        extras={"gamma_E": gamma_E, "neg2loglik_conditional": res.value},
    )


# --- Полный ММП ---


def full_mle(
    dataset: CalibrationDataset,
    model: ModelKind = "model1",
    opts: CalibrationOptions | None = None,
    rng: np.random.Generator | None = None,
) -> TuningEstimate:
    """Совместная минимизация −2·log L объединённых данных по (τ, θ, γ_E).

    RSS_p для сравнения считается в τ̂ по итоговой объединённой модели (прогноз B).
    """
    opts = opts or CalibrationOptions()
    reject_bias(opts, "full_mle")
    rng = rng if rng is not None else calibration_rng(opts)
    q = dataset.q
    scaling = dataset.scaling()
    n_theta = 1 if model == "model1" else q + dataset.p

    def objective(params: np.ndarray) -> float:
        kernel, ratios = unpack_hyper(params[q:], model, n_theta, True)
        try:
            data = datamodel.combined_matrices(dataset, params[:q], scaling)
            return concentrated_neg2loglik(kernel, ratios, data).neg2loglik
        except CodetuneError:
            return math.inf

    tau_lower, tau_upper = dataset.tau_bounds
    h_lower, h_upper = hyper_bounds(n_theta, True, opts.fit)
    box_lower = np.concatenate([tau_lower, [math.log(opts.fit.theta_start_box[0])] * n_theta, [math.log(opts.fit.gamma_start_box[0])]])
    box_upper = np.concatenate([tau_upper, [math.log(opts.fit.theta_start_box[1])] * n_theta, [math.log(opts.fit.gamma_start_box[1])]])
    first = np.concatenate([0.5 * (tau_lower + tau_upper), np.zeros(n_theta), [math.log(0.01)]])
    n_starts = max(opts.n_tau_starts, opts.fit.n_starts)
    starts = [first, *latin_hypercube(n_starts - 1, box_lower, box_upper, rng)] if n_starts > 1 else [first]
    problem = OptProblem(objective, np.concatenate([tau_lower, h_lower]), np.concatenate([tau_upper, h_upper]), starts)
    try:
        res = minimize(problem, opts.optimizer)
    except OptimizationError as exc:
        raise FitError("Полный ММП: ни один старт не дал положительно определённой V") from exc

    tau = res.argmin[:q].copy()
    kernel, ratios = unpack_hyper(res.argmin[q:], model, n_theta, True)
    fitted = build_fitted(
        datamodel.combined_matrices(dataset, tau, scaling), kernel, ratios, scaling, "combined", tau
    )
    value = rss_p(tau, fitted, "B", dataset.experimental)
    logger.info("Полный ММП (%s): τ̂=%s, γ_E=%.3g, RSS_p=%.6g", model, np.round(tau, 4).tolist(), ratios.gamma_E, value)
    return TuningEstimate(
        tau_hat=tau,
        rss_p=value,
        method="full_mle",
        variant="B",
        fitted_gp=fitted,
        trace=(TraceEntry(1, tuple(tau.tolist()), value, value),),
        extras={"gamma_E": ratios.gamma_E, "neg2loglik": res.value},
    )
