"""Алгоритм Max-min: чередование ММП по объединённым данным и минимизации RSS_p.

Шаг 1 — ГП по данным кода; шаг 2 — τ̂ минимизацией RSS_p (прогноз C).
Далее до срабатывания правила останова:
- шаг 3: ММП по объединённым данным при фиксированном τ̂;
- шаг 4: минимизация RSS_p с прогнозом B или C|B, старт из прежнего τ̂.

Правила останова (i — номер итерации, шаг 2 считается первой):
1. i достигло max_iterations;
2. RSS_p(i+1) > RSS_p(i) − ftol maxagain итераций подряд;
3. (RSS_p(i+1) − RSS_p(i)) / RSS_p(i) > −ftol maxagain итераций подряд.
"""

import logging

import numpy as np

from core.calibrate.methods import anls_stage, calibration_rng
from core.calibrate.objective import minimize_rss
from core.errors import CalibrationError, CodetuneError
from core.gp.fit import fit_mle
from core.models import (
    CalibrationDataset,
    CalibrationOptions,
    MaxMinConfig,
    ModelKind,
    TraceEntry,
    TuningEstimate,
)

logger = logging.getLogger(__name__)

# Стандартное отклонение возмущения: max(FLUCTUATION_REL·|τ_j|, FLUCTUATION_MIN)
FLUCTUATION_REL = 0.1
FLUCTUATION_MIN = 0.3


def fluctuate(tau: np.ndarray, lower: np.ndarray, upper: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """τ + N(0, σ_τ²) покоординатно, σ_τ = max(0.1·|τ_j|, 0.3); результат прижат к границам."""
    scale = np.maximum(FLUCTUATION_REL * np.abs(tau), FLUCTUATION_MIN)
    return np.clip(tau + rng.normal(0.0, scale), lower, upper)


class _StopCounters:
    """Счётчики правил 2 и 3: число итераций подряд без достаточного улучшения."""

    def __init__(self, cfg: MaxMinConfig):
        self.cfg = cfg
        self.absolute = 0
        self.relative = 0

    def update(self, previous: float, current: float) -> None:
        ftol = self.cfg.ftol
        self.absolute = self.absolute + 1 if current > previous - ftol else 0
        if previous > 0:
            stalled = (current - previous) / previous > -ftol
        else:
            stalled = True
        self.relative = self.relative + 1 if stalled else 0

    def reason(self, iteration: int) -> str | None:
        cfg = self.cfg
        if iteration >= cfg.max_iterations:
            return "max_iter"
        if cfg.stop_rule in ("min_improvement", "all") and self.absolute >= cfg.maxagain:
            return "min_improvement"
        if cfg.stop_rule in ("min_rel_improvement", "all") and self.relative >= cfg.maxagain:
            return "min_rel_improvement"
        return None


def maxmin(
    dataset: CalibrationDataset,
    model: ModelKind = "model1",
    cfg: MaxMinConfig | None = None,
    opts: CalibrationOptions | None = None,
    rng: np.random.Generator | None = None,
) -> TuningEstimate:
    """Калибровка алгоритмом Max-min.

    Возвращается итерация с наименьшим RSS_p: её τ̂, ρ, δ и модель ГП.
    С max_iterations = 1 результат совпадает с anls() при том же генераторе.

    Args:
        dataset: Данные калибровки.
        model: "model1" или "model2".
        cfg: Правила останова, возмущение и предиктор шага 4.
        opts: Настройки мультистартов и поправки ρ, δ.
        rng: Генератор; по умолчанию поток калибровки от opts.seed.

    Raises:
        CalibrationError: Сбой любого шага; .trace содержит выполненные итерации.
    """
    cfg = cfg or MaxMinConfig()
    opts = opts or CalibrationOptions()
    rng = rng if rng is not None else calibration_rng(opts)
    trace: list[TraceEntry] = []

    try:
        fitted, tau, value, bias = anls_stage(dataset, model, opts, rng)
    except CodetuneError as exc:
        raise CalibrationError(f"Max-min, шаги 1–2: {exc}", trace) from exc
    variant = "C"
    running_min = value
    best = (tau, value, bias, fitted, variant)
    trace.append(TraceEntry(1, tuple(tau.tolist()), value, running_min))
    logger.info("Max-min (%s), итерация 1: τ̂=%s, RSS_p=%.6g", model, np.round(tau, 4).tolist(), value)

    lower, upper = dataset.tau_bounds
    counters = _StopCounters(cfg)
    stop_reason = counters.reason(1)
    tau_next = tau
    iteration = 1
    while stop_reason is None:
        iteration += 1
        try:
            fitted = fit_mle(dataset, model, "combined", tau=tau_next, opts=opts.fit, rng=rng, scaling=fitted.scaling)
            tau_new, value_new, bias = minimize_rss(
                fitted, cfg.variant, dataset, opts, rng, first=tau_next, first_bias=bias
            )
        except CodetuneError as exc:
            raise CalibrationError(f"Max-min, итерация {iteration}: {exc}", trace) from exc

        counters.update(value, value_new)
        previous_min = running_min
        running_min = min(running_min, value_new)
        tau, value, variant = tau_new, value_new, cfg.variant
        if value < best[1]:
            best = (tau, value, bias, fitted, variant)
        trace.append(TraceEntry(iteration, tuple(tau.tolist()), value, running_min))
        logger.info(
            "Max-min (%s), итерация %d: τ̂=%s, RSS_p=%.6g, счётчики %d/%d",
            model, iteration, np.round(tau, 4).tolist(), value, counters.absolute, counters.relative,
        )

        stop_reason = counters.reason(iteration)
        tau_next = tau
        if stop_reason is None and cfg.fluctuation and value > previous_min + cfg.ftol:
            tau_next = fluctuate(tau, lower, upper, rng)
            logger.debug("Возмущение τ̂: %s → %s", tau, tau_next)

    logger.info("Max-min (%s) остановлен по правилу %s на итерации %d", model, stop_reason, iteration)
    best_tau, best_value, best_bias, best_fitted, best_variant = best
    return TuningEstimate(
        tau_hat=best_tau,
        rss_p=best_value,
        method="maxmin",
        variant=best_variant,
        fitted_gp=best_fitted,
        trace=tuple(trace),
        bias=best_bias,
        extras={"stop_reason": stop_reason},
    )
