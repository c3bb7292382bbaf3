"""Приближённая доверительная область для τ по порогу RSS_p.

{τ : RSS_p(τ) ≤ RSS_p(τ̂)·[1 + q/(n_E − q)·F_α(q, n_E − q)]}
"""

import logging
import math

import numpy as np
import pandas as pd

from core.calibrate.objective import rss_p
from core.errors import CodetuneError, DimensionError, DomainError
from core.models import CalibrationDataset, ConfidenceRegion, GridSpec, TuningEstimate
from core.optimizer import OptProblem, f_quantile, minimize

logger = logging.getLogger(__name__)


def region_threshold(rss_hat: float, q: int, n_E: int, alpha: float) -> tuple[float, float]:
    """Порог области и использованный квантиль F_α(q, n_E − q)."""
    if n_E <= q:
        raise DomainError(f"Нужно n_E > q: n_E={n_E}, q={q}")
    f_value = f_quantile(alpha, q, n_E - q)
    return rss_hat * (1.0 + q / (n_E - q) * f_value), f_value


def _axis(k: int, value: float, grid: GridSpec, lower: np.ndarray, upper: np.ndarray, slot: int) -> np.ndarray:
    lo = lower[k] if grid.lower is None else grid.lower[slot]
    hi = upper[k] if grid.upper is None else grid.upper[slot]
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise DomainError(f"Вырожденная решётка по τ_{k + 1}: [{lo}, {hi}]")
    # τ̂ входит в решётку узлом
    return np.union1d(np.linspace(lo, hi, grid.n_points), [value])


def confidence_region(
    est: TuningEstimate,
    dataset: CalibrationDataset,
    alpha: float = 0.05,
    pair: tuple[int, int] = (0, 1),
    grid: GridSpec | None = None,
) -> ConfidenceRegion:
    """RSS_p на решётке пары координат (τ_i, τ_j) и флаг попадания в область.

    Остальные координаты фиксируются в τ̂ (срез) или, при grid.profile,
    минимизируются в каждом узле (профиль). Используются модель ГП,
    предиктор и поправка ρ, δ из est.

    Args:
        est: Результат калибровки.
        dataset: Данные калибровки (эксперимент и границы τ).
        alpha: Уровень значимости, 0 < α < 1.
        pair: Номера координат τ, с нуля.
        grid: Решётка; границы по умолчанию — область поиска τ.
    """
    grid = grid or GridSpec()
    q = dataset.q
    exp = dataset.experimental
    i, j = pair
    if q < 2:
        raise DimensionError(f"Для области по паре координат нужно q ≥ 2, получено q={q}")
    if i == j or not (0 <= i < q and 0 <= j < q):
        raise DomainError(f"Недопустимая пара координат {pair} при q={q}")
    threshold, f_value = region_threshold(est.rss_p, q, exp.n, alpha)

    tau_hat = np.asarray(est.tau_hat, dtype=float)
    lower, upper = dataset.tau_bounds
    axis_i = _axis(i, tau_hat[i], grid, lower, upper, 0)
    axis_j = _axis(j, tau_hat[j], grid, lower, upper, 1)
    others = [k for k in range(q) if k not in (i, j)]

    def value_at(tau: np.ndarray) -> float:
        try:
            return rss_p(tau, est.fitted_gp, est.variant, exp, est.bias)
        except CodetuneError:
            return math.inf

    def profile_at(a: float, b: float) -> float:
        tau = tau_hat.copy()
        tau[i], tau[j] = a, b

        def objective(rest: np.ndarray) -> float:
            point = tau.copy()
            point[others] = rest
            return value_at(point)

        problem = OptProblem(objective, lower[others], upper[others], [tau_hat[others]])
        try:
            return minimize(problem).value
        except CodetuneError:
            return math.inf

    rows = []
    for a in axis_i:
        for b in axis_j:
            if grid.profile and others:
                value = profile_at(a, b)
            else:
                tau = tau_hat.copy()
                tau[i], tau[j] = a, b
                value = value_at(tau)
            rows.append((a, b, value))

    table = pd.DataFrame(rows, columns=[f"tau_{i + 1}", f"tau_{j + 1}", "rss_p"])
    n_bad = int((~np.isfinite(table["rss_p"])).sum())
    if n_bad:
        logger.warning("Доверительная область: RSS_p неконечна в %d узлах решётки", n_bad)
    table["inside"] = np.isfinite(table["rss_p"]) & (table["rss_p"] <= threshold)
    table["threshold"] = threshold
    logger.info(
        "Доверительная область %.0f%% по (τ_%d, τ_%d): порог %.6g, внутри %d из %d узлов",
        100 * (1 - alpha), i + 1, j + 1, threshold, int(table["inside"].sum()), len(table),
    )
    return ConfidenceRegion(
        alpha=alpha,
        threshold=threshold,
        f_value=f_value,
        pair=(i, j),
        profile=grid.profile,
        grid=table,
    )
