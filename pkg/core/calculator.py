"""Калибровка параметров кода: выбор метода."""

import numpy as np

from core import calibrate
from core.errors import DomainError
from core.models import CalibrationDataset, CalibrationOptions, MaxMinConfig, Method, ModelKind, TuningEstimate


def calibrate_dataset(
    dataset: CalibrationDataset,
    method: Method = "maxmin",
    model: ModelKind = "model1",
    opts: CalibrationOptions | None = None,
    maxmin_cfg: MaxMinConfig | None = None,
    rng: np.random.Generator | None = None,
) -> TuningEstimate:
    """Основной пайплайн калибровки.

    Args:
        dataset: Данные кода и эксперимента.
        method: "anls", "smle", "full_mle" или "maxmin".
        model: Модель ГП ("model1" — общий θ, "model2" — θ по координатам).
        opts: Настройки мультистартов, поправки ρ, δ и сид.
        maxmin_cfg: Настройки Max-min (для остальных методов не используются).
        rng: Генератор; по умолчанию поток калибровки от opts.seed.

    Returns:
        TuningEstimate с τ̂, RSS_p и трассой итераций.
    """
    opts = opts or CalibrationOptions()
    if method == "anls":
        return calibrate.anls(dataset, model, opts, rng)
    if method == "smle":
        return calibrate.smle(dataset, model, opts, rng)
    if method == "full_mle":
        return calibrate.full_mle(dataset, model, opts, rng)
    if method == "maxmin":
        return calibrate.maxmin(dataset, model, maxmin_cfg, opts, rng)
    raise DomainError(f"Неизвестный метод калибровки: {method!r}")
