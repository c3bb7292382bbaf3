"""Методы калибровки параметров кода по экспериментальным данным.

Использование:
    from core.calibrate import anls, maxmin, confidence_region
"""

from .objective import predictions, relative_improvement, residual_table, rss_p
from .methods import anls, conditional_moments, conditional_neg2loglik, full_mle, smle
from .maxmin import maxmin
from .confidence import confidence_region, region_threshold

__all__ = [
    # Целевая функция
    "predictions",
    "rss_p",
    "relative_improvement",
    "residual_table",
    # Методы
    "anls",
    "smle",
    "full_mle",
    "maxmin",
    # SMLE: условное распределение эксперимента
    "conditional_moments",
    "conditional_neg2loglik",
    # Доверительная область
    "confidence_region",
    "region_threshold",
]
