"""Планирование компьютерного эксперимента: ЛГК и последовательный IMSE/MMSE-план.

Использование:
    from core.design import lhs, run_sequential
"""

from .lhs import lhs, min_distance
from .sequential import (
    PriorGP,
    SequentialDesignState,
    augment_design,
    design_mse,
    imse,
    initial_design,
    mmse,
    prior_gp,
    run_sequential,
    weight_points,
)
from .simulator import SubprocessSimulator

__all__ = [
    # Латинские гиперкубы
    "lhs",
    "min_distance",
    # Критерии
    "PriorGP",
    "prior_gp",
    "design_mse",
    "imse",
    "mmse",
    "weight_points",
    # Последовательный план
    "SequentialDesignState",
    "initial_design",
    "augment_design",
    "run_sequential",
    # Симулятор
    "SubprocessSimulator",
]
