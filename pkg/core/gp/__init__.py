"""Гауссовский процесс: корреляции, правдоподобие, ММП-оценка и прогноз.

Использование:
    from core.gp import fit_mle, predict, predict_mse
"""

from .kernels import correlation_matrix, kernel_eval
from .likelihood import GLSFactors, concentrated_neg2loglik, gls_beta, gls_factors
from .fit import FittedGP, build_fitted, fit_matrices, fit_mle
from .predict import predict, predict_many, predict_mse, predict_mse_many

__all__ = [
    # Корреляции
    "kernel_eval",
    "correlation_matrix",
    # Правдоподобие и ОМНК
    "GLSFactors",
    "gls_beta",
    "gls_factors",
    "concentrated_neg2loglik",
    # Оценка
    "FittedGP",
    "build_fitted",
    "fit_matrices",
    "fit_mle",
    # Прогноз
    "predict",
    "predict_many",
    "predict_mse",
    "predict_mse_many",
]
