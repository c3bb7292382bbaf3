"""Наилучший линейный несмещённый прогноз (кригинг) и его MSEP.

Варианты прогноза:
- "C": модель по данным кода
- "B": модель по объединённым данным (строки обучения — при τ̂ шага 3)
- "CgB": (θ̂_B, β̂_B, σ̂²_B) объединённой модели и остатки только по данным кода
"""

import numpy as np
from scipy.linalg import solve_triangular

from core import datamodel
from core.errors import DimensionError, VariantError
from core.gp.fit import FittedGP
from core.gp.kernels import correlation_matrix
from core.gp.likelihood import GLSFactors
from core.models import KernelSpec, Variant


def _structures(fitted: FittedGP, variant: Variant) -> tuple[np.ndarray, GLSFactors]:
    if variant == "C":
        if fitted.source != "computer":
            raise VariantError("Прогноз C требует модели, оценённой по данным кода")
        return fitted.data.X, fitted.factors
    if variant in ("B", "CgB"):
        if fitted.source != "combined":
            raise VariantError(f"Прогноз {variant} требует модели, оценённой по объединённым данным")
        if variant == "B":
            return fitted.data.X, fitted.factors
        return fitted.data.X[: fitted.data.n_computer], fitted.computer_factors
    raise VariantError(f"Неизвестный вариант прогноза: {variant!r}")


def cross_correlation(kernel: KernelSpec, Z0: np.ndarray, X_train: np.ndarray, jitter: float) -> np.ndarray:
    """Корреляции точек прогноза с обучающими (нормированные входы)."""
    # jitter входит в корреляцию процесса: в совпадающей с обучающей точке
    # прогноз воспроизводит наблюдение без шума
    r0 = correlation_matrix(Z0, X_train, kernel)
    same = np.all(Z0[:, None, :] == X_train[None, :, :], axis=2)
    return r0 + jitter * same


def _cross_correlation(fitted: FittedGP, Z0: np.ndarray, X_train: np.ndarray) -> np.ndarray:
    return cross_correlation(fitted.kernel, Z0, X_train, fitted.jitter)


def _scaled_points(fitted: FittedGP, X0) -> np.ndarray:
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    if X0.shape[1] != fitted.dimension:
        raise DimensionError(f"Точка прогноза размерности {X0.shape[1]}, модель — {fitted.dimension}")
    return fitted.scaling.inputs(X0)


def predict_many(fitted: FittedGP, X0, variant: Variant) -> np.ndarray:
    """Ŷ(x0) = f0ᵀβ̂ + r0ᵀV⁻¹(y − Fβ̂) для строк X0 (исходные единицы)."""
    X_train, fac = _structures(fitted, variant)
    Z0 = _scaled_points(fitted, X0)
    r0 = _cross_correlation(fitted, Z0, X_train)
    y_scaled = datamodel.regression_basis(Z0) @ fac.beta + r0 @ fac.alpha
    return fitted.scaling.response_inverse(y_scaled)


def predict(fitted: FittedGP, x0, variant: Variant) -> float:
    """Прогноз в одной точке x0 = (τ, x)."""
    return float(predict_many(fitted, np.reshape(x0, (1, -1)), variant)[0])


def msep_factor(chol: np.ndarray, Ft: np.ndarray, G: np.ndarray, r0: np.ndarray, F0: np.ndarray) -> np.ndarray:
    """MSEP/σ² = 1 + uᵀ(FᵀV⁻¹F)⁻¹u − r0ᵀV⁻¹r0, u = f0 − FᵀV⁻¹r0; не меньше 0.

    Args:
        chol: Множитель Холецкого V.
        Ft: L⁻¹F.
        G: R-множитель QR-разложения L⁻¹F.
        r0: Корреляции точек прогноза с обучающими, m × n.
        F0: Базис в точках прогноза, m × k.
    """
    rt = solve_triangular(chol, r0.T, lower=True)
    u = Ft.T @ rt - F0.T
    v = solve_triangular(G.T, u, lower=True)
    return np.maximum(1.0 + np.sum(v**2, axis=0) - np.sum(rt**2, axis=0), 0.0)


def predict_mse_many(fitted: FittedGP, X0, variant: Variant) -> np.ndarray:
    """MSEP в строках X0 (в единицах отклика в квадрате)."""
    X_train, fac = _structures(fitted, variant)
    Z0 = _scaled_points(fitted, X0)
    r0 = _cross_correlation(fitted, Z0, X_train)
    factor = msep_factor(fac.chol, fac.Ft, fac.G, r0, datamodel.regression_basis(Z0))
    return fitted.scaling.variance_inverse(fac.sigma2 * factor)


def predict_mse(fitted: FittedGP, x0, variant: Variant) -> float:
    return float(predict_mse_many(fitted, np.reshape(x0, (1, -1)), variant)[0])
