"""Гауссовские корреляционные функции (Model 1 и Model 2)."""

import numpy as np
from scipy.spatial.distance import cdist

from core.errors import DimensionError
from core.models import KernelSpec


def kernel_eval(spec: KernelSpec, t, u) -> float:
    """R(t, u) = exp(−Σ θ_i (t_i − u_i)²) для двух точек."""
    t = np.asarray(t, dtype=float).reshape(1, -1)
    u = np.asarray(u, dtype=float).reshape(1, -1)
    if t.shape != u.shape:
        raise DimensionError(f"Размерности точек различаются: {t.shape[1]} и {u.shape[1]}")
    return float(correlation_matrix(t, u, spec)[0, 0])


def correlation_matrix(X_a: np.ndarray, X_b: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """Матрица корреляций R[i, j] = R(X_a[i], X_b[j])."""
    X_a = np.atleast_2d(np.asarray(X_a, dtype=float))
    X_b = np.atleast_2d(np.asarray(X_b, dtype=float))
    if X_a.shape[1] != X_b.shape[1]:
        raise DimensionError(f"Размерности входов различаются: {X_a.shape[1]} и {X_b.shape[1]}")
    if X_a.shape[0] == 0 or X_b.shape[0] == 0:
        return np.zeros((X_a.shape[0], X_b.shape[0]))
    sqrt_theta = np.sqrt(spec.theta_vector(X_a.shape[1]))
    return np.exp(-cdist(X_a * sqrt_theta, X_b * sqrt_theta, "sqeuclidean"))
