"""Сборка объединённых матриц плана и ковариации.

Строки данных кода всегда идут перед экспериментальными, поэтому индексы
блоков V_CC, V_CE, V_EE детерминированы.
"""

import numpy as np

from core.errors import DimensionError, DomainError
from core.gp.kernels import correlation_matrix
from core.models import CalibrationDataset, ComputerData, DesignMatrixSet, ExperimentalData, KernelSpec, Scaling, VarianceRatios

# Добавка к диагонали каждой собственной ковариационной матрицы (в долях σ²)
JITTER = 1e-10


def regression_basis(X: np.ndarray) -> np.ndarray:
    """Линейный базис: строки (1, z_1, …, z_d)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _check_tau(tau, q: int) -> np.ndarray:
    tau = np.asarray(tau, dtype=float).reshape(-1)
    if tau.shape[0] != q:
        raise DimensionError(f"Вектор τ: ожидается q={q} значений, получено {tau.shape[0]}")
    if not np.all(np.isfinite(tau)):
        raise DomainError(f"Вектор τ должен быть конечным: {tau}")
    return tau


def assemble_experimental_inputs(exp: ExperimentalData, tau, q: int) -> np.ndarray:
    """X_E(τ): строка i = (τ_1, …, τ_q, x_Ei); длина τ проверяется по q."""
    tau = _check_tau(tau, q)
    return np.hstack([np.tile(tau, (exp.n, 1)), exp.x_inputs])


def assemble_combined(
    comp: ComputerData,
    exp: ExperimentalData,
    tau,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Объединённые X_B, F_B, y_B (строки кода, затем эксперимента)."""
    if exp.p != comp.p:
        raise DimensionError(f"Число управляющих входов различается: код p={comp.p}, эксперимент p={exp.p}")
    if exp.n < comp.q + 1:
        raise DimensionError(f"Нужно n_E ≥ q + 1 = {comp.q + 1} экспериментальных точек, получено {exp.n}")
    tau = _check_tau(tau, comp.q)
    X_B = np.vstack([comp.inputs, assemble_experimental_inputs(exp, tau, comp.q)])
    y_B = np.concatenate([comp.responses, exp.responses])
    return X_B, regression_basis(X_B), y_B


def assemble_covariance(
    X_a: np.ndarray,
    X_b: np.ndarray | None,
    kernel: KernelSpec,
    sigma2: float,
    ratios: VarianceRatios,
    n_computer: int | None = None,
    jitter: float = JITTER,
) -> np.ndarray:
    """Ковариационная матрица σ²R.

    Если X_b не задана (или это та же матрица), строится собственная
    ковариация: к диагонали добавляются σ²γ_C для первых n_computer строк,
    σ²γ_E для остальных и σ²·jitter для всех.

    Args:
        X_a, X_b: Входы; X_b=None — собственная ковариация X_a.
        kernel: Корреляционная функция.
        sigma2: Дисперсия процесса σ² > 0.
        ratios: Отношения дисперсий γ_C, γ_E.
        n_computer: Число строк кода в X_a (по умолчанию — все).
        jitter: Численная добавка к диагонали в долях σ².
    """
    if not (np.isfinite(sigma2) and sigma2 > 0):
        raise DomainError(f"σ² должна быть положительной: {sigma2}")
    if X_b is not None and X_b is not X_a:
        return sigma2 * correlation_matrix(X_a, X_b, kernel)
    X_a = np.atleast_2d(np.asarray(X_a, dtype=float))

    n = X_a.shape[0]
    n_computer = n if n_computer is None else n_computer
    R = correlation_matrix(X_a, X_a, kernel)
    nugget = np.concatenate([np.full(n_computer, ratios.gamma_C), np.full(n - n_computer, ratios.gamma_E)])
    R[np.diag_indices_from(R)] += nugget + jitter
    return sigma2 * R


def computer_matrices(comp: ComputerData, scaling: Scaling) -> DesignMatrixSet:
    """Нормированные матрицы по данным кода."""
    X = scaling.inputs(comp.inputs)
    return DesignMatrixSet(X=X, F=regression_basis(X), y=scaling.response(comp.responses), n_computer=comp.n)


def combined_matrices(dataset: CalibrationDataset, tau, scaling: Scaling) -> DesignMatrixSet:
    """Нормированные объединённые матрицы при фиксированном τ."""
    X_B, _, y_B = assemble_combined(dataset.computer, dataset.experimental, tau)
    X = scaling.inputs(X_B)
    return DesignMatrixSet(X=X, F=regression_basis(X), y=scaling.response(y_B), n_computer=dataset.computer.n)
