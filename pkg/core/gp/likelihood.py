"""Концентрированное правдоподобие и ОМНК-оценка β.

Все вычисления идут через разложение Холецкого V = L·Lᵀ и QR-разложение
L⁻¹F, явные обратные матрицы не строятся. V хранится в долях σ²
(корреляции плюс диагональ γ и jitter).
"""

from dataclasses import dataclass

import numpy as np
from numpy.linalg import LinAlgError
from scipy.linalg import cholesky, qr, solve_triangular

from core import datamodel
from core.errors import CovarianceNotPDError, FitError, SingularGLSError
from core.models import DesignMatrixSet, KernelSpec, LikelihoodValue, VarianceRatios

# Порог min|diag G| / max|diag G| для вырожденной системы ОМНК
GLS_RCOND = 1e-12


@dataclass(frozen=True)
class GLSFactors:
    """Разложения и оценки, нужные для прогноза и правдоподобия."""

    chol: np.ndarray
    Ft: np.ndarray
    G: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    sigma2: float
    log_det: float


def cholesky_factor(V: np.ndarray) -> np.ndarray:
    """Нижний множитель Холецкого; ошибка — covariance not PD."""
    try:
        return cholesky(V, lower=True)
    except LinAlgError as exc:
        raise CovarianceNotPDError(
            f"covariance not PD: разложение Холецкого {V.shape[0]}×{V.shape[0]} не удалось"
        ) from exc


def check_gls(G: np.ndarray) -> None:
    if G.shape[0] < G.shape[1]:
        raise SingularGLSError(
            f"singular GLS system: строк ({G.shape[0]}) меньше, чем коэффициентов ({G.shape[1]})"
        )
    diag = np.abs(np.diag(G))
    if not np.all(np.isfinite(diag)) or diag.min() <= GLS_RCOND * diag.max():
        raise SingularGLSError("singular GLS system: FᵀV⁻¹F вырождена")


def gls_beta(F: np.ndarray, V_chol: np.ndarray, y: np.ndarray) -> np.ndarray:
    """β̂ = (FᵀV⁻¹F)⁻¹FᵀV⁻¹y по множителю Холецкого V."""
    Ft = solve_triangular(V_chol, F, lower=True)
    yt = solve_triangular(V_chol, y, lower=True)
    Q, G = qr(Ft, mode="economic")
    check_gls(G)
    return solve_triangular(G, Q.T @ yt, lower=False)


def factors_with_beta(
    chol: np.ndarray, F: np.ndarray, y: np.ndarray, beta: np.ndarray, sigma2: float | None = None
) -> GLSFactors:
    """Разложения для заданного β (например, β̂_B при прогнозе по данным кода).

    sigma2 задаёт σ² готовой оценки; по умолчанию — средний квадрат остатков по y.
    """
    Ft = solve_triangular(chol, F, lower=True)
    _, G = qr(Ft, mode="economic")
    check_gls(G)
    rho = solve_triangular(chol, y - F @ beta, lower=True)
    alpha = solve_triangular(chol.T, rho, lower=False)
    return GLSFactors(
        chol=chol,
        Ft=Ft,
        G=G,
        beta=beta,
        alpha=alpha,
        sigma2=float(rho @ rho) / y.shape[0] if sigma2 is None else sigma2,
        log_det=2.0 * float(np.sum(np.log(np.diag(chol)))),
    )


def gls_factors(
    data: DesignMatrixSet,
    kernel: KernelSpec,
    ratios: VarianceRatios,
    jitter: float | None = None,
) -> GLSFactors:
    """Холецкий, β̂, σ̂² и V⁻¹(y − Fβ̂) при заданных (θ, γ)."""
    jitter = datamodel.JITTER if jitter is None else jitter
    V = datamodel.assemble_covariance(data.X, None, kernel, 1.0, ratios, data.n_computer, jitter)
    L = cholesky_factor(V)
    Ft = solve_triangular(L, data.F, lower=True)
    yt = solve_triangular(L, data.y, lower=True)
    Q, G = qr(Ft, mode="economic")
    check_gls(G)
    beta = solve_triangular(G, Q.T @ yt, lower=False)
    rho = yt - Ft @ beta
    return GLSFactors(
        chol=L,
        Ft=Ft,
        G=G,
        beta=beta,
        alpha=solve_triangular(L.T, rho, lower=False),
        sigma2=float(rho @ rho) / data.n,
        log_det=2.0 * float(np.sum(np.log(np.diag(L)))),
    )


def concentrated_neg2loglik(
    kernel: KernelSpec,
    ratios: VarianceRatios,
    data: DesignMatrixSet,
    jitter: float | None = None,
) -> LikelihoodValue:
    """n·log σ̂² + log|V| с β̂ и σ̂², исключёнными аналитически.

    Raises:
        CovarianceNotPDError: V не разлагается даже с jitter.
        SingularGLSError: FᵀV⁻¹F вырождена.
        FitError: σ̂² = 0 (остатки тождественно нулевые).
    """
    f = gls_factors(data, kernel, ratios, jitter)
    if not f.sigma2 > 0:
        raise FitError("σ̂² = 0: правдоподобие не определено")
    return LikelihoodValue(
        neg2loglik=data.n * float(np.log(f.sigma2)) + f.log_det,
        sigma2=f.sigma2,
        log_det=f.log_det,
    )
