"""Оптимизатор и статистические утилиты.

Модуль общий для ГП, методов калибровки и планирования:
- minimize: L-BFGS-B с центральными конечными разностями и мультистартом
- f_quantile: верхний α-квантиль F-распределения
- rng_stream: воспроизводимые независимые потоки случайных чисел
- latin_hypercube: случайный латинский гиперкуб для стартов и выборок
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as scipy_minimize
from scipy.special import betaincinv
from scipy.stats import qmc

from core.errors import DimensionError, DomainError, OptimizationError
from core.models import OptimizerOptions

logger = logging.getLogger(__name__)

# Подставляется вместо неконечного значения внутри итераций
PENALTY = 1e10

# Относительный шаг конечной разности: h = REL_STEP·(1 + |x_i|)
REL_STEP = 1e-6


@dataclass(frozen=True)
class OptProblem:
    """Задача минимизации на прямоугольнике."""

    objective: Callable[[np.ndarray], float]
    lower: np.ndarray
    upper: np.ndarray
    starts: Sequence[np.ndarray]

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise DimensionError("Границы задачи разной длины")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise DomainError("Границы задачи должны быть конечными")
        if np.any(lower > upper):
            raise DomainError(f"Нижняя граница больше верхней: {lower} / {upper}")
        starts = [np.asarray(s, dtype=float).reshape(-1) for s in self.starts]
        if not starts:
            raise DomainError("Нужен хотя бы один стартовый вектор")
        for s in starts:
            if s.shape != lower.shape:
                raise DimensionError(f"Старт размерности {s.shape[0]}, задача — {lower.shape[0]}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "starts", tuple(np.clip(s, lower, upper) for s in starts))

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class OptResult:
    """Лучший результат мультистарта; value пересчитано в argmin."""

    argmin: np.ndarray
    value: float
    iterations: int
    converged: bool
    start_index: int
    n_evaluations: int
    trace: tuple[float, ...] = field(default_factory=tuple)


def central_difference(
    fun: Callable[[np.ndarray], float],
    x: np.ndarray,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
    abs_step: float | None = None,
) -> np.ndarray:
    """Градиент центральными разностями.

    У границы точка разности прижимается к ней, и разность становится
    односторонней.

    Args:
        fun: Скалярная функция.
        x: Точка.
        lower, upper: Границы (None — без ограничений).
        abs_step: Абсолютный шаг; по умолчанию REL_STEP·(1 + |x_i|).
    """
    x = np.asarray(x, dtype=float)
    lower = np.full_like(x, -np.inf) if lower is None else lower
    upper = np.full_like(x, np.inf) if upper is None else upper
    steps = REL_STEP * (1.0 + np.abs(x)) if abs_step is None else np.full_like(x, abs_step)
    grad = np.zeros_like(x)
    for i in range(x.shape[0]):
        hi = min(x[i] + steps[i], upper[i])
        lo = max(x[i] - steps[i], lower[i])
        if hi <= lo:
            continue
        x_hi = x.copy()
        x_lo = x.copy()
        x_hi[i] = hi
        x_lo[i] = lo
        grad[i] = (fun(x_hi) - fun(x_lo)) / (hi - lo)
    return grad


def minimize(problem: OptProblem, opts: OptimizerOptions | None = None) -> OptResult:
    """Мультистарт L-BFGS-B с численным градиентом.

    Старты с неконечным значением пропускаются. Результат старта, оказавшийся
    хуже самой стартовой точки, заменяется ею. Среди стартов выбирается
    наименьшее значение, при равенстве — меньший номер старта.

    Raises:
        OptimizationError: Все старты пропущены.
    """
    opts = opts or OptimizerOptions()
    lower, upper = problem.lower, problem.upper
    n_calls = 0

    def value(x: np.ndarray) -> float:
        nonlocal n_calls
        n_calls += 1
        fx = float(problem.objective(x))
        return fx if np.isfinite(fx) else PENALTY

    def gradient(x: np.ndarray) -> np.ndarray:
        return central_difference(value, x, lower, upper)

    if problem.dimension == 0:
        x0 = problem.starts[0]
        f0 = float(problem.objective(x0))
        if not np.isfinite(f0):
            raise OptimizationError("Целевая функция неконечна")
        return OptResult(argmin=x0, value=f0, iterations=0, converged=True, start_index=0, n_evaluations=1, trace=(f0,))

    best: OptResult | None = None
    trace: list[float] = []
    for k, x0 in enumerate(problem.starts):
        f0 = float(problem.objective(x0))
        n_calls += 1
        if not np.isfinite(f0):
            logger.debug("Старт %d пропущен: значение %s", k, f0)
            trace.append(float("nan"))
            continue

        res = scipy_minimize(
            value,
            x0,
            jac=gradient,
            method="L-BFGS-B",
            bounds=list(zip(lower, upper)),
            options={"maxiter": opts.max_iters, "ftol": opts.ftol, "gtol": opts.gtol},
        )
        x = np.clip(res.x, lower, upper)
        fx = float(problem.objective(x))
        n_calls += 1
        if not np.isfinite(fx) or fx > f0:
            x, fx = x0.copy(), f0
        trace.append(fx)
        logger.debug("Старт %d: f=%.6g, итераций %d", k, fx, res.nit)

        if best is None or fx < best.value:
            best = OptResult(
                argmin=x,
                value=fx,
                iterations=int(res.nit),
                converged=bool(res.success),
                start_index=k,
                n_evaluations=0,
            )

    if best is None:
        raise OptimizationError("Во всех стартовых точках значение целевой функции неконечно")
    return OptResult(
        argmin=best.argmin,
        value=best.value,
        iterations=best.iterations,
        converged=best.converged,
        start_index=best.start_index,
        n_evaluations=n_calls,
        trace=tuple(trace),
    )


def f_quantile(alpha: float, d1: float, d2: float) -> float:
    """Верхний α-квантиль F(d1, d2) через обращение неполной бета-функции.

    Если W ~ Beta(d1/2, d2/2), то d2·W / (d1·(1 − W)) ~ F(d1, d2).
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"α должно лежать в (0, 1), получено {alpha}")
    if d1 < 1 or d2 < 1:
        raise DomainError(f"Степени свободы должны быть ≥ 1: d1={d1}, d2={d2}")
    w = float(betaincinv(d1 / 2.0, d2 / 2.0, 1.0 - alpha))
    if w >= 1.0:
        return float("inf")
    return d2 * w / (d1 * (1.0 - w))


def rng_stream(seed: int, stream_id: int | Sequence[int] = ()) -> np.random.Generator:
    """Генератор для потока stream_id, порождённого сидом seed.

    Одинаковые (seed, stream_id) дают одинаковые последовательности,
    разные stream_id — независимые потоки.
    """
    key = (int(stream_id),) if isinstance(stream_id, (int, np.integer)) else tuple(int(s) for s in stream_id)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def latin_hypercube(n: int, lower, upper, rng: np.random.Generator) -> np.ndarray:
    """Случайный латинский гиперкуб n × d на прямоугольнике [lower, upper]."""
    lower = np.asarray(lower, dtype=float).reshape(-1)
    upper = np.asarray(upper, dtype=float).reshape(-1)
    if n < 1:
        raise DomainError(f"Число точек ЛГК должно быть ≥ 1, получено {n}")
    if lower.shape[0] == 0:
        return np.empty((n, 0))
    sample = qmc.LatinHypercube(d=lower.shape[0], rng=rng).random(n)
    return qmc.scale(sample, lower, upper)


def multistart_points(n: int, lower, upper, rng: np.random.Generator, first=None) -> list[np.ndarray]:
    """Старты: first (по умолчанию центр области) и n − 1 точек ЛГК."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    first = 0.5 * (lower + upper) if first is None else np.asarray(first, dtype=float)
    starts = [first]
    if n > 1:
        starts.extend(latin_hypercube(n - 1, lower, upper, rng))
    return starts
