"""Тестовые функции Y(τ, x) и генерация модельных данных.

Функции 1–5 — точные модели (b ≡ 0), 6–7 — неточные: к эксперименту
добавлена систематическая поправка b(x).
"""

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from core.errors import DimensionError, DomainError
from core.models import CalibrationDataset, ComputerData, ExperimentalData
from core.optimizer import latin_hypercube, rng_stream


def _tf1(t, x):
    return t[0] * math.exp(t[1] + x[0]) + t[0] * x[1] ** 2 - t[1] * x[2] ** 2


def _tf2(t, x):
    if x[3] <= 0:
        raise DomainError(f"Тестовая функция 2: нужно x4 > 0, получено {x[3]}")
    return (
        t[0] * math.exp(t[1] + x[0] + t[2])
        + t[0] * t[2] * x[1] ** 2
        - t[1] * x[2] ** 2
        - t[2] * math.log(x[3])
    )


def _tf3(t, x):
    return (
        t[0] * math.exp(abs(x[0] + x[1]))
        + t[1] * (x[2] + 1.2 * x[3] + 1.0) / 2.5
        + t[1] * 3.0 * math.cos(x[1] + x[2])
    )


def _tf4(t, x):
    # Течение воды через скважину между двумя водоносными слоями
    if x[3] <= 0 or x[4] <= 0:
        raise DomainError(f"Тестовая функция 4: нужно x4 > 0 и x5 > 0, получено {x[3]}, {x[4]}")
    log_ratio = math.log(x[3] / x[4])
    if log_ratio == 0:
        raise DomainError("Тестовая функция 4: log(x4/x5) = 0")
    denominator = log_ratio * (1.0 + t[1] * x[0] * x[5] / (log_ratio * x[1] ** 2 * x[6]) + x[0] / x[7])
    return t[0] * x[0] * (x[1] - x[2]) / denominator


def _tf5(t, x):
    return t[0] * x[0] ** 2 + t[1] * x[1] + t[2] * math.cos(x[2] * math.pi) + t[3] * math.sin(x[3] * math.pi)


def _tf6(t, x):
    return t[0] * x[0] ** 2 + t[1] * x[1]


def _tf7(t, x):
    x1, x2 = x
    if x2 <= 0 or x1 < 0:
        raise DomainError(f"Тестовая функция 7: нужно x1 ≥ 0 и x2 > 0, получено {x1}, {x2}")
    ratio = (100.0 * t[0] * x1**3 + 1900.0 * x1**2 + 2092.0 * x1 + 60.0) / (
        100.0 * t[1] * x1**3 + 500.0 * x1**2 + 4.0 * x1 + 20.0
    )
    tail = 5.0 * math.exp(-t[0]) * x1 ** (t[2] / 10.0) / (100.0 * (x2 ** (2.0 + t[2] / 10.0) + 1.0))
    return (1.0 - math.exp(-1.0 / (2.0 * x2))) * ratio + tail


def _no_bias(x):
    return 0.0


def _bias6(x):
    return x[1] * math.sin(5.0 * x[1])


def _bias7(x):
    return (10.0 * x[0] ** 2 + 4.0 * x[1] ** 2) / (50.0 * x[0] * x[1] + 10.0)


@dataclass(frozen=True)
class TestFunction:
    """Тестовая функция с диапазонами входов, истинным τ и шумом эксперимента."""

    __test__ = False

    id: int
    formula: Callable
    tau_star: tuple[float, ...]
    t_ranges: tuple[tuple[float, float], ...]
    x_ranges: tuple[tuple[float, float], ...]
    noise_var: float
    bias: Callable = _no_bias
    n_computer: int = 30
    n_experimental: int = 30

    @property
    def q(self) -> int:
        return len(self.tau_star)

    @property
    def p(self) -> int:
        return len(self.x_ranges)

    @property
    def exact(self) -> bool:
        return self.bias is _no_bias

    def input_ranges(self) -> tuple[np.ndarray, np.ndarray]:
        """Нижние и верхние границы столбцов (T, x)."""
        ranges = np.array(self.t_ranges + self.x_ranges, dtype=float)
        return ranges[:, 0], ranges[:, 1]


TEST_FUNCTIONS: dict[int, TestFunction] = {
    1: TestFunction(
        id=1,
        formula=_tf1,
        tau_star=(2.0, 2.0),
        t_ranges=((0.0, 5.0), (0.0, 4.0)),
        x_ranges=((-3.0, 3.0), (-3.0, 3.0), (0.0, 6.0)),
        noise_var=1.0,
    ),
    2: TestFunction(
        id=2,
        formula=_tf2,
        tau_star=(2.0, 1.0, 3.0),
        t_ranges=((0.0, 5.0), (0.0, 4.0), (1.0, 5.0)),
        x_ranges=((-3.0, 4.0), (-3.0, 3.0), (0.0, 6.0), (1.0, 5.0)),
        noise_var=1.0,
    ),
    3: TestFunction(
        id=3,
        formula=_tf3,
        tau_star=(2.0, 3.0),
        t_ranges=((0.0, 4.0), (1.0, 4.0)),
        x_ranges=((-0.5, 1.5), (-0.5, 0.5), (-0.5, 1.5), (-0.5, 0.5)),
        noise_var=0.1,
    ),
    4: TestFunction(
        id=4,
        formula=_tf4,
        tau_star=(2.0 * math.pi, 2.0),
        t_ranges=((5.0, 8.0), (1.0, 3.0)),
        x_ranges=(
            (6370.0, 115600.0),
            (990.0, 1110.0),
            (700.0, 820.0),
            (100.0, 50000.0),
            (0.05, 0.15),
            (1120.0, 1680.0),
            (9855.0, 12045.0),
            (63.1, 116.0),
        ),
        noise_var=2.0,
    ),
    5: TestFunction(
        id=5,
        formula=_tf5,
        tau_star=(1.0, 2.0, 3.0, 2.0),
        t_ranges=((0.0, 5.0), (0.0, 5.0), (0.0, 7.0), (0.0, 5.0)),
        x_ranges=((0.0, 3.0), (0.0, 3.0), (0.0, 2.0), (0.0, 2.0)),
        noise_var=4.0,
    ),
    6: TestFunction(
        id=6,
        formula=_tf6,
        tau_star=(4.0, 4.0),
        t_ranges=((1.0, 8.0), (1.0, 8.0)),
        x_ranges=((0.0, 1.0), (0.0, 1.0)),
        noise_var=0.02**2,
        bias=_bias6,
        n_computer=20,
        n_experimental=20,
    ),
    7: TestFunction(
        id=7,
        formula=_tf7,
        tau_star=(2.0, 1.0, 3.0),
        t_ranges=((0.1, 5.0), (0.1, 5.0), (0.1, 5.0)),
        x_ranges=((0.0, 1.0), (0.0, 1.0)),
        noise_var=0.5**2,
        bias=_bias7,
        n_computer=20,
        n_experimental=20,
    ),
}


def get_test_function(fid: int) -> TestFunction:
    try:
        return TEST_FUNCTIONS[int(fid)]
    except KeyError:
        raise DomainError(f"Неизвестная тестовая функция {fid}; доступны {sorted(TEST_FUNCTIONS)}") from None


def eval_test_function(fid: int, tau, x) -> float:
    """Y(τ, x) тестовой функции fid."""
    tf = get_test_function(fid)
    tau = np.asarray(tau, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if tau.shape[0] != tf.q or x.shape[0] != tf.p:
        raise DimensionError(f"Тестовая функция {fid}: ожидается q={tf.q}, p={tf.p}, получено {tau.shape[0]}, {x.shape[0]}")
    return float(tf.formula(tau, x))


def simulator_for(fid: int) -> Callable[[np.ndarray], float]:
    """Симулятор для последовательного плана: строка (T, x) → Y(T, x)."""
    tf = get_test_function(fid)

    def simulate(row: np.ndarray) -> float:
        row = np.asarray(row, dtype=float)
        return eval_test_function(fid, row[: tf.q], row[tf.q:])

    return simulate


def generate_toy_data(
    fid: int,
    n_C: int | None = None,
    n_E: int | None = None,
    seed: int = 0,
    *,
    noise_var: float | None = None,
    rng: np.random.Generator | None = None,
) -> CalibrationDataset:
    """Модельные данные: код в точках ЛГК по (T, x), эксперимент в точках ЛГК по x.

    y_C = Y(T, x), y_E = Y(τ*, x) + b(x) + e, e ~ N(0, σ_e²).

    Args:
        fid: Номер тестовой функции 1–7.
        n_C, n_E: Размеры выборок (по умолчанию — как для функции).
        seed: Сид, если rng не задан.
        noise_var: Замена σ_e² (например, 0 для данных без шума).
        rng: Генератор; задаёт и планы, и шум.
    """
    tf = get_test_function(fid)
    n_C = tf.n_computer if n_C is None else n_C
    n_E = tf.n_experimental if n_E is None else n_E
    if n_C < 1 or n_E < 1:
        raise DomainError(f"Размеры выборок должны быть ≥ 1: n_C={n_C}, n_E={n_E}")
    rng = rng if rng is not None else rng_stream(seed)
    noise_var = tf.noise_var if noise_var is None else noise_var

    lower, upper = tf.input_ranges()
    computer_inputs = latin_hypercube(n_C, lower, upper, rng)
    x_E = latin_hypercube(n_E, lower[tf.q:], upper[tf.q:], rng)

    tau_star = np.array(tf.tau_star)
    y_C = np.array([tf.formula(row[: tf.q], row[tf.q:]) for row in computer_inputs])
    y_E = np.array([tf.formula(tau_star, x) + tf.bias(x) for x in x_E])
    y_E = y_E + rng.normal(0.0, math.sqrt(noise_var), n_E)

    return CalibrationDataset(
        computer=ComputerData(t_inputs=computer_inputs[:, : tf.q], x_inputs=computer_inputs[:, tf.q:], responses=y_C),
        experimental=ExperimentalData(x_inputs=x_E, responses=y_E),
    )
