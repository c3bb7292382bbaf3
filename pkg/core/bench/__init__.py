"""Тестовые функции, модельные данные и повторные калибровки.

Использование:
    from core.bench import generate_toy_data, run_benchmark, BenchmarkMatrix
"""

from .functions import TEST_FUNCTIONS, TestFunction, eval_test_function, generate_toy_data, get_test_function, simulator_for
from .harness import (
    BenchmarkMatrix,
    BenchmarkReport,
    CellSummary,
    RunRecord,
    comparison_table,
    dataset_hash,
    distance,
    run_benchmark,
    summarize,
)

__all__ = [
    # Тестовые функции
    "TEST_FUNCTIONS",
    "TestFunction",
    "get_test_function",
    "eval_test_function",
    "generate_toy_data",
    "simulator_for",
    # Повторные калибровки
    "BenchmarkMatrix",
    "BenchmarkReport",
    "RunRecord",
    "CellSummary",
    "run_benchmark",
    "summarize",
    "distance",
    "dataset_hash",
    "comparison_table",
]
