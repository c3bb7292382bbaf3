import math

import numpy as np
import pytest

from core.bench import (
    TEST_FUNCTIONS,
    BenchmarkMatrix,
    RunRecord,
    comparison_table,
    dataset_hash,
    distance,
    eval_test_function,
    generate_toy_data,
    run_benchmark,
    summarize,
)
from core.bench.harness import maxmin_profile
from core.errors import DimensionError, DomainError
from core.models import CalibrationOptions, FitOptions, MaxMinConfig


def test_test_function_1_at_origin():
    assert eval_test_function(1, [2.0, 2.0], [0.0, 0.0, 0.0]) == pytest.approx(2.0 * math.exp(2.0))
    assert eval_test_function(1, [2.0, 2.0], [0.0, 0.0, 0.0]) == pytest.approx(14.7781122, abs=1e-6)


def test_test_function_6_corner():
    assert eval_test_function(6, [4.0, 4.0], [1.0, 1.0]) == pytest.approx(8.0)


def test_test_function_5_trigonometric_terms():
    value = eval_test_function(5, [1.0, 2.0, 3.0, 2.0], [1.0, 0.5, 1.0, 0.5])
    assert value == pytest.approx(1.0 + 1.0 - 3.0 + 2.0)


def test_test_function_4_positive_flow():
    tf = TEST_FUNCTIONS[4]
    lower, upper = tf.input_ranges()
    middle = 0.5 * (lower + upper)
    assert eval_test_function(4, tf.tau_star, middle[tf.q:]) > 0


def test_test_function_7_domain():
    with pytest.raises(DomainError):
        eval_test_function(7, [2.0, 1.0, 3.0], [0.5, 0.0])


def test_eval_test_function_checks_lengths():
    with pytest.raises(DimensionError):
        eval_test_function(1, [2.0], [0.0, 0.0, 0.0])


def test_unknown_test_function():
    with pytest.raises(DomainError):
        eval_test_function(8, [1.0], [1.0])


@pytest.mark.parametrize("fid", sorted(TEST_FUNCTIONS))
def test_generate_toy_data_defaults(fid):
    tf = TEST_FUNCTIONS[fid]
    dataset = generate_toy_data(fid, seed=1)
    assert dataset.computer.n == tf.n_computer
    assert dataset.experimental.n == tf.n_experimental
    assert dataset.q == tf.q and dataset.p == tf.p
    lower, upper = tf.input_ranges()
    assert np.all(dataset.computer.inputs >= lower) and np.all(dataset.computer.inputs <= upper)


def test_generate_toy_data_without_noise_is_exact():
    dataset = generate_toy_data(1, n_C=10, n_E=5, seed=2, noise_var=0.0)
    tf = TEST_FUNCTIONS[1]
    for x, y in zip(dataset.experimental.x_inputs, dataset.experimental.responses):
        assert y == pytest.approx(eval_test_function(1, tf.tau_star, x))


def test_generate_toy_data_reproducible():
    a = generate_toy_data(3, seed=4)
    b = generate_toy_data(3, seed=4)
    assert dataset_hash(a) == dataset_hash(b)
    assert dataset_hash(a) != dataset_hash(generate_toy_data(3, seed=5))


def test_distance_and_length_mismatch():
    assert distance([1.0, 2.0], [4.0, 6.0]) == pytest.approx(5.0)
    with pytest.raises(DimensionError):
        distance([1.0], [1.0, 2.0])


def _record(rep, tau, rss=1.0, error=None):
    return RunRecord(
        function_id=1,
        repetition=rep,
        method="anls",
        model="model1",
        variant="-",
        bias=False,
        dataset_hash="x",
        tau_hat=None if error else tau,
        distance=None if error else distance(tau, (2.0, 2.0)),
        rss_p=None if error else rss,
        error=error,
    )


def test_summarize_mse_decomposition():
    records = [_record(0, [2.0, 3.0]), _record(1, [2.0, 1.0]), _record(2, [3.0, 2.0])]
    summary = summarize(records, (2.0, 2.0))
    taus = np.array([r.tau_hat for r in records])
    sd = taus.std(axis=0, ddof=1)
    assert summary.mean_distance == pytest.approx(1.0)
    assert summary.mse == pytest.approx(1.0 + float(np.sum(sd**2)))
    np.testing.assert_allclose(summary.tau_sd, sd)
    assert summary.n_failed == 0


def test_summarize_single_run_has_no_sd():
    summary = summarize([_record(0, [2.5, 2.0])], (2.0, 2.0))
    assert summary.sd_distance is None
    assert summary.tau_sd is None
    assert summary.mse == pytest.approx(0.25)


def test_summarize_counts_failures():
    summary = summarize([_record(0, [2.0, 2.0]), _record(1, None, error="FitError: x")], (2.0, 2.0))
    assert summary.n_runs == 2 and summary.n_failed == 1


def test_maxmin_profile_exact_and_inexact():
    exact = maxmin_profile(1, "B")
    assert exact.maxagain == 2 and exact.fluctuation is False
    inexact = maxmin_profile(6, "CgB")
    assert inexact == MaxMinConfig(variant="CgB")
    override = maxmin_profile(1, "CgB", MaxMinConfig(max_iterations=3))
    assert override.max_iterations == 3 and override.variant == "CgB"


def test_matrix_rejects_unknown_function():
    with pytest.raises(ValueError):
        BenchmarkMatrix(function_ids=[1, 9])


FAST = CalibrationOptions(fit=FitOptions(n_starts=1), n_tau_starts=2)


def test_single_repetition_benchmark():
    matrix = BenchmarkMatrix(function_ids=[6], methods=["anls", "maxmin"], repetitions=1, options=FAST,
                             maxmin=MaxMinConfig(max_iterations=2))
    report = run_benchmark(matrix)
    assert len(report.records) == 2
    assert len({r.dataset_hash for r in report.records}) == 1
    for a in report.aggregates:
        assert a.n_runs == 1
        assert a.sd_distance is None
    table = comparison_table(report)
    assert "Average distance to the true value (SD)" in table.columns
    assert "RI, %" in table.columns


def test_benchmark_reproducible_and_order_free():
    matrix = BenchmarkMatrix(function_ids=[6], methods=["anls"], repetitions=2, options=FAST, base_seed=3)
    first = run_benchmark(matrix)
    again = run_benchmark(matrix)
    assert [r.tau_hat for r in first.records] == [r.tau_hat for r in again.records]
    # повторение 1 не зависит от того, выполнялось ли повторение 0
    longer = run_benchmark(matrix, repetitions=3)
    assert longer.records[1].tau_hat == first.records[1].tau_hat


def test_benchmark_relative_improvement_only_for_maxmin():
    matrix = BenchmarkMatrix(function_ids=[6], methods=["anls", "maxmin"], repetitions=1, options=FAST,
                             maxmin=MaxMinConfig(max_iterations=1))
    report = run_benchmark(matrix)
    by_method = {a.method: a for a in report.aggregates}
    assert by_method["anls"].relative_improvement is None
    # одна итерация Max-min совпадает с ANLS
    assert by_method["maxmin"].relative_improvement == pytest.approx(0.0, abs=1e-9)


def test_benchmark_skips_bias_cells_for_methods_without_bias():
    matrix = BenchmarkMatrix(function_ids=[6], methods=["anls", "smle"], bias=[False, True], repetitions=1, options=FAST)
    report = run_benchmark(matrix)
    cells = {(r.method, r.bias) for r in report.records}
    assert cells == {("anls", False), ("anls", True), ("smle", False)}
    assert all(r.error is None for r in report.records)


def test_benchmark_without_runnable_cells_fails():
    matrix = BenchmarkMatrix(function_ids=[6], methods=["smle"], bias=[True], repetitions=1, options=FAST)
    with pytest.raises(DomainError):
        run_benchmark(matrix)
