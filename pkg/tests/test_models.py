import numpy as np
import pytest

from core import datamodel
from core.errors import DimensionError, DomainError
from core.models import (
    CalibrationDataset,
    ComputerData,
    DesignSpec,
    ExperimentalData,
    KernelSpec,
    Scaling,
    VarianceRatios,
)


def _dataset(n_E=3, q=2, p=1, **bounds):
    rng = np.random.default_rng(0)
    computer = ComputerData(
        t_inputs=rng.uniform(0, 1, (6, q)), x_inputs=rng.uniform(0, 1, (6, p)), responses=rng.normal(size=6)
    )
    experimental = ExperimentalData(x_inputs=rng.uniform(0, 1, (n_E, p)), responses=rng.normal(size=n_E))
    return CalibrationDataset(computer=computer, experimental=experimental, **bounds)


def test_computer_data_rejects_row_mismatch():
    with pytest.raises(ValueError, match="число строк"):
        ComputerData(t_inputs=np.zeros((3, 1)), x_inputs=np.zeros((2, 1)), responses=np.zeros(3))


def test_computer_data_rejects_nonfinite_inputs():
    with pytest.raises(ValueError, match="конечными"):
        ComputerData(t_inputs=[[np.nan]], x_inputs=[[0.0]], responses=[1.0])


def test_computer_data_without_tuning_columns():
    comp = ComputerData(t_inputs=None, x_inputs=[[0.0], [1.0]], responses=[1.0, 2.0])
    assert comp.q == 0
    assert comp.inputs.shape == (2, 1)


def test_dataset_requires_q_plus_one_experimental_points():
    with pytest.raises(ValueError, match="n_E"):
        _dataset(n_E=2, q=2)


def test_dataset_default_tau_bounds_are_computer_ranges():
    dataset = _dataset()
    lower, upper = dataset.tau_bounds
    T = dataset.computer.t_inputs
    np.testing.assert_array_equal(lower, T.min(axis=0))
    np.testing.assert_array_equal(upper, T.max(axis=0))


def test_dataset_rejects_inverted_tau_bounds():
    with pytest.raises(ValueError, match="lower < upper"):
        _dataset(tau_lower=(1.0, 1.0), tau_upper=(0.0, 2.0))


def test_kernel_spec_model1_takes_single_theta():
    with pytest.raises(ValueError):
        KernelSpec(kind="model1", theta=(1.0, 2.0))
    np.testing.assert_array_equal(KernelSpec(kind="model1", theta=2.0).theta_vector(3), [2.0, 2.0, 2.0])


def test_kernel_spec_model2_dimension_check():
    spec = KernelSpec(kind="model2", theta=(1.0, 2.0))
    with pytest.raises(DimensionError):
        spec.theta_vector(3)


def test_kernel_spec_rejects_negative_theta():
    with pytest.raises(ValueError):
        KernelSpec(kind="model2", theta=(1.0, -0.5))


def test_variance_ratios_non_negative():
    with pytest.raises(ValueError):
        VarianceRatios(gamma_E=-1.0)


def test_design_spec_rejects_empty_ranges():
    with pytest.raises(ValueError):
        DesignSpec(n_points=3, lower=(0.0, 1.0), upper=(1.0, 1.0))
    assert DesignSpec(n_points=3, lower=(0, 0), upper=(1, 2)).dimension == 2


def test_scaling_round_trip_and_constant_column():
    scaling = Scaling.from_ranges([0.0, 5.0], [2.0, 5.0], [1.0, 3.0])
    np.testing.assert_allclose(scaling.inputs([[1.0, 5.0]]), [[0.5, 0.0]])
    np.testing.assert_allclose(scaling.response_inverse(scaling.response([1.0, 3.0])), [1.0, 3.0])


def test_assemble_experimental_inputs_prepends_tau():
    exp = ExperimentalData(x_inputs=[[1.0], [2.0]], responses=[0.0, 0.0])
    X = datamodel.assemble_experimental_inputs(exp, [7.0, 8.0], 2)
    np.testing.assert_array_equal(X, [[7.0, 8.0, 1.0], [7.0, 8.0, 2.0]])


def test_assemble_experimental_inputs_checks_tau_length():
    exp = ExperimentalData(x_inputs=[[1.0]], responses=[0.0])
    with pytest.raises(DimensionError):
        datamodel.assemble_experimental_inputs(exp, [1.0, 2.0, 3.0], 2)


def test_assemble_combined_orders_computer_rows_first():
    dataset = _dataset()
    X_B, F_B, y_B = datamodel.assemble_combined(dataset.computer, dataset.experimental, [0.3, 0.4])
    assert X_B.shape == (9, 3)
    np.testing.assert_array_equal(X_B[:6], dataset.computer.inputs)
    np.testing.assert_array_equal(X_B[6:, :2], np.tile([0.3, 0.4], (3, 1)))
    np.testing.assert_array_equal(F_B[:, 0], np.ones(9))
    np.testing.assert_array_equal(y_B[6:], dataset.experimental.responses)


def test_assemble_covariance_nugget_blocks():
    X = np.array([[0.0], [0.5], [1.0]])
    ratios = VarianceRatios(gamma_C=0.0, gamma_E=0.3)
    V = datamodel.assemble_covariance(X, None, KernelSpec(theta=1.0), 2.0, ratios, n_computer=2, jitter=0.0)
    np.testing.assert_allclose(np.diag(V), [2.0, 2.0, 2.0 * 1.3])
    assert V[0, 2] == pytest.approx(2.0 * np.exp(-1.0))


def test_assemble_covariance_rejects_bad_sigma2():
    with pytest.raises(DomainError):
        datamodel.assemble_covariance(np.zeros((1, 1)), None, KernelSpec(), 0.0, VarianceRatios())
