import numpy as np
import pytest

from core import datamodel
from core.bench import generate_toy_data
from core.errors import CovarianceNotPDError, SingularGLSError, VariantError
from core.gp import build_fitted, concentrated_neg2loglik, correlation_matrix, fit_mle, kernel_eval
from core.gp.predict import predict, predict_many, predict_mse, predict_mse_many
from core.models import (
    CalibrationDataset,
    ComputerData,
    DesignMatrixSet,
    ExperimentalData,
    FitOptions,
    KernelSpec,
    Scaling,
    VarianceRatios,
)
from core.optimizer import central_difference, latin_hypercube


def _random_instance(rng, n=None, d=None, model="model2"):
    n = n or int(rng.integers(3, 7))
    d = d or int(rng.integers(1, 3))
    X = rng.uniform(0, 1, (n, d))
    # не больше трёх строк без шума: V хорошо обусловлена
    n_c = int(rng.integers(1, min(n, 3) + 1))
    data = DesignMatrixSet(X=X, F=datamodel.regression_basis(X), y=rng.normal(size=n), n_computer=n_c)
    theta = rng.uniform(3.0, 10.0, 1 if model == "model1" else d)
    kernel = KernelSpec(kind=model, theta=theta)
    ratios = VarianceRatios(gamma_C=0.0, gamma_E=float(rng.uniform(0.05, 1.0)))
    return data, kernel, ratios


def _dense_neg2loglik(data, kernel, ratios):
    X = data.X
    n = X.shape[0]
    theta = kernel.theta_vector(X.shape[1])
    R = np.array([[np.exp(-np.sum(theta * (a - b) ** 2)) for b in X] for a in X])
    nugget = [ratios.gamma_C] * data.n_computer + [ratios.gamma_E] * (n - data.n_computer)
    V = R + np.diag(nugget) + datamodel.JITTER * np.eye(n)
    V_inv = np.linalg.inv(V)
    F, y = data.F, data.y
    beta = np.linalg.solve(F.T @ V_inv @ F, F.T @ V_inv @ y)
    resid = y - F @ beta
    sigma2 = resid @ V_inv @ resid / n
    return n * np.log(sigma2) + np.linalg.slogdet(V)[1]


def test_kernel_eval_matches_formula():
    spec = KernelSpec(kind="model2", theta=(1.0, 2.0))
    assert kernel_eval(spec, [0.0, 0.0], [1.0, 0.5]) == pytest.approx(np.exp(-(1.0 + 2.0 * 0.25)))


def test_correlation_matrix_symmetric_unit_diagonal():
    X = np.random.default_rng(1).uniform(size=(5, 3))
    R = correlation_matrix(X, X, KernelSpec(theta=2.0))
    np.testing.assert_allclose(R, R.T)
    np.testing.assert_allclose(np.diag(R), 1.0)


def test_concentrated_likelihood_matches_dense_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        data, kernel, ratios = _random_instance(rng)
        value = concentrated_neg2loglik(kernel, ratios, data).neg2loglik
        assert value == pytest.approx(_dense_neg2loglik(data, kernel, ratios), rel=1e-10, abs=1e-10)


def test_duplicate_rows_without_nugget_not_pd():
    X = np.array([[0.2], [0.2], [0.7]])
    data = DesignMatrixSet(X=X, F=datamodel.regression_basis(X), y=np.array([1.0, 1.0, 2.0]), n_computer=3)
    with pytest.raises(CovarianceNotPDError):
        concentrated_neg2loglik(KernelSpec(theta=1.0), VarianceRatios(), data, jitter=0.0)


def test_fewer_rows_than_coefficients_is_singular():
    X = np.array([[0.1, 0.2], [0.4, 0.9]])
    data = DesignMatrixSet(X=X, F=datamodel.regression_basis(X), y=np.array([1.0, 2.0]), n_computer=2)
    with pytest.raises(SingularGLSError):
        concentrated_neg2loglik(KernelSpec(theta=1.0), VarianceRatios(), data)


def test_likelihood_gradient_stable_across_steps():
    rng = np.random.default_rng(3)
    for _ in range(20):
        data, kernel, ratios = _random_instance(rng, n=6, d=2, model="model2")
        x0 = np.log(np.asarray(kernel.theta))

        def f(log_theta):
            spec = KernelSpec(kind="model2", theta=np.exp(log_theta))
            return concentrated_neg2loglik(spec, ratios, data).neg2loglik

        g4 = central_difference(f, x0, abs_step=1e-4)
        g5 = central_difference(f, x0, abs_step=1e-5)
        np.testing.assert_allclose(g4, g5, rtol=1e-3, atol=1e-6)


@pytest.mark.parametrize("fid", [1, 2, 3, 4, 5, 6, 7])
def test_variant_c_interpolates_computer_data(fid):
    dataset = generate_toy_data(fid, seed=fid)
    fitted = fit_mle(dataset, "model1", "computer", opts=FitOptions(n_starts=2))
    comp = dataset.computer
    pred = predict_many(fitted, comp.inputs, "C")
    np.testing.assert_allclose(pred, comp.responses, rtol=0, atol=1e-8)


def test_msep_vanishes_at_training_points():
    dataset = generate_toy_data(6, seed=2)
    fitted = fit_mle(dataset, "model1", "computer", opts=FitOptions(n_starts=2))
    mse = predict_mse_many(fitted, dataset.computer.inputs, "C")
    assert np.all(mse >= 0)
    assert np.max(mse) < 1e-4 * fitted.sigma2_raw


def test_msep_positive_away_from_training_points():
    dataset = generate_toy_data(6, seed=2)
    fitted = fit_mle(dataset, "model1", "computer", opts=FitOptions(n_starts=2))
    x0 = np.array([4.0, 4.0, 0.5, 0.5]) + 1e-3
    assert predict_mse(fitted, x0, "C") > 0


def test_combined_fit_estimates_gamma_and_smooths_experiments():
    dataset = generate_toy_data(6, seed=4)
    tau = np.array([4.0, 4.0])
    fitted = fit_mle(dataset, "model1", "combined", tau=tau, opts=FitOptions(n_starts=3))
    assert fitted.source == "combined"
    X_E = datamodel.assemble_experimental_inputs(dataset.experimental, tau, 2)
    pred = predict_many(fitted, X_E, "B")
    if fitted.gamma_E > 1e-6:
        assert not np.allclose(pred, dataset.experimental.responses, atol=1e-8)


def test_variant_mismatch_raises():
    dataset = generate_toy_data(6, seed=5)
    fit_c = fit_mle(dataset, "model1", "computer", opts=FitOptions(n_starts=1))
    with pytest.raises(VariantError):
        predict(fit_c, dataset.computer.inputs[0], "B")


def test_cgb_uses_computer_rows_only():
    dataset = generate_toy_data(6, seed=6)
    tau = np.array([4.0, 4.0])
    fitted = fit_mle(dataset, "model1", "combined", tau=tau, opts=FitOptions(n_starts=2))
    comp = dataset.computer
    pred = predict_many(fitted, comp.inputs, "CgB")
    np.testing.assert_allclose(pred, comp.responses, rtol=0, atol=1e-8)


def test_build_fitted_summary_has_raw_coefficients():
    rng = np.random.default_rng(11)
    data, kernel, ratios = _random_instance(rng, n=6, d=2, model="model1")
    fitted = build_fitted(data, kernel, ratios)
    summary = fitted.summary()
    assert len(summary["beta"]) == 3
    assert summary["sigma2"] == pytest.approx(fitted.sigma2)


def test_variant_b_without_experimental_rows_equals_variant_c():
    rng = np.random.default_rng(8)
    X = rng.uniform(0, 1, (7, 3))
    data = DesignMatrixSet(X=X, F=datamodel.regression_basis(X), y=rng.normal(size=7), n_computer=7)
    kernel = KernelSpec(kind="model2", theta=[4.0, 6.0, 8.0])
    fit_c = build_fitted(data, kernel, VarianceRatios(), source="computer")
    fit_b = build_fitted(data, kernel, VarianceRatios(gamma_E=0.3), source="combined")
    X0 = rng.uniform(0, 1, (5, 3))
    expected = predict_many(fit_c, X0, "C")
    np.testing.assert_allclose(predict_many(fit_b, X0, "B"), expected, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(predict_many(fit_b, X0, "CgB"), expected, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(
        predict_mse_many(fit_b, X0, "B"), predict_mse_many(fit_c, X0, "C"), rtol=1e-10, atol=1e-14
    )


def test_fit_mle_recovers_simulated_theta():
    rng = np.random.default_rng(2024)
    theta_true = 30.0
    X = latin_hypercube(50, [0.0, 0.0], [1.0, 1.0], rng)
    R = correlation_matrix(X, X, KernelSpec(kind="model1", theta=[theta_true]))
    L = np.linalg.cholesky(R + 1e-8 * np.eye(50))
    y = 1.0 + L @ rng.normal(size=50)
    dataset = CalibrationDataset(
        computer=ComputerData(t_inputs=X[:, :1], x_inputs=X[:, 1:], responses=y),
        experimental=ExperimentalData(x_inputs=[[0.2], [0.8]], responses=[1.0, 1.0]),
    )
    fitted = fit_mle(dataset, "model1", "computer", opts=FitOptions(n_starts=4), scaling=Scaling.identity(2))
    assert theta_true / 2 < fitted.kernel.theta[0] < theta_true * 2
    assert 0.25 < fitted.sigma2 < 4.0


def test_cgb_msep_uses_combined_variance():
    dataset = generate_toy_data(6, seed=6)
    fitted = fit_mle(dataset, "model1", "combined", tau=[4.0, 4.0], opts=FitOptions(n_starts=2))
    assert fitted.computer_factors.sigma2 == fitted.sigma2
    mse = predict_mse_many(fitted, dataset.computer.inputs, "CgB")
    assert np.max(mse) < 1e-4 * fitted.sigma2_raw
