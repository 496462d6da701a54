import math

import numpy as np
import pytest
import scipy.stats

from mces.exceptions import ContractViolationError, DataFormatError
from mces.harness import bundled_german_path, generate_lgcp_data, load_german_credit
from mces.models import (
    EightSchoolsModel,
    GaussianTarget,
    LGCPModel,
    LogisticRegressionModel,
    RosenbrockTarget,
    eight_schools_transform,
    grid_covariance,
    load_eight_schools,
)

from conftest import assert_gradient_matches


def toy_logistic(rng, n_rows=10, n_features=3):
    raw = rng.standard_normal((n_rows, n_features))
    std = (raw - raw.mean(axis=0)) / raw.std(axis=0)
    design = np.column_stack([np.ones(n_rows), std])
    labels = (rng.uniform(size=n_rows) < 0.5).astype(float)
    return LogisticRegressionModel(design, labels)


def all_models(rng):
    a = rng.standard_normal((3, 3))
    truth = generate_lgcp_data(5, 7)
    return [
        GaussianTarget(rng.standard_normal(3), a @ a.T + 3 * np.eye(3)),
        RosenbrockTarget(0.35),
        load_eight_schools(),
        toy_logistic(rng),
        LGCPModel(5, truth.counts),
    ]


class TestPotentialExamples:
    def test_standard_normal_at_mode(self):
        model = GaussianTarget(np.zeros(1), np.eye(1))
        assert model.potential(np.zeros(1)) == 0.0

    def test_rosenbrock_b0(self):
        assert RosenbrockTarget(0.0).potential([1.0, 0.0]) == pytest.approx(1.0)

    def test_rosenbrock_on_ridge(self):
        # x2 - b*x1^2 = 0 kills the quadratic penalty
        assert RosenbrockTarget(0.1).potential([1.0, 0.1]) == pytest.approx(1.0)

    def test_gaussian_gradient(self):
        model = GaussianTarget(np.zeros(2), np.eye(2))
        assert np.allclose(model.gradient([2.0, -1.0]), [2.0, -1.0])

    def test_rosenbrock_gradient(self):
        assert np.allclose(RosenbrockTarget(0.0).gradient([1.0, 1.0]), [2.0, 200.0])

    def test_dimension_mismatch(self):
        model = GaussianTarget(np.zeros(2), np.eye(2))
        with pytest.raises(ContractViolationError):
            model.potential([1.0, 2.0, 3.0])
        with pytest.raises(ContractViolationError):
            model.gradient([1.0])


class TestFiniteDifferences:
    def test_all_models_100_points(self, rng):
        for model in all_models(rng):
            base = np.full(model.dim, model.mu) if model.name == "lgcp" else np.zeros(model.dim)
            for _ in range(20):
                x = base + 0.5 * rng.standard_normal(model.dim)
                assert_gradient_matches(model, x)

    def test_lgcp_2x2_toy(self, rng):
        counts = np.array([[1.0, 0.0], [2.0, 3.0]])
        model = LGCPModel(2, counts, mu=0.5, s=0.8)
        for _ in range(10):
            assert_gradient_matches(model, rng.standard_normal(4))


class TestGaussianTarget:
    def test_precision_inverse_identity(self, rng):
        a = rng.standard_normal((4, 4))
        cov = a @ a.T + 4 * np.eye(4)
        model = GaussianTarget(np.zeros(4), cov)
        assert np.abs(cov @ model.precision - np.eye(4)).max() <= 1e-10

    def test_rejects_asymmetric(self):
        with pytest.raises(ContractViolationError):
            GaussianTarget(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))


class TestLogisticRegression:
    def test_zero_beta_gives_n_log2(self, rng):
        model = toy_logistic(rng)
        assert model.potential(np.zeros(model.dim)) == pytest.approx(10 * math.log(2))

    def test_single_intercept_row(self):
        model = LogisticRegressionModel(np.ones((1, 1)), np.ones(1))
        assert model.potential(np.zeros(1)) == pytest.approx(math.log(2))

    def test_matches_naive_formula(self, rng):
        model = toy_logistic(rng)
        beta = 0.5 * rng.standard_normal(model.dim)
        z = model.design @ beta
        naive = 0.5 * beta @ beta + np.sum(np.log1p(np.exp(z)) - model.labels * z)
        assert model.potential(beta) == pytest.approx(naive, abs=1e-10)

    def test_softplus_is_overflow_safe(self, rng):
        model = toy_logistic(rng)
        u = model.potential(np.full(model.dim, 200.0))
        assert np.isfinite(u)

    def test_requires_intercept_column(self, rng):
        with pytest.raises(ContractViolationError):
            LogisticRegressionModel(rng.standard_normal((5, 2)), np.zeros(5))


class TestLGCP:
    def test_zero_counts_at_prior_mean(self):
        d = 4
        model = LGCPModel(d, np.zeros((d, d)), mu=1.3, s=0.7)
        x = np.full(d * d, 1.3)
        assert model.potential(x) == pytest.approx(d * d * 0.7 * math.exp(1.3))

    def test_default_parameters_match_reference_table(self):
        model = LGCPModel(32, np.zeros((32, 32)))
        assert model.alpha == 1.91
        assert model.beta == pytest.approx(1.0 / 33.0)
        assert model.mu == pytest.approx(math.log(126.0) - 1.91 / 2.0)
        assert model.s == pytest.approx(1.0 / 1024.0)
        assert np.allclose(np.diag(model.prior_covariance), 1.91)

    def test_covariance_kernel_values(self):
        d = 3
        cov = grid_covariance(d, 2.0, 0.5)
        # neighbours at distance 1 with length scale beta*d = 1.5
        assert cov[0, 1] == pytest.approx(2.0 * math.exp(-1.0 / 1.5))
        assert np.allclose(cov, cov.T)
        assert np.linalg.eigvalsh(cov).min() > 0

    def test_rejects_negative_counts(self):
        with pytest.raises(ContractViolationError):
            LGCPModel(2, -np.ones((2, 2)))


class TestEightSchools:
    def test_transform_at_origin(self):
        theta, mu, tau, _ = eight_schools_transform(np.zeros(10))
        assert mu == pytest.approx(0.0)
        assert tau == pytest.approx(7.5)
        assert np.allclose(theta, 0.0)

    def test_transform_boundary_limit(self):
        _, mu, _, _ = eight_schools_transform(np.r_[np.zeros(8), 40.0, 0.0])
        assert mu == pytest.approx(15.0, abs=1e-10)

    def test_log_jacobian_value(self):
        *_, log_jac = eight_schools_transform(np.zeros(10))
        # both sigmoids at 1/2: log(30 * 1/4) + log(15 * 1/4)
        assert log_jac == pytest.approx(math.log(30.0 / 4.0) + math.log(15.0 / 4.0))

    def test_pushforward_prior_of_mu_is_uniform(self, rng):
        # u ~ logistic is the density the Jacobian term encodes, so the
        # constrained hyper-parameter must come out uniform on [-15, 15]
        u = rng.logistic(size=20000)
        mu = -15.0 + 30.0 * scipy.stats.logistic.cdf(u)
        result = scipy.stats.kstest(mu, "uniform", args=(-15.0, 30.0))
        assert result.pvalue > 0.01

    def test_bundled_data(self):
        model = load_eight_schools()
        assert model.dim == 10
        assert model.y[0] == 28.0 and model.sigma[-1] == 18.0

    def test_sigma_must_be_positive(self):
        with pytest.raises(ContractViolationError):
            EightSchoolsModel(np.zeros(8), np.zeros(8))

    def test_file_errors(self, tmp_path):
        bad = tmp_path / "short.txt"
        bad.write_text("1,2,3\n")
        with pytest.raises(DataFormatError):
            EightSchoolsModel.from_file(bad)
        bad.write_text("1,2,3,4,5,6,7\n1,2,3,4,5,6,7\n")
        with pytest.raises(DataFormatError):
            EightSchoolsModel.from_file(bad)


class TestGermanCredit:
    def test_bundled_standin_loads(self):
        model = load_german_credit(bundled_german_path())
        assert model.design.shape == (1000, 25)
        assert set(np.unique(model.labels)) == {0.0, 1.0}

    def test_standardization(self):
        model = load_german_credit(bundled_german_path())
        features = model.design[:, 1:]
        assert np.abs(features.mean(axis=0)).max() <= 1e-10
        assert np.abs(features.var(axis=0) - 1.0).max() <= 1e-10

    def test_row_count_validated(self, tmp_path):
        path = tmp_path / "truncated.data-numeric"
        with open(bundled_german_path()) as fh:
            lines = fh.readlines()
        path.write_text("".join(lines[:-1]))
        with pytest.raises(DataFormatError, match="999"):
            load_german_credit(path)

    def test_column_count_validated(self, tmp_path):
        path = tmp_path / "narrow.data-numeric"
        path.write_text("1 2 3\n" * 1000)
        with pytest.raises(DataFormatError, match="25"):
            load_german_credit(path)

    def test_label_range_validated(self, tmp_path):
        path = tmp_path / "badlabel.data-numeric"
        row = " ".join(["1"] * 24)
        path.write_text("\n".join(f"{row} 3" for _ in range(1000)) + "\n")
        with pytest.raises(DataFormatError, match="label"):
            load_german_credit(path)
