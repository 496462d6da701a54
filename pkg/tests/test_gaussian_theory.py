import math

import numpy as np
import pytest

from mces.exceptions import ContractViolationError
from mces.gaussian_theory import (
    SpectralSystem,
    analytic_flow,
    conditional_covariance,
    conditional_law_1d,
    esjd_1d,
    log_det_conditional_cov,
    optimal_time_ce,
    optimal_time_esjd,
    random_commuting_pair,
)
from mces.hamiltonian import MassMatrix, PhasePoint, leapfrog, sample_momentum
from mces.models import GaussianTarget


def standard_1d():
    return GaussianTarget(np.zeros(1), np.eye(1)), MassMatrix.identity(1)


class TestSpectralSystem:
    def test_diagonalizes_random_commuting_pair(self, rng):
        sigma, m = random_commuting_pair(rng, 4)
        sys_ = SpectralSystem.build(sigma, m)
        a = np.linalg.solve(m, np.linalg.inv(sigma))
        assert np.abs(a @ sys_.modes - sys_.modes * sys_.rates).max() <= 1e-8
        assert np.all(sys_.rates > 0)

    def test_degenerate_sigma_block_refinement(self):
        # Sigma = I leaves the basis free; the mass matrix must pin it
        sigma = np.eye(3)
        m = np.diag([1.0, 4.0, 0.25])
        sys_ = SpectralSystem.build(sigma, m)
        assert np.allclose(np.sort(sys_.mass_eigs), [0.25, 1.0, 4.0])
        assert np.abs(sys_.modes.T @ m @ sys_.modes - np.diag(sys_.mass_eigs)).max() <= 1e-10

    def test_inverse_mass_gives_unit_rates(self, rng):
        sigma, _ = random_commuting_pair(rng, 3)
        sys_ = SpectralSystem.build(sigma, np.linalg.inv(sigma))
        assert np.allclose(sys_.rates, 1.0, atol=1e-8)

    def test_rejects_non_commuting(self, rng):
        sigma = np.diag([1.0, 4.0])
        m = np.array([[1.0, 0.5], [0.5, 1.0]])
        with pytest.raises(ContractViolationError):
            SpectralSystem.build(sigma, m)


class TestAnalyticFlow:
    def test_time_zero_is_identity(self, rng):
        sigma, m = random_commuting_pair(rng, 3)
        target = GaussianTarget(np.zeros(3), sigma)
        mass = MassMatrix(m)
        phase = PhasePoint(rng.standard_normal(3), rng.standard_normal(3))
        end = analytic_flow(target, mass, phase, 0.0)
        assert np.abs(end.x - phase.x).max() <= 1e-14
        assert np.abs(end.p - phase.p).max() <= 1e-14

    def test_half_period_flip(self):
        target, mass = standard_1d()
        end = analytic_flow(target, mass, PhasePoint(np.ones(1), np.zeros(1)), math.pi)
        assert end.x[0] == pytest.approx(-1.0, abs=1e-12)
        assert end.p[0] == pytest.approx(0.0, abs=1e-12)

    def test_matches_fine_leapfrog(self, rng):
        sigma, m = random_commuting_pair(rng, 4)
        target = GaussianTarget(np.zeros(4), sigma)
        mass = MassMatrix(m)
        x0 = rng.standard_normal(4)
        p0 = sample_momentum(mass, rng)
        exact = analytic_flow(target, mass, PhasePoint(x0, p0), 0.7)
        steps = 7000
        num = leapfrog(x0, p0, mass, target, 0.7 / steps, steps)
        assert np.abs(exact.x - num.x).max() <= 1e-6
        assert np.abs(exact.p - num.p).max() <= 1e-6

    def test_nonzero_mean_centering(self, rng):
        mean = np.array([2.0, -1.0])
        target = GaussianTarget(mean, np.diag([1.0, 1.0]))
        mass = MassMatrix.identity(2)
        end = analytic_flow(target, mass, PhasePoint(mean + 1.0, np.zeros(2)), math.pi)
        assert np.allclose(end.x, mean - 1.0, atol=1e-12)

    def test_rejects_negative_time(self):
        target, mass = standard_1d()
        with pytest.raises(ContractViolationError):
            analytic_flow(target, mass, PhasePoint(np.ones(1), np.zeros(1)), -0.1)

    def test_rejects_non_commuting_mass(self):
        target = GaussianTarget(np.zeros(2), np.diag([1.0, 4.0]))
        mass = MassMatrix(np.array([[1.0, 0.5], [0.5, 1.0]]))
        with pytest.raises(ContractViolationError):
            analytic_flow(target, mass, PhasePoint(np.ones(2), np.zeros(2)), 1.0)


class TestConditionalCovariance:
    def test_identity_quarter_period(self):
        target = GaussianTarget(np.zeros(2), np.eye(2))
        mass = MassMatrix.identity(2)
        assert np.allclose(conditional_covariance(target, mass, math.pi / 2), np.eye(2))

    def test_identity_half_period_degenerates(self):
        target = GaussianTarget(np.zeros(2), np.eye(2))
        mass = MassMatrix.identity(2)
        assert np.abs(conditional_covariance(target, mass, math.pi)).max() <= 1e-12

    def test_monte_carlo_oracle(self, rng):
        sigma, m = random_commuting_pair(rng, 3)
        target = GaussianTarget(np.zeros(3), sigma)
        mass = MassMatrix(m)
        system = SpectralSystem.build(sigma, m)
        x0 = rng.standard_normal(3)
        draws = 100000
        ends = np.empty((draws, 3))
        for i in range(draws):
            phase = PhasePoint(x0, sample_momentum(mass, rng))
            ends[i] = analytic_flow(target, mass, phase, 1.0, system=system).x
        closed = conditional_covariance(target, mass, 1.0, system=system)
        gap = np.linalg.norm(np.cov(ends.T) - closed) / np.linalg.norm(closed)
        assert gap <= 0.05

    def test_optimal_pair_returns_target_covariance(self, rng):
        sigma, _ = random_commuting_pair(rng, 4)
        target = GaussianTarget(np.zeros(4), sigma)
        mass = MassMatrix.from_covariance(sigma)
        cov = conditional_covariance(target, mass, math.pi / 2)
        assert np.abs(cov - sigma).max() <= 1e-8


class TestLogDetObjective:
    def test_identity_values(self):
        target = GaussianTarget(np.zeros(2), np.eye(2))
        mass = MassMatrix.identity(2)
        assert log_det_conditional_cov(target, mass, math.pi / 2) == pytest.approx(0.0, abs=1e-12)
        assert log_det_conditional_cov(target, mass, math.pi) == -math.inf

    def test_grid_argmax_at_quarter_period(self):
        target = GaussianTarget(np.zeros(2), np.diag([1.0, 4.0]))
        mass = MassMatrix.from_covariance(target.covariance)
        grid = np.linspace(0.0, math.pi, 2001)[1:]
        values = [log_det_conditional_cov(target, mass, t) for t in grid]
        t_star = grid[int(np.argmax(values))]
        assert abs(t_star - math.pi / 2) <= grid[1] - grid[0]

    def test_periodic_for_unit_rates(self, rng):
        sigma, _ = random_commuting_pair(rng, 3)
        target = GaussianTarget(np.zeros(3), sigma)
        mass = MassMatrix.from_covariance(sigma)
        for t in (0.4, 1.0, 1.3):
            a = log_det_conditional_cov(target, mass, t)
            b = log_det_conditional_cov(target, mass, t + 2 * math.pi)
            assert a == pytest.approx(b, abs=1e-9)


class TestOneDimensionalFormulas:
    def test_optimal_times(self):
        assert optimal_time_ce(1.0, 1.0) == math.pi / 2
        assert optimal_time_esjd(1.0, 1.0) == math.pi
        assert optimal_time_ce(4.0, 1.0) == pytest.approx(math.pi)
        assert optimal_time_ce(1.0, 4.0) == pytest.approx(math.pi)
        assert optimal_time_esjd(0.25, 1.0) == pytest.approx(math.pi / 2)

    def test_jump_optimal_proposal_is_a_flip(self):
        target, mass = standard_1d()
        t_star = optimal_time_esjd(1.0, 1.0)
        for x0 in (1.0, -0.4, 2.5):
            end = analytic_flow(target, mass, PhasePoint(np.array([x0]), np.zeros(1)), t_star)
            assert end.x[0] == pytest.approx(-x0, abs=1e-12)

    def test_conditional_law_examples(self):
        law = conditional_law_1d(1.0, 1.0, 0.0, 3.0)
        assert law.mean == 3.0 and law.variance == 0.0
        law = conditional_law_1d(1.0, 1.0, math.pi / 2, 1.0)
        assert law.mean == pytest.approx(0.0, abs=1e-12)
        assert law.variance == pytest.approx(1.0)
        law = conditional_law_1d(1.0, 1.0, math.pi / 4, 2.0)
        assert law.mean == pytest.approx(math.sqrt(2.0))
        assert law.variance == pytest.approx(0.5)

    def test_esjd_examples(self):
        assert esjd_1d(1.0, 1.0, 0.0) == 0.0
        assert esjd_1d(1.0, 1.0, math.pi) == pytest.approx(4.0)
        assert esjd_1d(1.0, 1.0, math.pi / 2) == pytest.approx(2.0)

    def test_validation(self):
        with pytest.raises(ContractViolationError):
            optimal_time_ce(0.0, 1.0)
        with pytest.raises(ContractViolationError):
            esjd_1d(1.0, -2.0, 0.5)
