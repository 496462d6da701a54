import math

import numpy as np
import pytest
import scipy.stats

from mces.exceptions import ContractViolationError
from mces.hamiltonian import MassMatrix
from mces.models import GaussianTarget, RosenbrockTarget
from mces.sampler import (
    MCESConfig,
    RunningCovariance,
    StepCountSchedule,
    Trace,
    frozen_start,
    hmc_step,
    load_trace,
    mces_run,
    read_snapshot,
    run_standard_hmc,
    save_trace,
    update_covariance,
    write_snapshot,
)


class TestMCESConfig:
    def test_defaults_match_standard_table(self):
        cfg = MCESConfig()
        assert (cfg.l0, cfg.l_max, cfg.rho, cfg.acc_min) == (1, 60, 1.2, 0.60)
        assert (cfg.n_max, cfg.n_l, cfg.n_m, cfg.n0, cfg.i_max) == (10000, 200, 2000, 1000, 1)
        assert cfg.total_time == pytest.approx(math.pi / 2)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(acc_min=0.0),
            dict(n0=3000),            # n0 > n_m
            dict(n_m=20000),          # n_m > n_max
            dict(l0=70),              # l0 > l_max
            dict(rho=1.0),
            dict(i_max=0),
            dict(total_time=0.0),
            dict(n_l=0),
        ],
    )
    def test_invariants_enforced(self, kwargs):
        with pytest.raises(ContractViolationError):
            MCESConfig(**kwargs)

    def test_snapshot_round_trip(self):
        cfg = MCESConfig(acc_min=0.4, l_max=100, seed=17)
        assert MCESConfig.from_snapshot(cfg.to_snapshot()) == cfg

    def test_snapshot_file_round_trip(self, tmp_path):
        cfg = MCESConfig(rho=1.5)
        path = tmp_path / "config.snapshot"
        write_snapshot(cfg.to_snapshot(), path)
        assert MCESConfig.from_snapshot(read_snapshot(path)) == cfg

    def test_snapshot_uses_conventional_symbols(self):
        keys = set(MCESConfig().to_snapshot())
        assert {"L0", "L_max", "rho", "Acc_min", "N_max", "N_L", "N_M", "N0", "I_max", "T"} <= keys


class TestRunningCovariance:
    def test_two_point_example(self):
        rc = RunningCovariance(2)
        rc.push_batch(np.array([[0.0, 0.0], [2.0, 0.0]]))
        assert np.allclose(rc.mean, [1.0, 0.0])
        assert np.allclose(rc.covariance, [[2.0, 0.0], [0.0, 0.0]])

    def test_single_sample_is_degenerate(self):
        rc = RunningCovariance(3)
        rc.push(np.ones(3))
        assert np.all(rc.covariance == 0.0)
        assert np.linalg.eigvalsh(rc.regularized()).min() > 0

    def test_matches_batch_recomputation(self, rng):
        samples = rng.standard_normal((1000, 4)) @ np.diag([1.0, 3.0, 0.2, 1.5])
        rc = RunningCovariance(4)
        rc.push_batch(samples)
        assert np.abs(rc.mean - samples.mean(axis=0)).max() <= 1e-8
        assert np.abs(rc.covariance - np.cov(samples.T)).max() <= 1e-8

    def test_update_covariance_is_pure(self, rng):
        rc = RunningCovariance(2)
        rc.push_batch(rng.standard_normal((10, 2)))
        before = rc.covariance.copy()
        out = update_covariance(rc, rng.standard_normal((5, 2)))
        assert out.count == 15 and rc.count == 10
        assert np.array_equal(rc.covariance, before)

    def test_regularization_is_scale_aware(self, rng):
        rc = RunningCovariance(2)
        rc.push_batch(1000.0 * rng.standard_normal((50, 2)))
        assert rc.regularization > 1e-6 * np.trace(rc.covariance) / 2


class TestStepCountSchedule:
    def make(self, **kwargs):
        defaults = dict(acc_min=0.6, l0=1, l_max=60, rho=1.2, i_max=1)
        defaults.update(kwargs)
        return StepCountSchedule(**defaults)

    def test_growth_sequence(self):
        sched = self.make()
        seen = [sched.l]
        for _ in range(12):
            sched.observe(0.5)  # below acc_min: keep growing
            seen.append(sched.l)
        assert seen == [1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 14, 17, 20]
        assert all(b > a for a, b in zip(seen, seen[1:]))

    def test_growth_capped_at_l_max(self):
        sched = self.make(l_max=5)
        for _ in range(10):
            sched.observe(0.5)
            if not sched.growing:
                break
        assert sched.l <= 5

    def test_rollback_to_best_ratio(self):
        sched = self.make()
        sched.observe(0.7)   # record (0.7, 1), grow to 2
        assert sched.l == 2
        sched.observe(0.7)   # 0.35 < 0.7: single strike freezes and rolls back
        assert not sched.growing
        assert sched.l == 1

    def test_i_max_two_needs_two_strikes(self):
        sched = self.make(i_max=2)
        sched.observe(0.7)       # (0.7, 1) -> L = 2
        sched.observe(0.7)       # strike 1
        assert sched.growing and sched.l == 2
        sched.observe(0.65)      # strike 2: freeze, back to L = 1
        assert not sched.growing and sched.l == 1

    def test_strike_counter_resets(self):
        sched = self.make(i_max=2)
        sched.observe(0.65)      # record (0.65, 1) -> L = 2
        sched.observe(0.7)       # 0.35 < 0.65: strike 1
        assert sched.fail_count == 1
        sched.observe(0.3)       # below acc_min: re-record and reset strikes
        assert sched.fail_count == 0 and sched.growing
        sched.observe(0.7)       # 0.7/3 improves on 0.3/2: record and grow
        assert sched.growing and sched.l == 4

    def test_freeze_at_l_max_keeps_better_current(self):
        sched = self.make(l_max=2)
        sched.observe(0.3)       # record (0.3, 1) -> L = 2
        sched.observe(0.9)       # at l_max: 0.45 >= 0.3 so keep L = 2
        assert not sched.growing and sched.l == 2

    def test_freeze_at_l_max_rolls_back_when_worse(self):
        sched = self.make(l_max=2)
        sched.observe(0.9)       # record (0.9, 1) -> L = 2
        sched.observe(0.9)       # at l_max: 0.45 < 0.9 so back to L = 1
        assert not sched.growing and sched.l == 1

    def test_frozen_schedule_ignores_observations(self):
        sched = self.make()
        sched.observe(0.7)
        sched.observe(0.7)
        frozen_l = sched.l
        sched.observe(0.99)
        assert sched.l == frozen_l


class TestHMCStep:
    def test_small_step_high_acceptance(self, rng):
        model = GaussianTarget(np.zeros(1), np.eye(1))
        mass = MassMatrix.identity(1)
        x = np.array([0.0])
        hits = 0
        for _ in range(10000):
            x, accepted, _ = hmc_step(x, model, mass, 0.2, 8, rng)
            hits += accepted
        assert hits / 10000 > 0.9

    def test_rejection_keeps_state(self):
        model = GaussianTarget(np.zeros(1), np.eye(1))
        mass = MassMatrix.identity(1)
        rng = np.random.default_rng(0)
        x0 = np.array([30.0])
        # enormous stepsize: unstable trajectory, guard must reject
        x1, accepted, dh = hmc_step(x0, model, mass, 1e3, 50, rng)
        assert not accepted
        assert np.array_equal(x1, x0)
        assert not np.isfinite(dh) or abs(dh) > 1000

    def test_validates_dimensions(self):
        model = GaussianTarget(np.zeros(2), np.eye(2))
        with pytest.raises(ContractViolationError):
            hmc_step(np.zeros(3), model, MassMatrix.identity(2), 0.1, 2, np.random.default_rng(0))


class TestStandardHMC:
    def test_long_run_moments(self):
        model = GaussianTarget(np.zeros(2), np.eye(2))
        trace = run_standard_hmc(
            model, np.zeros(2), MassMatrix.identity(2),
            math.pi / 40, 20, 10000, np.random.default_rng(42),
        )
        cov = np.cov(trace.samples.T)
        assert np.abs(np.diag(cov) - 1.0).max() <= 0.10
        assert abs(cov[0, 1]) <= 0.10

    def test_single_step_trace(self):
        model = GaussianTarget(np.zeros(1), np.eye(1))
        trace = run_standard_hmc(
            model, np.zeros(1), MassMatrix.identity(1), 0.1, 2, 1, np.random.default_rng(0)
        )
        assert len(trace) == 1

    def test_same_seed_bit_identical(self):
        model = RosenbrockTarget(0.2)
        runs = [
            run_standard_hmc(model, np.zeros(2), MassMatrix.identity(2),
                             0.1, 5, 500, np.random.default_rng(9))
            for _ in range(2)
        ]
        assert np.array_equal(runs[0].samples, runs[1].samples)
        assert np.array_equal(runs[0].energy_errors, runs[1].energy_errors)


class TestMCESRun:
    def small_config(self, **kwargs):
        defaults = dict(n0=200, n_m=600, n_max=2000, n_l=100, seed=1)
        defaults.update(kwargs)
        return MCESConfig(**defaults)

    def test_deterministic(self):
        model = GaussianTarget(np.zeros(2), np.diag([4.0, 1.0]))
        cfg = self.small_config()
        a = mces_run(model, cfg, np.zeros(2))
        b = mces_run(model, cfg, np.zeros(2))
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.l_history, b.l_history)
        assert np.array_equal(a.final_mass, b.final_mass)

    def test_parameters_freeze(self):
        model = GaussianTarget(np.zeros(2), np.diag([4.0, 1.0]))
        trace = mces_run(model, self.small_config(), np.zeros(2))
        start = frozen_start(trace, 600)
        assert len(set(trace.l_history[start:].tolist())) == 1
        assert start <= len(trace)

    def test_warmstart_rows_use_fixed_kernel(self):
        model = GaussianTarget(np.zeros(2), np.eye(2))
        trace = mces_run(model, self.small_config(), np.zeros(2))
        assert np.all(trace.l_history[:200] == 20)
        assert trace.l_history[200] == 1

    def test_l_bounded_and_positive(self):
        model = RosenbrockTarget(0.1)
        cfg = self.small_config(l_max=7)
        trace = mces_run(model, cfg, np.zeros(2))
        assert trace.l_history.min() >= 1
        assert trace.l_history[200:].max() <= 7

    def test_frozen_phase_marginal_is_stationary(self):
        # with the adapted kernel frozen the chain must match the target law
        model = GaussianTarget(np.zeros(2), np.eye(2))
        cfg = MCESConfig(seed=3)
        trace = mces_run(model, cfg, np.array([1.0, 1.0]))
        start = frozen_start(trace, cfg.n_m)
        window = trace.samples[start:]
        result = scipy.stats.kstest(window[::10, 0], "norm")
        assert result.pvalue > 0.01

    def test_covariance_estimate_improves_with_samples(self, rng):
        # compare the warmstart-only estimate against the one at the last
        # adaptation instant, over seeded replicates
        sigma = np.diag([3.0, 0.5, 1.0])
        model = GaussianTarget(np.zeros(3), sigma)
        wins = 0
        for seed in range(20):
            cfg = MCESConfig(n0=200, n_m=1000, n_max=1000, n_l=100, seed=seed)
            trace = mces_run(model, cfg, rng.standard_normal(3))
            err0 = np.linalg.norm(np.cov(trace.samples[:200].T) - sigma)
            err1 = np.linalg.norm(np.cov(trace.samples[:900].T) - sigma)
            wins += err1 < err0
        assert wins >= 18

    def test_rejects_bad_inputs(self):
        model = GaussianTarget(np.zeros(2), np.eye(2))
        with pytest.raises(ContractViolationError):
            mces_run(model, self.small_config(), np.zeros(3))
        with pytest.raises(ContractViolationError):
            mces_run(model, "not a config", np.zeros(2))


class TestTraceIO:
    def test_round_trip_bit_exact(self, tmp_path):
        model = RosenbrockTarget(0.3)
        cfg = MCESConfig(n0=100, n_m=300, n_max=600, n_l=50, seed=5)
        trace = mces_run(model, cfg, np.zeros(2))
        path = tmp_path / "trace.csv"
        save_trace(trace, path)
        loaded = load_trace(path, config_snapshot=trace.config_snapshot,
                            final_mass=trace.final_mass)
        assert np.array_equal(loaded.samples, trace.samples)
        assert np.array_equal(loaded.accepted, trace.accepted)
        assert np.array_equal(loaded.l_history, trace.l_history)
        assert np.array_equal(loaded.energy_errors, trace.energy_errors)
        assert loaded.config_snapshot == trace.config_snapshot

    def test_round_trip_preserves_inf(self, tmp_path):
        trace = Trace(
            samples=np.array([[1.0], [2.0]]),
            accepted=np.array([True, False]),
            l_history=np.array([3, 3], dtype=np.int64),
            energy_errors=np.array([0.5, np.inf]),
        )
        path = tmp_path / "trace.csv"
        save_trace(trace, path)
        loaded = load_trace(path)
        assert np.array_equal(loaded.energy_errors, trace.energy_errors)
        assert loaded.diverged.tolist() == [False, True]

    def test_header_validated(self, tmp_path):
        path = tmp_path / "bogus.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(ContractViolationError):
            load_trace(path)

    def test_trace_is_immutable(self):
        model = GaussianTarget(np.zeros(1), np.eye(1))
        trace = run_standard_hmc(model, np.zeros(1), MassMatrix.identity(1),
                                 0.1, 2, 5, np.random.default_rng(0))
        with pytest.raises(ValueError):
            trace.samples[0, 0] = 99.0
