"""The HMC Metropolis kernel and the adaptive maximum-conditional-entropy sampler.

The adaptive run has three phases: a fixed-parameter HMC warmstart, an
adaptation window in which the mass matrix tracks the inverse of the
running sample covariance and the leapfrog step count L grows by a factor
rho until acceptance-per-step stops improving, and a frozen phase with
all kernel parameters fixed. The integration time is held at T = pi/2,
the conditional-entropy-optimal value for the adapted mass matrix.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _purepy
from ._backend import core
from .exceptions import ContractViolationError, NumericalError
from .hamiltonian import MassMatrix

__all__ = [
    "MCESConfig",
    "RunningCovariance",
    "Trace",
    "update_covariance",
    "hmc_step",
    "run_standard_hmc",
    "mces_run",
    "save_trace",
    "load_trace",
    "write_snapshot",
    "read_snapshot",
    "frozen_start",
]

# trajectories with |delta H| beyond this are treated as divergent rejections
DIVERGENCE_ENERGY = 1000.0

# fixed warmstart kernel: M = I, T = pi/2 over 20 steps (epsilon = pi/40)
WARMSTART_STEPS = 20
WARMSTART_TIME = math.pi / 2.0


@dataclass(frozen=True)
class MCESConfig:
    """Algorithm parameters; defaults follow the standard tuning table."""

    acc_min: float = 0.60
    n0: int = 1000
    l0: int = 1
    l_max: int = 60
    n_max: int = 10000
    n_m: int = 2000
    n_l: int = 200
    rho: float = 1.2
    i_max: int = 1
    total_time: float = math.pi / 2.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.acc_min < 1.0:
            raise ContractViolationError("acc_min must lie in (0, 1)")
        if not 1 <= self.n0 <= self.n_m <= self.n_max:
            raise ContractViolationError("need 1 <= n0 <= n_m <= n_max")
        if not 1 <= self.l0 <= self.l_max:
            raise ContractViolationError("need 1 <= l0 <= l_max")
        if self.n_l < 1:
            raise ContractViolationError("n_l must be at least 1")
        if self.rho <= 1.0:
            raise ContractViolationError("rho must exceed 1")
        if self.i_max < 1:
            raise ContractViolationError("i_max must be at least 1")
        if self.total_time <= 0.0:
            raise ContractViolationError("total_time must be positive")

    _SNAPSHOT_FIELDS = (
        ("L0", "l0", int),
        ("L_max", "l_max", int),
        ("rho", "rho", float),
        ("Acc_min", "acc_min", float),
        ("N_max", "n_max", int),
        ("N_L", "n_l", int),
        ("N_M", "n_m", int),
        ("N0", "n0", int),
        ("I_max", "i_max", int),
        ("T", "total_time", float),
        ("seed", "seed", int),
    )

    def to_snapshot(self):
        """Flat key/value mapping using the conventional parameter symbols."""
        return {key: repr(getattr(self, attr)) for key, attr, _ in self._SNAPSHOT_FIELDS}

    @classmethod
    def from_snapshot(cls, mapping):
        kwargs = {}
        for key, attr, cast in cls._SNAPSHOT_FIELDS:
            if key in mapping:
                kwargs[attr] = cast(float(mapping[key])) if cast is int else cast(mapping[key])
        return cls(**kwargs)

    def with_overrides(self, **kwargs):
        return replace(self, **kwargs)


def write_snapshot(mapping, path):
    """Write a flat ``key = value`` file (one pair per line, # comments)."""
    lines = [f"{key} = {value}" for key, value in mapping.items()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path):
    mapping = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ContractViolationError(f"{path}: malformed snapshot line: {line!r}")
            key, _, value = line.partition("=")
            mapping[key.strip()] = value.strip()
    return mapping


class RunningCovariance:
    """Streaming sample mean/covariance (unbiased, n-1 divisor).

    After any number of pushes the state matches a batch recomputation
    over everything seen. ``regularization`` is the scale-aware Tikhonov
    floor added to the diagonal before the covariance is inverted.
    """

    def __init__(self, dim):
        self.count = 0
        self.mean = np.zeros(dim)
        self._m2 = np.zeros((dim, dim))

    @property
    def dim(self):
        return self.mean.size

    def push(self, x):
        x = np.asarray(x, dtype=np.float64)
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += np.outer(delta, x - self.mean)

    def push_batch(self, batch):
        for row in np.atleast_2d(np.asarray(batch, dtype=np.float64)):
            self.push(row)

    @property
    def covariance(self):
        if self.count < 2:
            return np.zeros((self.dim, self.dim))
        cov = self._m2 / (self.count - 1)
        return (cov + cov.T) / 2.0

    @property
    def regularization(self):
        return 1e-6 * (np.trace(self.covariance) / self.dim + 1.0)

    def regularized(self):
        """covariance + regularization * I, safe to invert."""
        return self.covariance + self.regularization * np.eye(self.dim)

    def copy(self):
        out = RunningCovariance(self.dim)
        out.count = self.count
        out.mean = self.mean.copy()
        out._m2 = self._m2.copy()
        return out


def update_covariance(rc, batch):
    """Fold a batch of samples into a copy of ``rc`` (the running state)."""
    out = rc.copy()
    out.push_batch(batch)
    return out


def _mass_from_running_cov(rc):
    try:
        return MassMatrix.from_covariance(rc.regularized())
    except NumericalError:
        boosted = rc.covariance + 100.0 * rc.regularization * np.eye(rc.dim)
        try:
            return MassMatrix.from_covariance(boosted)
        except NumericalError as exc:
            raise NumericalError(
                "sample covariance inversion failed even after boosted regularization"
            ) from exc


class StepCountSchedule:
    """State machine growing the leapfrog step count L.

    While growing, L is multiplied by rho (at least +1, capped at l_max)
    whenever the window acceptance either has not yet reached acc_min or
    improved the acceptance-per-step ratio Acc/L. Once acceptance is above
    acc_min and Acc/L fails to improve i_max consecutive times (or L hits
    l_max), growth freezes and L rolls back to the best recorded value.
    """

    def __init__(self, acc_min, l0, l_max, rho, i_max):
        self.acc_min = acc_min
        self.l_max = l_max
        self.rho = rho
        self.i_max = i_max
        self.l = l0
        self.l_old = l0
        self.acc_old = 0.0
        self.growing = True
        self.fail_count = 0

    def _grown(self):
        return min(max(self.l + 1, round(self.rho * self.l)), self.l_max)

    def observe(self, acc):
        if not self.growing:
            return
        if self.l == self.l_max:
            self.growing = False
            if acc / self.l < self.acc_old / self.l_old:
                self.l = self.l_old
            return
        if acc > self.acc_min and acc / self.l < self.acc_old / self.l_old:
            self.fail_count += 1
            if self.fail_count >= self.i_max:
                self.growing = False
                self.l = self.l_old
            return
        self.acc_old = acc
        self.l_old = self.l
        self.fail_count = 0
        self.l = self._grown()


@dataclass(frozen=True)
class Trace:
    """Immutable record of a finished chain."""

    samples: np.ndarray
    accepted: np.ndarray
    l_history: np.ndarray
    energy_errors: np.ndarray
    config_snapshot: Optional[dict] = None
    final_mass: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        n = self.samples.shape[0]
        if not (self.accepted.size == self.l_history.size == self.energy_errors.size == n):
            raise ContractViolationError("trace arrays must have one row per iteration")
        for arr in (self.samples, self.accepted, self.l_history, self.energy_errors):
            arr.setflags(write=False)
        if self.final_mass is not None:
            self.final_mass.setflags(write=False)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def dim(self):
        return self.samples.shape[1]

    @property
    def diverged(self):
        """Iterations rejected by the divergence guard."""
        bad = ~np.isfinite(self.energy_errors)
        return bad | (np.abs(np.where(bad, 0.0, self.energy_errors)) > DIVERGENCE_ENERGY)

    def acceptance_rate(self, start=0, stop=None):
        return float(self.accepted[start:stop].mean())


def frozen_start(trace, n_m=None):
    """First iteration index from which the kernel parameters stay fixed.

    The mass matrix is frozen from the adaptation horizon N_M on; L is
    frozen after its last recorded change.
    """
    if n_m is None:
        if trace.config_snapshot is None or "N_M" not in trace.config_snapshot:
            raise ContractViolationError("n_m not given and absent from the trace snapshot")
        n_m = int(float(trace.config_snapshot["N_M"]))
    l_hist = trace.l_history
    changes = np.nonzero(l_hist[1:] != l_hist[:-1])[0]
    last_change = int(changes[-1]) + 1 if changes.size else 0
    return min(max(n_m, last_change), len(trace))


def _make_eval(model):
    """(potential, trajectory) pair routed through the active backend."""
    kernel = model.compiled_kernel()
    if kernel is not None:
        def trajectory(x, p, mass, eps, n_steps):
            return core.leapfrog_trajectory(kernel, x, p, mass.chol, eps, n_steps)

        return kernel.potential, trajectory

    def trajectory(x, p, mass, eps, n_steps):
        return _purepy.leapfrog_trajectory(model._gradient, mass.solve, x, p, eps, n_steps)

    return model._potential, trajectory


def _metropolis_step(potential, trajectory, x, u_cur, mass, eps, n_steps, rng):
    """One proposal/accept cycle; consumes dim+1 random variates always.

    Returns (x_next, u_next, accepted, delta_h). Divergent trajectories
    (non-finite state or |delta H| > DIVERGENCE_ENERGY) count as
    rejections with delta_h = +inf when the energy is not computable.
    """
    p0 = mass.sample(rng)
    k0 = mass.kinetic(p0)
    # overflow to inf in a wild trajectory is the guarded rejection path
    with np.errstate(over="ignore", invalid="ignore"):
        x1, p1, diverged = trajectory(x, p0, mass, eps, n_steps)
        u = rng.uniform()
        if diverged:
            return x, u_cur, False, math.inf
        u1 = float(potential(x1))
        dh = (u1 + mass.kinetic(p1)) - (u_cur + k0)
    if not math.isfinite(dh):
        return x, u_cur, False, math.inf
    if abs(dh) > DIVERGENCE_ENERGY:
        return x, u_cur, False, dh
    if dh <= 0.0 or u < math.exp(-dh):
        return x1, u1, True, dh
    return x, u_cur, False, dh


def hmc_step(x, model, mass, epsilon, n_steps, rng):
    """One HMC transition; returns (x_next, accepted, delta_h)."""
    if epsilon <= 0 or n_steps < 1:
        raise ContractViolationError("epsilon must be positive and n_steps >= 1")
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (model.dim,) or mass.dim != model.dim:
        raise ContractViolationError("state, model and mass dimensions disagree")
    potential, trajectory = _make_eval(model)
    x_next, _, accepted, dh = _metropolis_step(
        potential, trajectory, x, float(potential(x)), mass, epsilon, n_steps, rng
    )
    return x_next, accepted, dh


def run_standard_hmc(model, x_init, mass, epsilon, n_steps, n_samples, rng):
    """Fixed-parameter HMC chain of ``n_samples`` transitions."""
    if n_samples < 1:
        raise ContractViolationError("n_samples must be at least 1")
    x = np.ascontiguousarray(x_init, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ContractViolationError("x_init dimension does not match the model")
    potential, trajectory = _make_eval(model)
    samples = np.empty((n_samples, model.dim))
    accepted = np.zeros(n_samples, dtype=bool)
    denergy = np.empty(n_samples)
    u_cur = float(potential(x))
    for t in range(n_samples):
        x, u_cur, acc, dh = _metropolis_step(
            potential, trajectory, x, u_cur, mass, epsilon, n_steps, rng
        )
        samples[t] = x
        accepted[t] = acc
        denergy[t] = dh
    snapshot = {
        "sampler": "standard_hmc",
        "epsilon": repr(float(epsilon)),
        "L": repr(int(n_steps)),
        "N": repr(int(n_samples)),
    }
    return Trace(
        samples=samples,
        accepted=accepted,
        l_history=np.full(n_samples, n_steps, dtype=np.int64),
        energy_errors=denergy,
        config_snapshot=snapshot,
        final_mass=np.array(mass.matrix),
    )


def mces_run(model, config, x_init, rng=None):
    """The full adaptive run; deterministic given (config, seed).

    The chain has ``config.n_max`` samples in total: ``config.n0`` from
    the fixed warmstart kernel followed by the adaptive phase. Monitoring
    fires whenever the 1-based sample count is a multiple of ``n_l``;
    each monitoring event folds the samples since the previous event into
    the running covariance (while the count is below ``n_m``, gated on
    the first acceptance) and feeds the window acceptance rate to the
    step-count schedule.
    """
    if not isinstance(config, MCESConfig):
        raise ContractViolationError("config must be an MCESConfig")
    x = np.ascontiguousarray(x_init, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ContractViolationError("x_init dimension does not match the model")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    potential, trajectory = _make_eval(model)
    n_total = config.n_max
    samples = np.empty((n_total, model.dim))
    accepted = np.zeros(n_total, dtype=bool)
    l_history = np.empty(n_total, dtype=np.int64)
    denergy = np.empty(n_total)

    # phase 1: standard-HMC warmstart with the fixed conservative kernel
    warm_mass = MassMatrix.identity(model.dim)
    warm_eps = WARMSTART_TIME / WARMSTART_STEPS
    u_cur = float(potential(x))
    for t in range(config.n0):
        x, u_cur, acc, dh = _metropolis_step(
            potential, trajectory, x, u_cur, warm_mass, warm_eps, WARMSTART_STEPS, rng
        )
        samples[t] = x
        accepted[t] = acc
        l_history[t] = WARMSTART_STEPS
        denergy[t] = dh

    running = RunningCovariance(model.dim)
    running.push_batch(samples[: config.n0])
    mass = _mass_from_running_cov(running)
    schedule = StepCountSchedule(config.acc_min, config.l0, config.l_max, config.rho, config.i_max)
    mass_updated = False  # I_M: has any adaptive mass update happened yet
    window_start = config.n0

    for t in range(config.n0, n_total):
        eps = config.total_time / schedule.l
        l_history[t] = schedule.l
        x, u_cur, acc, dh = _metropolis_step(
            potential, trajectory, x, u_cur, mass, eps, schedule.l, rng
        )
        samples[t] = x
        accepted[t] = acc
        denergy[t] = dh

        count = t + 1  # 1-based sample count
        if count % config.n_l == 0:
            window_acc = float(accepted[window_start:count].mean())
            if count < config.n_m and (mass_updated or window_acc > 0.0):
                running.push_batch(samples[running.count:count])
                mass = _mass_from_running_cov(running)
                mass_updated = True
            schedule.observe(window_acc)
            window_start = count

    snapshot = config.to_snapshot()
    return Trace(
        samples=samples,
        accepted=accepted,
        l_history=l_history,
        energy_errors=denergy,
        config_snapshot=snapshot,
        final_mass=np.array(mass.matrix),
    )


def save_trace(trace, path):
    """Write the chain as CSV: iter,accepted,L,delta_H,x_0,...,x_{n-1}."""
    header = "iter,accepted,L,delta_H," + ",".join(f"x_{i}" for i in range(trace.dim))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for t in range(len(trace)):
            row = trace.samples[t]
            fh.write(
                f"{t + 1},{int(trace.accepted[t])},{int(trace.l_history[t])},"
                f"{trace.energy_errors[t]:.17g},"
                + ",".join(f"{v:.17g}" for v in row)
                + "\n"
            )


def load_trace(path, config_snapshot=None, final_mass=None):
    """Read a trace CSV written by :func:`save_trace`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[:4] != ["iter", "accepted", "L", "delta_H"]:
            raise ContractViolationError(f"{path}: unexpected trace header {header[:4]}")
        dim = len(header) - 4
        rows = [line.strip().split(",") for line in fh if line.strip()]
    n = len(rows)
    samples = np.empty((n, dim))
    accepted = np.zeros(n, dtype=bool)
    l_history = np.empty(n, dtype=np.int64)
    denergy = np.empty(n)
    for t, parts in enumerate(rows):
        accepted[t] = parts[1] == "1"
        l_history[t] = int(parts[2])
        denergy[t] = float(parts[3])
        samples[t] = [float(v) for v in parts[4:]]
    return Trace(
        samples=samples,
        accepted=accepted,
        l_history=l_history,
        energy_errors=denergy,
        config_snapshot=config_snapshot,
        final_mass=final_mass,
    )
