"""Closed-form Hamiltonian flow for Gaussian targets and the tuning objectives.

For a Gaussian target with covariance ``Sigma`` and a mass matrix ``M``
commuting with it, the flow decouples into independent oscillators along
a shared orthogonal eigenbasis with angular frequencies sqrt(lambda_i),
where the lambda_i are the eigenvalues of M^-1 Sigma^-1. This module
exposes the exact flow, the covariance of the flow endpoint given the
start point, its log-determinant (the conditional-entropy objective for
proposal tuning), and the one-dimensional optimal integration times under
the conditional-entropy and expected-squared-jump criteria.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractViolationError, NumericalError
from .hamiltonian import PhasePoint

__all__ = [
    "SpectralSystem",
    "ConditionalLaw1D",
    "analytic_flow",
    "conditional_covariance",
    "log_det_conditional_cov",
    "optimal_time_ce",
    "optimal_time_esjd",
    "conditional_law_1d",
    "esjd_1d",
    "random_commuting_pair",
]

COMMUTATION_RTOL = 1e-8
# |sin| below this is treated as an exact zero of the proposal variance
DEGENERATE_SIN = 1e-12


def _check_commuting(sigma, mass_matrix):
    prod = mass_matrix @ sigma
    resid = np.linalg.norm(prod - sigma @ mass_matrix)
    if resid > COMMUTATION_RTOL * max(np.linalg.norm(prod), 1e-300):
        raise ContractViolationError(
            f"mass matrix does not commute with the target covariance "
            f"(relative residual {resid / max(np.linalg.norm(prod), 1e-300):.2e})"
        )


@dataclass(frozen=True)
class SpectralSystem:
    """Joint eigenstructure of a commuting (Sigma, M) pair.

    ``modes`` has orthonormal columns diagonalizing both matrices;
    ``rates`` are the eigenvalues of M^-1 Sigma^-1 in that basis, and
    ``sigma_eigs``/``mass_eigs`` the matching eigenvalues of Sigma and M.
    """

    modes: np.ndarray
    rates: np.ndarray
    sigma_eigs: np.ndarray
    mass_eigs: np.ndarray

    @classmethod
    def build(cls, sigma, mass_matrix):
        sigma = np.asarray(sigma, dtype=np.float64)
        mass_matrix = np.asarray(mass_matrix, dtype=np.float64)
        _check_commuting(sigma, mass_matrix)
        try:
            sigma_eigs, modes = np.linalg.eigh(sigma)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigendecomposition failed: {exc}") from exc
        if sigma_eigs[0] <= 0:
            raise ContractViolationError("target covariance must be positive definite")
        # Within (numerically) repeated eigenvalues of Sigma the basis is
        # arbitrary, so rotate each such block to diagonalize M as well.
        b = modes.T @ mass_matrix @ modes
        tol = 1e-8 * max(abs(sigma_eigs[0]), abs(sigma_eigs[-1]))
        start = 0
        for stop in range(1, sigma_eigs.size + 1):
            if stop == sigma_eigs.size or sigma_eigs[stop] - sigma_eigs[stop - 1] > tol:
                if stop - start > 1:
                    _, rot = np.linalg.eigh(b[start:stop, start:stop])
                    modes[:, start:stop] = modes[:, start:stop] @ rot
                start = stop
        mass_eigs = np.einsum("ij,jk,ki->i", modes.T, mass_matrix, modes)
        if np.any(mass_eigs <= 0):
            raise ContractViolationError("mass matrix must be positive definite")
        rates = 1.0 / (mass_eigs * sigma_eigs)
        return cls(modes=modes, rates=rates, sigma_eigs=sigma_eigs, mass_eigs=mass_eigs)

    @property
    def dim(self):
        return self.rates.size


def _system(target, mass, system):
    if system is None:
        return SpectralSystem.build(target.covariance, mass.matrix)
    return system


def analytic_flow(target, mass, phase, t, system=None):
    """Exact Hamiltonian flow of a Gaussian target for time t.

    Requires the mass matrix to commute with the target covariance (hard
    error otherwise). A nonzero target mean is handled by centering: the
    flow acts on x - mean. Pass a prebuilt ``system`` to amortize the
    eigendecomposition over many calls.
    """
    if t < 0:
        raise ContractViolationError("flow time must be non-negative")
    sys_ = _system(target, mass, system)
    if phase.dim != sys_.dim:
        raise ContractViolationError("phase point dimension does not match the system")
    omega = np.sqrt(sys_.rates)
    a = sys_.modes.T @ (phase.x - target.mean)
    b = (sys_.modes.T @ phase.p) / (sys_.mass_eigs * omega)
    c, s = np.cos(omega * t), np.sin(omega * t)
    x_t = sys_.modes @ (c * a + s * b) + target.mean
    p_t = sys_.modes @ (sys_.mass_eigs * omega * (c * b - s * a))
    return PhasePoint(x_t, p_t)


def conditional_covariance(target, mass, total_time, system=None):
    """Covariance of the flow endpoint x_T given x_0, over p_0 ~ N(0, M)."""
    sys_ = _system(target, mass, system)
    sin_t = np.sin(np.sqrt(sys_.rates) * total_time)
    middle = sys_.sigma_eigs * sin_t**2
    cov = (sys_.modes * middle) @ sys_.modes.T
    return (cov + cov.T) / 2.0


def log_det_conditional_cov(target, mass, total_time, system=None):
    """log det Cov(x_T | x_0), the conditional-entropy tuning objective.

    Equals sum_i [log sigma_eig_i + log sin^2(sqrt(lambda_i) T)]; returns
    -inf when any oscillator lands on a node (sin = 0), i.e. a degenerate
    deterministic proposal in that direction.
    """
    sys_ = _system(target, mass, system)
    sin_t = np.sin(np.sqrt(sys_.rates) * total_time)
    if np.any(np.abs(sin_t) < DEGENERATE_SIN):
        return -math.inf
    return float(np.sum(np.log(sys_.sigma_eigs) + 2.0 * np.log(np.abs(sin_t))))


def _check_km(k, m):
    if k <= 0 or m <= 0:
        raise ContractViolationError("k and m must be positive")


def optimal_time_ce(k, m):
    """Conditional-entropy-optimal integration time (pi/2) sqrt(k m) for N(0, k)."""
    _check_km(k, m)
    return 0.5 * math.pi * math.sqrt(k * m)


def optimal_time_esjd(k, m):
    """Expected-squared-jump-optimal integration time pi sqrt(k m) for N(0, k).

    The associated proposal is the deterministic flip x_T = -x_0, which
    is why the jump-distance criterion degenerates on Gaussian targets.
    """
    _check_km(k, m)
    return math.pi * math.sqrt(k * m)


@dataclass(frozen=True)
class ConditionalLaw1D:
    """The Gaussian law of x_T given x_0 for the 1-d oscillator."""

    mean: float
    variance: float


def conditional_law_1d(k, m, total_time, x0):
    """x_T | x_0 ~ N(x0 cos(wT), k sin^2(wT)) with w = 1/sqrt(km).

    At the conditional-entropy-optimal time the law is N(0, k),
    independent of the start point.
    """
    _check_km(k, m)
    angle = total_time / math.sqrt(k * m)
    return ConditionalLaw1D(
        mean=x0 * math.cos(angle), variance=k * math.sin(angle) ** 2
    )


def esjd_1d(k, m, total_time):
    """E ||x_T - x_0||^2 = 2k (1 - cos(wT)); maximized (value 4k) at T = pi sqrt(km)."""
    _check_km(k, m)
    return 2.0 * k * (1.0 - math.cos(total_time / math.sqrt(k * m)))


def random_commuting_pair(rng, dim, eig_low=0.3, eig_high=3.0):
    """A random (Sigma, M) pair sharing a random orthogonal eigenbasis."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    sigma_eigs = rng.uniform(eig_low, eig_high, size=dim)
    mass_eigs = rng.uniform(eig_low, eig_high, size=dim)
    sigma = (q * sigma_eigs) @ q.T
    mass = (q * mass_eigs) @ q.T
    return (sigma + sigma.T) / 2.0, (mass + mass.T) / 2.0
