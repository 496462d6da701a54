"""Phase-space dynamics: mass-matrix algebra and the leapfrog integrator.

All mass-matrix operations go through one lower Cholesky factor computed
at construction; the hot paths apply cached triangular solves and never
form an explicit inverse.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg.blas import dtrsv

from . import _purepy
from ._backend import core
from .exceptions import ContractViolationError, DivergenceError, NumericalError

__all__ = [
    "PhasePoint",
    "MassMatrix",
    "LeapfrogConfig",
    "kinetic_energy",
    "total_energy",
    "sample_momentum",
    "leapfrog",
]


@dataclass(frozen=True)
class PhasePoint:
    """A position/momentum pair evolved by Hamiltonian dynamics."""

    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        p = np.ascontiguousarray(self.p, dtype=np.float64)
        if x.shape != p.shape or x.ndim != 1:
            raise ContractViolationError("x and p must be equal-length vectors")
        if not (np.isfinite(x).all() and np.isfinite(p).all()):
            raise ContractViolationError("phase point must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)

    @property
    def dim(self):
        return self.x.size


class MassMatrix:
    """Symmetric positive-definite momentum covariance M.

    Holds the lower Cholesky factor of M; sampling, kinetic energies and
    M^-1 products are all triangular-solve applications of that factor.
    """

    def __init__(self, matrix):
        m = np.ascontiguousarray(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ContractViolationError("mass matrix must be square")
        if not np.allclose(m, m.T, rtol=1e-10, atol=1e-12):
            raise ContractViolationError("mass matrix must be symmetric")
        try:
            chol = np.linalg.cholesky(m)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"mass matrix is not positive definite: {exc}") from exc
        self._matrix = m
        self.chol = np.ascontiguousarray(chol)
        # F-contiguous view of chol^T, consumed by the BLAS triangular solves
        self._chol_t = self.chol.T
        self._matrix.setflags(write=False)
        self.chol.setflags(write=False)

    @property
    def dim(self):
        return self._matrix.shape[0]

    @property
    def matrix(self):
        return self._matrix

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    @classmethod
    def from_covariance(cls, covariance):
        """The mass matrix M = covariance^-1 (inverted once, outside hot loops)."""
        cov = np.ascontiguousarray(covariance, dtype=np.float64)
        try:
            factor = cho_factor(cov, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"covariance is not positive definite: {exc}") from exc
        inv = cho_solve(factor, np.eye(cov.shape[0]), check_finite=False)
        return cls((inv + inv.T) / 2.0)

    def sample(self, rng):
        """One momentum draw p ~ N(0, M)."""
        return self.chol @ rng.standard_normal(self.dim)

    def solve(self, v):
        """M^-1 v via two triangular solves against the cached factor."""
        w = dtrsv(self._chol_t, v, lower=0, trans=1)
        return dtrsv(self._chol_t, w, lower=0, trans=0)

    def kinetic(self, p):
        """p^T M^-1 p / 2 = ||chol^-1 p||^2 / 2."""
        w = dtrsv(self._chol_t, p, lower=0, trans=1)
        return 0.5 * float(w @ w)


@dataclass(frozen=True)
class LeapfrogConfig:
    """Stepsize/step-count pair; epsilon = T/L when derived from a time T."""

    epsilon: float
    steps: int

    def __post_init__(self):
        if self.epsilon <= 0 or self.steps < 1:
            raise ContractViolationError("epsilon must be positive and steps >= 1")

    @classmethod
    def from_integration_time(cls, total_time, steps):
        return cls(total_time / steps, steps)


def kinetic_energy(p, mass):
    """K(p) = p^T M^-1 p / 2."""
    p = np.ascontiguousarray(p, dtype=np.float64)
    if p.shape != (mass.dim,):
        raise ContractViolationError("momentum dimension does not match the mass matrix")
    return mass.kinetic(p)


def total_energy(phase, model, mass):
    """H(x, p) = U(x) + K(p)."""
    return model.potential(phase.x) + kinetic_energy(phase.p, mass)


def sample_momentum(mass, rng):
    """Draw p ~ N(0, M) through the Cholesky factor of M."""
    return mass.sample(rng)


def _run_trajectory(model, kernel, mass, x, p, epsilon, n_steps):
    """Backend dispatch shared by :func:`leapfrog` and the samplers."""
    if kernel is not None:
        return core.leapfrog_trajectory(kernel, x, p, mass.chol, epsilon, n_steps)
    return _purepy.leapfrog_trajectory(model._gradient, mass.solve, x, p, epsilon, n_steps)


def leapfrog(x0, p0, mass, model, epsilon, n_steps):
    """Integrate the Hamiltonian flow for n_steps leapfrog steps of size epsilon.

    Raises :class:`DivergenceError` (carrying the step index) if the state
    leaves the finite floating-point range mid-trajectory.
    """
    if epsilon <= 0:
        raise ContractViolationError("epsilon must be positive")
    if n_steps < 1:
        raise ContractViolationError("n_steps must be at least 1")
    start = PhasePoint(x0, p0)
    if start.dim != model.dim or start.dim != mass.dim:
        raise ContractViolationError("model, mass matrix and state dimensions disagree")
    x, p, diverged = _run_trajectory(
        model, model.compiled_kernel(), mass, start.x, start.p, epsilon, n_steps
    )
    if diverged:
        raise DivergenceError(diverged)
    return PhasePoint(x, p)
