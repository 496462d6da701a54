"""Target distributions: the model interface and the five benchmark targets.

Every model exposes an unconstrained, differentiable potential
``U(x) = -log pi(x)`` (up to an additive constant) together with its
hand-coded gradient. Bounded parameters are mapped to the real line with
sigmoid reparameterizations whose log-Jacobian is folded into the
potential.
"""

import math

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from ._backend import core
from .exceptions import ContractViolationError, DataFormatError, NumericalError

__all__ = [
    "TargetModel",
    "GaussianTarget",
    "RosenbrockTarget",
    "EightSchoolsModel",
    "LogisticRegressionModel",
    "LGCPModel",
    "eight_schools_transform",
    "load_eight_schools",
]


def _softplus(z):
    # log(1 + e^z), safe for large |z|
    return np.logaddexp(0.0, z)


class TargetModel:
    """A differentiable unnormalized negative log-density on R^dim.

    Subclasses implement ``_potential`` and ``_gradient`` (no argument
    checking); the public ``potential``/``gradient`` validate shapes.
    Models are immutable after construction and safe to share between
    concurrently running chains.
    """

    dim = None
    name = "target"

    def _check(self, x):
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ContractViolationError(
                f"{self.name}: expected a vector of length {self.dim}, got shape {x.shape}"
            )
        return x

    def potential(self, x):
        """U(x) = -log pi(x) up to an additive constant."""
        return float(self._potential(self._check(x)))

    def gradient(self, x):
        """grad U(x)."""
        return self._gradient(self._check(x))

    def _potential(self, x):
        raise NotImplementedError

    def _gradient(self, x):
        raise NotImplementedError

    def compiled_kernel(self):
        """A fresh compiled kernel for this model, or None.

        Kernels carry scratch buffers, so each chain must use its own
        instance. The base implementation (and any user-defined model
        without a compiled counterpart) returns None, which routes the
        sampler through the pure-python leapfrog.
        """
        return None

    @property
    def parameter_names(self):
        return [f"x_{i}" for i in range(self.dim)]

    def constrain(self, samples):
        """Map unconstrained samples (N x dim) to the reported parameterization."""
        return np.asarray(samples, dtype=np.float64)


class GaussianTarget(TargetModel):
    """Multivariate normal N(mean, covariance) with a cached precision."""

    name = "gaussian"

    def __init__(self, mean, covariance):
        mean = np.ascontiguousarray(mean, dtype=np.float64)
        cov = np.ascontiguousarray(covariance, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ContractViolationError("mean/covariance shapes are inconsistent")
        if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
            raise ContractViolationError("covariance must be symmetric")
        try:
            factor = cho_factor(cov, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"covariance is not positive definite: {exc}") from exc
        prec = cho_solve(factor, np.eye(mean.size), check_finite=False)
        prec = np.ascontiguousarray((prec + prec.T) / 2.0)
        resid = np.abs(cov @ prec - np.eye(mean.size)).max()
        if resid > 1e-10:
            raise NumericalError(
                f"covariance inversion residual {resid:.2e} exceeds 1e-10; "
                "matrix is too ill-conditioned"
            )
        self.dim = mean.size
        self.mean = mean
        self.covariance = cov
        self.precision = prec
        for arr in (self.mean, self.covariance, self.precision):
            arr.setflags(write=False)

    @classmethod
    def standard(cls, dim):
        return cls(np.zeros(dim), np.eye(dim))

    def _potential(self, x):
        w = x - self.mean
        return 0.5 * w @ (self.precision @ w)

    def _gradient(self, x):
        return self.precision @ (x - self.mean)

    def compiled_kernel(self):
        if core is None:
            return None
        return core.GaussianKernel(self.mean, self.precision)


class RosenbrockTarget(TargetModel):
    """pi(x1, x2) proportional to exp(-x1^2 - 100 (x2 - b x1^2)^2).

    ``b`` controls how far the banana departs from Gaussian; b = 0 is the
    exact Gaussian with Var(x1) = 1/2 and Var(x2) = 1/200.
    """

    name = "rosenbrock"
    dim = 2

    def __init__(self, b):
        b = float(b)
        if b < 0:
            raise ContractViolationError("b must be non-negative")
        self.b = b

    def _potential(self, x):
        r = x[1] - self.b * x[0] ** 2
        return x[0] ** 2 + 100.0 * r * r

    def _gradient(self, x):
        r = x[1] - self.b * x[0] ** 2
        return np.array([2.0 * x[0] - 400.0 * self.b * x[0] * r, 200.0 * r])

    def compiled_kernel(self):
        if core is None:
            return None
        return core.RosenbrockKernel(self.b)


def eight_schools_transform(u):
    """Constrain the last two coordinates of the hierarchical model.

    For a 10-vector u: theta = u[:8] (unconstrained),
    mu = -15 + 30*sigmoid(u[8]) in [-15, 15], tau = 15*sigmoid(u[9]) in
    [0, 15]. Returns ``(theta, mu, tau, log_jacobian)`` where the Jacobian
    covers both sigmoid maps.
    """
    u = np.asarray(u, dtype=np.float64)
    theta = u[:-2]
    s_mu = expit(u[-2])
    s_tau = expit(u[-1])
    mu = -15.0 + 30.0 * s_mu
    tau = 15.0 * s_tau
    log_jac = (
        math.log(450.0)
        - _softplus(u[-2]) - _softplus(-u[-2])
        - _softplus(u[-1]) - _softplus(-u[-1])
    )
    return theta, float(mu), float(tau), float(log_jac)


class EightSchoolsModel(TargetModel):
    """Hierarchical normal-means model with uniform hyperpriors.

    Sampling space is (theta_1..theta_K, u_mu, u_tau) with
    mu ~ Uniform[-15, 15] and tau ~ Uniform[0, 15] realized through the
    sigmoid transform of :func:`eight_schools_transform`; tau enters as
    the standard deviation of theta_i ~ N(mu, tau) and sigma_i as the
    standard deviation of y_i ~ N(theta_i, sigma_i).
    """

    name = "eight_schools"

    def __init__(self, y, sigma):
        y = np.ascontiguousarray(y, dtype=np.float64)
        sigma = np.ascontiguousarray(sigma, dtype=np.float64)
        if y.ndim != 1 or y.shape != sigma.shape:
            raise ContractViolationError("y and sigma must be equal-length vectors")
        if np.any(sigma <= 0):
            raise ContractViolationError("observation standard deviations must be positive")
        self.y = y
        self.sigma = sigma
        self.n_groups = y.size
        self.dim = y.size + 2
        self._inv_var = 1.0 / sigma**2
        for arr in (self.y, self.sigma, self._inv_var):
            arr.setflags(write=False)

    @classmethod
    def from_file(cls, path):
        """Read the two-line data file: y on line one, sigma on line two."""
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
        except OSError as exc:
            raise DataFormatError(f"cannot read eight-schools data file {path}: {exc}") from exc
        if len(lines) != 2:
            raise DataFormatError(
                f"{path}: expected 2 data lines (y then sigma), found {len(lines)}"
            )
        try:
            y = np.array([float(v) for v in lines[0].split(",")])
            sigma = np.array([float(v) for v in lines[1].split(",")])
        except ValueError as exc:
            raise DataFormatError(f"{path}: non-numeric entry: {exc}") from exc
        if y.size != 8 or sigma.size != 8:
            raise DataFormatError(
                f"{path}: expected 8 comma-separated values per line, "
                f"got {y.size} and {sigma.size}"
            )
        return cls(y, sigma)

    def _potential(self, u):
        theta = u[:-2]
        mu, tau, log_jac = self._constrain_tail(u)
        acc = 0.5 * np.sum((self.y - theta) ** 2 * self._inv_var)
        acc += 0.5 * np.sum((theta - mu) ** 2) / tau**2
        acc += self.n_groups * math.log(tau)
        return acc - log_jac

    def _constrain_tail(self, u):
        s_mu = expit(u[-2])
        s_tau = expit(u[-1])
        mu = -15.0 + 30.0 * s_mu
        tau = 15.0 * s_tau
        log_jac = (
            math.log(450.0)
            - _softplus(u[-2]) - _softplus(-u[-2])
            - _softplus(u[-1]) - _softplus(-u[-1])
        )
        return mu, tau, log_jac

    def _gradient(self, u):
        theta = u[:-2]
        s_mu = expit(u[-2])
        s_tau = expit(u[-1])
        mu = -15.0 + 30.0 * s_mu
        tau = 15.0 * s_tau
        inv_tau2 = 1.0 / tau**2
        d = theta - mu
        g = np.empty(self.dim)
        g[:-2] = (theta - self.y) * self._inv_var + d * inv_tau2
        du_mu = -np.sum(d) * inv_tau2
        du_tau = -np.sum(d**2) * inv_tau2 / tau + self.n_groups / tau
        g[-2] = du_mu * 30.0 * s_mu * (1.0 - s_mu) + (2.0 * s_mu - 1.0)
        g[-1] = du_tau * 15.0 * s_tau * (1.0 - s_tau) + (2.0 * s_tau - 1.0)
        return g

    def compiled_kernel(self):
        if core is None:
            return None
        return core.EightSchoolsKernel(self.y, self.sigma)

    @property
    def parameter_names(self):
        return [f"theta_{i + 1}" for i in range(self.n_groups)] + ["mu", "tau"]

    def constrain(self, samples):
        samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
        out = samples.copy()
        out[:, -2] = -15.0 + 30.0 * expit(samples[:, -2])
        out[:, -1] = 15.0 * expit(samples[:, -1])
        return out


def load_eight_schools(path=None):
    """The bundled study data (or a compatible two-line file at ``path``)."""
    if path is None:
        from importlib.resources import files

        path = str(files("mces").joinpath("datasets/eight_schools.txt"))
    return EightSchoolsModel.from_file(path)


class LogisticRegressionModel(TargetModel):
    """Bayesian logistic regression with a standard normal prior on beta.

    ``design`` is the N x (p+1) matrix whose first column is the
    intercept (all ones); ``labels`` are in {0, 1}. The potential is
    ||beta||^2/2 + sum_i softplus(z_i) - y_i z_i with z = design @ beta,
    using the overflow-safe softplus.
    """

    name = "logistic_regression"

    def __init__(self, design, labels):
        design = np.ascontiguousarray(design, dtype=np.float64)
        labels = np.ascontiguousarray(labels, dtype=np.float64)
        if design.ndim != 2 or labels.ndim != 1 or design.shape[0] != labels.size:
            raise ContractViolationError("design/labels shapes are inconsistent")
        if not np.all((labels == 0) | (labels == 1)):
            raise ContractViolationError("labels must be 0/1")
        if not np.all(design[:, 0] == 1.0):
            raise ContractViolationError("first design column must be the intercept (ones)")
        self.design = design
        self.labels = labels
        self.n_rows = design.shape[0]
        self.dim = design.shape[1]
        for arr in (self.design, self.labels):
            arr.setflags(write=False)

    def _potential(self, beta):
        z = self.design @ beta
        return 0.5 * beta @ beta + np.sum(_softplus(z) - self.labels * z)

    def _gradient(self, beta):
        z = self.design @ beta
        return beta + self.design.T @ (expit(z) - self.labels)

    def compiled_kernel(self):
        if core is None:
            return None
        return core.LogisticKernel(self.design, self.labels)

    @property
    def parameter_names(self):
        return [f"beta_{i}" for i in range(self.dim)]


class LGCPModel(TargetModel):
    """Log-Gaussian Cox process on a d x d grid.

    The latent field has constant mean ``mu`` and covariance
    Sigma[(i,j),(i',j')] = alpha * exp(-dist/(beta*d)) with the Euclidean
    grid distance; counts are Poisson with intensity s * exp(x). Cells
    are flattened row-major. The dense prior Cholesky factor is computed
    once at construction.
    """

    name = "lgcp"

    def __init__(self, grid_side, counts, alpha=1.91, beta=1.0 / 33.0, mu=None, s=None):
        d = int(grid_side)
        if d < 2:
            raise ContractViolationError("grid side must be at least 2")
        counts = np.asarray(counts, dtype=np.float64)
        if counts.shape != (d, d):
            raise ContractViolationError(f"counts must be a {d}x{d} grid, got {counts.shape}")
        if np.any(counts < 0) or np.any(counts != np.round(counts)):
            raise ContractViolationError("counts must be non-negative integers")
        self.grid_side = d
        self.dim = d * d
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.mu = math.log(126.0) - self.alpha / 2.0 if mu is None else float(mu)
        self.s = 1.0 / self.dim if s is None else float(s)
        self.counts = np.ascontiguousarray(counts.reshape(-1))
        self.prior_covariance = grid_covariance(d, self.alpha, self.beta)
        try:
            self.prior_chol = np.ascontiguousarray(np.linalg.cholesky(self.prior_covariance))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"prior covariance is not positive definite: {exc}") from exc
        for arr in (self.counts, self.prior_covariance, self.prior_chol):
            arr.setflags(write=False)

    def _prior_solve(self, w):
        return cho_solve((self.prior_chol, True), w, check_finite=False)

    def _potential(self, x):
        w = x - self.mu
        v = self._prior_solve(w)
        return 0.5 * w @ v + np.sum(self.s * np.exp(x) - self.counts * x)

    def _gradient(self, x):
        return self._prior_solve(x - self.mu) + self.s * np.exp(x) - self.counts

    def compiled_kernel(self):
        if core is None:
            return None
        return core.LGCPKernel(self.prior_chol, self.mu, self.s, self.counts)


def grid_covariance(grid_side, alpha, beta):
    """Exponential covariance alpha*exp(-dist/(beta*grid_side)) on the grid.

    Cells are flattened row-major; ``dist`` is the Euclidean distance in
    grid-index units, so the diagonal equals alpha.
    """
    d = int(grid_side)
    ii, jj = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    coords = np.column_stack([ii.reshape(-1), jj.reshape(-1)]).astype(np.float64)
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    return np.ascontiguousarray(alpha * np.exp(-dist / (beta * d)))
