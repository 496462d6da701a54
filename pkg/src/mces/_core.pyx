# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: per-model potential/gradient and the leapfrog driver.

Each kernel instance owns scratch buffers, so a kernel must be confined to
one chain at a time; models hand out a fresh kernel per run. The python
fallback in ``_purepy`` mirrors the arithmetic of ``leapfrog_trajectory``
step for step.
"""

import numpy as np

from libc.math cimport exp, isfinite, log, log1p

from scipy.linalg.cython_blas cimport ddot, dgemv, dsymv, dtrsv


cdef inline double softplus(double z) noexcept nogil:
    # overflow-safe log(1 + e^z)
    if z > 0:
        return z + log1p(exp(-z))
    return log1p(exp(z))


cdef inline double sigmoid(double z) noexcept nogil:
    cdef double e
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef inline void chol_solve(const double* chol, const double* b, double* out, int n) noexcept nogil:
    # Solves (L L^T) out = b where `chol` is the row-major lower factor L.
    # Row-major L is column-major L^T, hence uplo='U' with flipped trans.
    cdef char uplo = b'U', trans_t = b'T', trans_n = b'N', diag = b'N'
    cdef int inc = 1, i
    for i in range(n):
        out[i] = b[i]
    dtrsv(&uplo, &trans_t, &diag, &n, <double*> chol, &n, out, &inc)
    dtrsv(&uplo, &trans_n, &diag, &n, <double*> chol, &n, out, &inc)


cdef class PotentialKernel:
    """C-level interface consumed by ``leapfrog_trajectory``."""

    cdef readonly Py_ssize_t dim

    cdef double c_potential(self, const double* x) noexcept nogil:
        return 0.0

    cdef void c_gradient(self, const double* x, double* out) noexcept nogil:
        pass

    def potential(self, const double[::1] x):
        if x.shape[0] != self.dim:
            raise ValueError("dimension mismatch")
        return self.c_potential(&x[0])

    def gradient(self, const double[::1] x):
        if x.shape[0] != self.dim:
            raise ValueError("dimension mismatch")
        out = np.empty(self.dim)
        cdef double[::1] ov = out
        self.c_gradient(&x[0], &ov[0])
        return out


cdef class GaussianKernel(PotentialKernel):
    """U(x) = (x-mean)^T prec (x-mean) / 2."""

    cdef const double[::1] mean
    cdef const double[:, ::1] prec
    cdef double[::1] w, w2

    def __cinit__(self, const double[::1] mean, const double[:, ::1] prec):
        self.dim = mean.shape[0]
        self.mean = mean
        self.prec = prec
        self.w = np.empty(self.dim)
        self.w2 = np.empty(self.dim)

    cdef void c_gradient(self, const double* x, double* out) noexcept nogil:
        cdef int n = <int> self.dim, inc = 1
        cdef char uplo = b'L'
        cdef double one = 1.0, zero = 0.0
        cdef Py_ssize_t i
        for i in range(self.dim):
            self.w[i] = x[i] - self.mean[i]
        dsymv(&uplo, &n, &one, <double*> &self.prec[0, 0], &n, &self.w[0], &inc, &zero, out, &inc)

    cdef double c_potential(self, const double* x) noexcept nogil:
        cdef int n = <int> self.dim, inc = 1
        self.c_gradient(x, &self.w2[0])
        return 0.5 * ddot(&n, &self.w[0], &inc, &self.w2[0], &inc)


cdef class RosenbrockKernel(PotentialKernel):
    """U(x1,x2) = x1^2 + 100 (x2 - b x1^2)^2."""

    cdef double b

    def __cinit__(self, double b):
        self.dim = 2
        self.b = b

    cdef double c_potential(self, const double* x) noexcept nogil:
        cdef double r = x[1] - self.b * x[0] * x[0]
        return x[0] * x[0] + 100.0 * r * r

    cdef void c_gradient(self, const double* x, double* out) noexcept nogil:
        cdef double r = x[1] - self.b * x[0] * x[0]
        out[0] = 2.0 * x[0] - 400.0 * self.b * x[0] * r
        out[1] = 200.0 * r


cdef class EightSchoolsKernel(PotentialKernel):
    """Hierarchical normal means in the unconstrained parameterization.

    Coordinates: u[0..K-1] = theta, u[K] -> mu via -15 + 30*sigmoid,
    u[K+1] -> tau via 15*sigmoid; the log-Jacobian of both sigmoid maps is
    folded into the potential.
    """

    cdef const double[::1] y
    cdef double[::1] inv_var
    cdef Py_ssize_t n_groups

    def __cinit__(self, const double[::1] y, const double[::1] sigma):
        cdef Py_ssize_t i
        self.n_groups = y.shape[0]
        self.dim = self.n_groups + 2
        self.y = y
        self.inv_var = np.empty(self.n_groups)
        for i in range(self.n_groups):
            self.inv_var[i] = 1.0 / (sigma[i] * sigma[i])

    cdef double c_potential(self, const double* u) noexcept nogil:
        cdef Py_ssize_t k = self.n_groups
        cdef double s_mu = sigmoid(u[k]), s_tau = sigmoid(u[k + 1])
        cdef double mu = -15.0 + 30.0 * s_mu
        cdef double tau = 15.0 * s_tau
        cdef double inv_tau2 = 1.0 / (tau * tau)
        cdef double acc = 0.0, d
        cdef Py_ssize_t i
        for i in range(k):
            d = self.y[i] - u[i]
            acc += 0.5 * d * d * self.inv_var[i]
            d = u[i] - mu
            acc += 0.5 * d * d * inv_tau2
        acc += k * log(tau)
        # minus log-Jacobian of the two sigmoid reparameterizations
        acc += softplus(u[k]) + softplus(-u[k]) + softplus(u[k + 1]) + softplus(-u[k + 1])
        acc -= log(450.0)  # log 30 + log 15
        return acc

    cdef void c_gradient(self, const double* u, double* out) noexcept nogil:
        cdef Py_ssize_t k = self.n_groups
        cdef double s_mu = sigmoid(u[k]), s_tau = sigmoid(u[k + 1])
        cdef double mu = -15.0 + 30.0 * s_mu
        cdef double tau = 15.0 * s_tau
        cdef double inv_tau2 = 1.0 / (tau * tau)
        cdef double du_mu = 0.0, du_tau = 0.0, d
        cdef Py_ssize_t i
        for i in range(k):
            d = u[i] - mu
            out[i] = (u[i] - self.y[i]) * self.inv_var[i] + d * inv_tau2
            du_mu -= d * inv_tau2
            du_tau -= d * d * inv_tau2 / tau
        du_tau += k / tau
        out[k] = du_mu * 30.0 * s_mu * (1.0 - s_mu) + (2.0 * s_mu - 1.0)
        out[k + 1] = du_tau * 15.0 * s_tau * (1.0 - s_tau) + (2.0 * s_tau - 1.0)


cdef class LogisticKernel(PotentialKernel):
    """Bayesian logistic regression with a standard normal prior.

    U(beta) = ||beta||^2/2 + sum_i softplus(z_i) - y_i z_i, z = X beta.
    """

    cdef const double[:, ::1] design
    cdef const double[::1] labels
    cdef double[::1] z
    cdef Py_ssize_t n_rows

    def __cinit__(self, const double[:, ::1] design, const double[::1] labels):
        self.n_rows = design.shape[0]
        self.dim = design.shape[1]
        self.design = design
        self.labels = labels
        self.z = np.empty(self.n_rows)

    cdef void _logits(self, const double* beta) noexcept nogil:
        # Row-major X (N,p) is column-major X^T (p,N); trans='T' gives X beta.
        cdef char trans = b'T'
        cdef int m = <int> self.dim, n = <int> self.n_rows, inc = 1
        cdef double one = 1.0, zero = 0.0
        dgemv(&trans, &m, &n, &one, <double*> &self.design[0, 0], &m, <double*> beta, &inc, &zero, &self.z[0], &inc)

    cdef double c_potential(self, const double* beta) noexcept nogil:
        cdef double acc = 0.0
        cdef Py_ssize_t i
        self._logits(beta)
        for i in range(self.n_rows):
            acc += softplus(self.z[i]) - self.labels[i] * self.z[i]
        for i in range(self.dim):
            acc += 0.5 * beta[i] * beta[i]
        return acc

    cdef void c_gradient(self, const double* beta, double* out) noexcept nogil:
        cdef char trans = b'N'
        cdef int m = <int> self.dim, n = <int> self.n_rows, inc = 1
        cdef double one = 1.0, zero = 0.0
        cdef Py_ssize_t i
        self._logits(beta)
        for i in range(self.n_rows):
            self.z[i] = sigmoid(self.z[i]) - self.labels[i]
        dgemv(&trans, &m, &n, &one, <double*> &self.design[0, 0], &m, &self.z[0], &inc, &zero, out, &inc)
        for i in range(self.dim):
            out[i] += beta[i]


cdef class LGCPKernel(PotentialKernel):
    """Log-Gaussian Cox grid model with a dense prior Cholesky factor.

    U(x) = (x-mu)^T Sigma^-1 (x-mu) / 2 + sum_i s e^{x_i} - y_i x_i.
    """

    cdef const double[:, ::1] prior_chol
    cdef const double[::1] counts
    cdef double[::1] w, v
    cdef double mu, s

    def __cinit__(self, const double[:, ::1] prior_chol, double mu, double s, const double[::1] counts):
        self.dim = counts.shape[0]
        self.prior_chol = prior_chol
        self.counts = counts
        self.mu = mu
        self.s = s
        self.w = np.empty(self.dim)
        self.v = np.empty(self.dim)

    cdef double c_potential(self, const double* x) noexcept nogil:
        cdef int n = <int> self.dim, inc = 1
        cdef double acc = 0.0
        cdef Py_ssize_t i
        for i in range(self.dim):
            self.w[i] = x[i] - self.mu
            acc += self.s * exp(x[i]) - self.counts[i] * x[i]
        chol_solve(&self.prior_chol[0, 0], &self.w[0], &self.v[0], n)
        return acc + 0.5 * ddot(&n, &self.w[0], &inc, &self.v[0], &inc)

    cdef void c_gradient(self, const double* x, double* out) noexcept nogil:
        cdef int n = <int> self.dim
        cdef Py_ssize_t i
        for i in range(self.dim):
            self.w[i] = x[i] - self.mu
        chol_solve(&self.prior_chol[0, 0], &self.w[0], out, n)
        for i in range(self.dim):
            out[i] += self.s * exp(x[i]) - self.counts[i]


def leapfrog_trajectory(PotentialKernel kernel,
                        const double[::1] x0, const double[::1] p0,
                        const double[:, ::1] mass_chol,
                        double eps, Py_ssize_t n_steps):
    """Fused multi-step leapfrog; returns ``(x, p, diverged_step)``.

    ``diverged_step`` is 0 for a finite trajectory, else the 1-based step
    index at which the first non-finite coordinate appeared (the returned
    state is then whatever was reached).
    """
    cdef Py_ssize_t n = kernel.dim, i, step
    cdef Py_ssize_t diverged = 0
    cdef double half = 0.5 * eps
    cdef int ok

    x_arr = np.array(x0, dtype=np.float64, copy=True)
    p_arr = np.array(p0, dtype=np.float64, copy=True)
    g_arr = np.empty(n)
    v_arr = np.empty(n)
    cdef double[::1] x = x_arr, p = p_arr, g = g_arr, v = v_arr

    with nogil:
        kernel.c_gradient(&x[0], &g[0])
        for i in range(n):
            p[i] -= half * g[i]
        for step in range(n_steps):
            chol_solve(&mass_chol[0, 0], &p[0], &v[0], <int> n)
            for i in range(n):
                x[i] += eps * v[i]
            kernel.c_gradient(&x[0], &g[0])
            if step < n_steps - 1:
                for i in range(n):
                    p[i] -= eps * g[i]
            else:
                for i in range(n):
                    p[i] -= half * g[i]
            ok = 1
            for i in range(n):
                if not (isfinite(x[i]) and isfinite(p[i])):
                    ok = 0
                    break
            if not ok:
                diverged = step + 1
                break

    return x_arr, p_arr, diverged
