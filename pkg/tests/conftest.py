import numpy as np
import pytest


def finite_difference_gradient(model, x, step=1e-6):
    """Central-difference gradient of the model potential (test oracle)."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        h = step * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (model.potential(xp) - model.potential(xm)) / (2.0 * h)
    return grad


def assert_gradient_matches(model, x, rtol=1e-5):
    fd = finite_difference_gradient(model, x)
    g = model.gradient(x)
    err = np.linalg.norm(fd - g) / (1.0 + np.linalg.norm(g))
    assert err <= rtol, f"{model.name}: finite-difference gap {err:.2e} at x={x}"


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
