"""Timing comparison between the compiled and pure-python leapfrog backends.

Each case times full leapfrog trajectories (the sampler's hot path) from
a fixed start with pre-drawn momenta, so both backends do identical work;
the endpoint discrepancy is reported alongside the speedup.
"""

import math
import time

import numpy as np

from . import _purepy
from ._backend import core
from .harness import bundled_german_path, generate_lgcp_data, load_german_credit
from .hamiltonian import MassMatrix
from .models import GaussianTarget, LGCPModel, RosenbrockTarget, load_eight_schools


def _cases(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((10, 10))
    gauss = GaussianTarget(np.zeros(10), a @ a.T / 10 + np.eye(10))
    truth = generate_lgcp_data(8, seed)
    return [
        ("gaussian_10d", gauss),
        ("rosenbrock", RosenbrockTarget(0.1)),
        ("eight_schools", load_eight_schools()),
        ("german_credit", load_german_credit(bundled_german_path())),
        ("lgcp_8x8", LGCPModel(8, truth.counts)),
    ]


def _time_python(model, mass, x0, momenta, eps, n_steps):
    start = time.perf_counter()
    for p in momenta:
        _purepy.leapfrog_trajectory(model._gradient, mass.solve, x0, p, eps, n_steps)
    elapsed = time.perf_counter() - start
    x, _, _ = _purepy.leapfrog_trajectory(model._gradient, mass.solve, x0, momenta[0], eps, n_steps)
    return elapsed, x


def _time_compiled(model, mass, x0, momenta, eps, n_steps):
    kernel = model.compiled_kernel()
    start = time.perf_counter()
    for p in momenta:
        core.leapfrog_trajectory(kernel, x0, p, mass.chol, eps, n_steps)
    elapsed = time.perf_counter() - start
    x, _, _ = core.leapfrog_trajectory(kernel, x0, momenta[0], mass.chol, eps, n_steps)
    return elapsed, x


def run_benchmark(n_trajectories=200, n_steps=30, seed=0, stream=print):
    """Time both backends on every benchmark model; returns result rows."""
    eps = (math.pi / 2.0) / n_steps
    rows = []
    stream(f"leapfrog backend benchmark: {n_trajectories} trajectories x {n_steps} steps")
    stream(f"{'model':<16}{'dim':>5}{'python ms/traj':>16}{'compiled ms/traj':>18}"
           f"{'speedup':>9}{'max |dx|':>11}")
    for name, model in _cases(seed):
        rng = np.random.default_rng((seed, 1))
        x0 = np.zeros(model.dim) if name != "lgcp_8x8" else np.full(model.dim, model.mu)
        momenta = rng.standard_normal((n_trajectories, model.dim))
        mass = MassMatrix.identity(model.dim)
        py_time, py_end = _time_python(model, mass, x0, momenta, eps, n_steps)
        row = {
            "model": name,
            "dim": model.dim,
            "python_ms": 1e3 * py_time / n_trajectories,
            "compiled_ms": float("nan"),
            "speedup": float("nan"),
            "endpoint_gap": float("nan"),
        }
        if core is not None:
            cy_time, cy_end = _time_compiled(model, mass, x0, momenta, eps, n_steps)
            row["compiled_ms"] = 1e3 * cy_time / n_trajectories
            row["speedup"] = py_time / cy_time
            row["endpoint_gap"] = float(np.abs(py_end - cy_end).max())
        rows.append(row)
        stream(
            f"{row['model']:<16}{row['dim']:>5}{row['python_ms']:>16.4f}"
            f"{row['compiled_ms']:>18.4f}{row['speedup']:>9.1f}{row['endpoint_gap']:>11.2e}"
        )
    if core is None:
        stream("compiled core not available; python backend only "
               "(install with Cython and a C compiler for the comparison)")
    return rows
