"""Pure-numpy fallback for the hot kernels in ``_core``.

The trajectory below applies the same fused kick/drift arithmetic in the
same order as the compiled driver, so the two backends agree to rounding.
"""

import numpy as np


def leapfrog_trajectory(gradient, mass_solve, x0, p0, eps, n_steps):
    """Fused multi-step leapfrog; returns ``(x, p, diverged_step)``.

    ``gradient`` maps a position to the potential gradient and
    ``mass_solve`` applies the inverse mass matrix. ``diverged_step`` is 0
    for a finite trajectory, else the 1-based step index of the first
    non-finite state.
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    p = np.array(p0, dtype=np.float64, copy=True)
    half = 0.5 * eps

    p -= half * gradient(x)
    for step in range(n_steps):
        x += eps * mass_solve(p)
        g = gradient(x)
        if step < n_steps - 1:
            p -= eps * g
        else:
            p -= half * g
        if not (np.isfinite(x).all() and np.isfinite(p).all()):
            return x, p, step + 1
    return x, p, 0
