"""Tiny fixed-step RK4 used by the oracle scripts, independent of the package integrator."""

import numpy as np


def rk4_path(rhs, y0, t1, steps):
    """States at ``steps + 1`` equally spaced times on ``[0, t1]``."""
    h = t1 / steps
    ys = np.empty((steps + 1, len(y0)))
    ys[0] = y0
    t, y = 0.0, np.asarray(y0, dtype=float)
    for i in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        ys[i + 1] = y
    return ys
