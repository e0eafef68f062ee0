"""Circle (T = R/Z) arithmetic shared by all modules.

Circle coordinates live in [0, 1); real-valued lifts are plain floats whose
value mod 1 is the circle coordinate.  ``tan_pi``/``inv_tan_pi`` implement the
tangent parametrization used by the closed-form fiber flows, with argument
reduction so accuracy is preserved arbitrarily close to the poles at 0 and
1/2 (a naive ``tan(pi*z)`` loses ~11 digits for z within 1e-12 of 1/2).
"""
from __future__ import annotations

import numpy as np


def wrap(x):
    """Map reals (scalar or array) into [0, 1)."""
    x = np.asarray(x, dtype=float)
    r = x - np.floor(x)
    # x - floor(x) can round up to exactly 1.0 for tiny negative x
    r = np.where(r >= 1.0, 0.0, r)
    return r if r.ndim else float(r)


def circle_dist(a, b):
    """Shortest distance on the unit circle between a and b (mod 1)."""
    d = np.abs(np.asarray(wrap(a)) - np.asarray(wrap(b)))
    d = np.minimum(d, 1.0 - d)
    return d if d.ndim else float(d)


def dist_to_poles(z):
    """Circle distance to the nearest of the two poles {0, 1/2}."""
    return np.minimum(circle_dist(z, 0.0), circle_dist(z, 0.5))


def tan_pi(z):
    """Accurate tan(pi*z) for z in [0, 1).

    Returns +inf at z exactly 1/2 (callers treat the pole separately).
    """
    z = np.asarray(wrap(z))
    near_half = (z >= 0.25) & (z < 0.75)
    # centered representative: around 0 for the outer branch, around 1/2 inside
    t_out = z - np.round(z)
    t_in = z - 0.5
    with np.errstate(divide="ignore"):
        out = np.where(
            near_half,
            -np.cos(np.pi * t_in) / np.sin(np.pi * np.where(t_in == 0.0, np.nan, t_in)),
            np.tan(np.pi * t_out),
        )
    out = np.where(near_half & (z == 0.5), np.inf, out)
    return out if out.ndim else float(out)


def inv_tan_pi(y, upper):
    """Inverse of ``tan_pi`` restricted to one open half-circle.

    ``upper`` False maps y into [0, 1/2), True into (1/2, 1).  The poles are
    fixed points of the flows using this chart, so the half-circle of a
    trajectory never changes; values that underflow to -0.0 on the upper
    branch snap to 0.0 (the sink) by construction of ``wrap``.
    """
    y = np.asarray(y, dtype=float)
    upper = np.asarray(upper)
    big = np.abs(y) > 1.0
    with np.errstate(divide="ignore"):
        core = np.where(
            big,
            np.sign(y) * 0.5 - np.arctan(1.0 / np.where(y == 0.0, np.nan, y)) / np.pi,
            np.arctan(y) / np.pi,
        )
    z = np.where(upper, wrap(1.0 + core), core)
    return z if z.ndim else float(z)
