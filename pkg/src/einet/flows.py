"""Evaluation of the north-south circle flows and their spatial derivatives.

Each inhibitory unit carries a circle flow with an attracting pole at z = 0
and a repelling pole at z = 1/2.  For the sine family and the projective
family the time-t map and its derivative have closed forms in the tangent
chart; tabulated fields are integrated (state and variational equation
jointly) with an adaptive Runge-Kutta method.

All evaluators accept scalars or arrays for ``z0`` and broadcast against
``t``; t may be negative (the flows are groups), although the public
contract only needs t >= 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import NonConvergence
from .torus import inv_tan_pi, tan_pi, wrap

if TYPE_CHECKING:  # pragma: no cover
    from .params import NSFlowSpec

_RK_RTOL = 1e-11
_RK_ATOL = 1e-12
_RK_BUDGET = 200_000  # right-hand-side evaluations per call


@dataclass(frozen=True)
class FlowEvaluation:
    """Result of evolving one fiber coordinate for time t.

    ``dz`` is the spatial derivative of the time-t flow map at z0; it is
    positive because 1-D flow maps preserve orientation.
    """

    z_end: np.ndarray | float
    dz: np.ndarray | float
    method: str
    est_error: float


def _sine_like_evolve(rate: float, z0, t) -> FlowEvaluation:
    """Closed form for fields with tan(pi z(t)) = tan(pi z0) exp(-rate*t).

    ``rate`` = -v'(0) = v'(1/2); covers the sine family (rate = 2*pi*A) and
    the projective family (rate = 2*alpha).
    """
    z0 = np.asarray(wrap(z0))
    t = np.asarray(t, dtype=float)
    at_north = z0 == 0.5
    upper = z0 > 0.5

    y0 = np.asarray(tan_pi(np.where(at_north, 0.0, z0)))
    decay = np.exp(-rate * t)
    y = y0 * decay
    z = np.asarray(inv_tan_pi(y, upper))
    dz = decay * (1.0 + y0 * y0) / (1.0 + y * y)

    with np.errstate(over="ignore"):  # exp overflows to inf for huge t at the source
        z = np.where(at_north, 0.5, z)
        dz = np.where(at_north, np.exp(rate * t), dz)
    if z.ndim == 0:
        return FlowEvaluation(float(z), float(dz), "closed_form", 1e-12)
    return FlowEvaluation(z, dz, "closed_form", 1e-12)


def sine_scalar_evolve(rate: float, z: float, t: float) -> tuple[float, float]:
    """Scalar closed form for the sine/projective families (hot loops)."""
    import math

    if z == 0.5:
        return 0.5, math.exp(rate * t)
    if 0.25 <= z < 0.75:
        h = z - 0.5
        y0 = -math.cos(math.pi * h) / math.sin(math.pi * h)
    else:
        h = z - round(z)
        y0 = math.tan(math.pi * h)
    decay = math.exp(-rate * t)
    y = y0 * decay
    if abs(y) > 1.0:
        core = math.copysign(0.5, y) - math.atan(1.0 / y) / math.pi
    else:
        core = math.atan(y) / math.pi
    if z > 0.5:
        z2 = 1.0 + core
        if z2 >= 1.0:
            z2 -= 1.0
    else:
        z2 = core
    dz = decay * (1.0 + y0 * y0) / (1.0 + y * y)
    return z2, dz


def _tabulated_evolve(flow: "NSFlowSpec", z0, t) -> FlowEvaluation:
    """Adaptive RK on the joint (state, variational) system for one t."""
    from scipy.integrate import solve_ivp

    v = flow.field_spline()
    dv = flow.field_spline_derivative()
    z0 = np.atleast_1d(np.asarray(wrap(z0), dtype=float))
    tf = float(t)
    if tf == 0.0:
        out_z, out_j = z0.copy(), np.ones_like(z0)
    else:
        n = z0.size

        def rhs(_t, y):
            z, j = y[:n], y[n:]
            zf = z - np.floor(z)
            return np.concatenate([v(zf), dv(zf) * j])

        sol = solve_ivp(
            rhs,
            (0.0, tf),
            np.concatenate([z0, np.ones(n)]),
            method="DOP853",
            rtol=_RK_RTOL,
            atol=_RK_ATOL,
        )
        if not sol.success or sol.nfev > _RK_BUDGET:
            raise NonConvergence(
                f"fiber integration failed after {sol.nfev} evaluations: {sol.message}"
            )
        out_z, out_j = wrap(sol.y[:n, -1]), sol.y[n:, -1]
    if np.isscalar(t) and np.asarray(z0).size == 1:
        return FlowEvaluation(float(out_z[0]), float(out_j[0]), "rk_integrated", 1e-10)
    return FlowEvaluation(out_z, out_j, "rk_integrated", 1e-10)


def ns_evolve(flow: "NSFlowSpec", z0, t) -> FlowEvaluation:
    """Evolve z0 for time t under the unit's north-south flow.

    Returns the image point and the spatial derivative of the time-t map.
    Closed forms are used for the sine and projective families; tabulated
    fields integrate state and variational equation jointly.
    """
    if flow.kind in ("sine", "projective"):
        return _sine_like_evolve(flow.rate, z0, t)
    if flow.kind == "tabulated":
        t_arr = np.asarray(t, dtype=float)
        if t_arr.ndim == 0:
            return _tabulated_evolve(flow, z0, float(t_arr))
        evs = [_tabulated_evolve(flow, z0, float(tv)) for tv in t_arr.ravel()]
        z = np.stack([np.asarray(e.z_end) for e in evs]).reshape(t_arr.shape + np.shape(z0))
        dz = np.stack([np.asarray(e.dz) for e in evs]).reshape(t_arr.shape + np.shape(z0))
        return FlowEvaluation(z, dz, "rk_integrated", 1e-10)
    raise ValueError(f"unknown fiber flow kind {flow.kind!r}")


def ns_lifted(flow: "NSFlowSpec", v, t):
    """Apply the canonical lift of the time-t map to real-lift values.

    The flow map g fixes 0 and is an increasing circle homeomorphism, so
    ``v -> floor(v) + g(frac(v))`` is its unique increasing lift commuting
    with integer shifts.  Returns (lifted values, derivative values).
    """
    v = np.asarray(v, dtype=float)
    base = np.floor(v)
    zf = v - base
    bump = zf >= 1.0  # frac can round up to exactly 1.0; keep the lift continuous
    base = base + bump
    zf = np.where(bump, 0.0, zf)
    ev = ns_evolve(flow, zf, t)
    return base + np.asarray(ev.z_end), np.asarray(ev.dz)


def ns_image_of_arc(flow: "NSFlowSpec", arc, t):
    """Image of the (counterclockwise) arc [z_a, z_b] under the time-t map.

    Flow maps of 1-D fields are order preserving, so the image arc is the
    arc between the endpoint images with the same orientation.
    """
    za, zb = arc
    ea = ns_evolve(flow, za, t)
    eb = ns_evolve(flow, zb, t)
    return (float(np.asarray(ea.z_end)), float(np.asarray(eb.z_end)))


def arc_contains(arc, z) -> bool:
    """Whether point z lies on the counterclockwise arc [z_a, z_b]."""
    za, zb = wrap(arc[0]), wrap(arc[1])
    z = wrap(z)
    span = wrap(zb - za)
    off = wrap(z - za)
    if span == 0.0:
        return off == 0.0
    return off <= span


def arc_covers_complement(arc, hole_lo, hole_hi) -> bool:
    """Whether arc [z_a, z_b] contains all of T except possibly [hole_lo, hole_hi]."""
    za, zb = wrap(arc[0]), wrap(arc[1])
    # complement of the image is the ccw arc (zb, za); it must sit inside the hole
    return arc_contains((hole_lo, hole_hi), zb) and arc_contains((hole_lo, hole_hi), za)
