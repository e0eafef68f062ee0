"""Continuous-time simulation of the full network flow.

The flow decomposes into two exactly solvable phases separated by the
sections {w=0} and {w=b}: a kick phase where w advances at unit rate and the
fibers rotate linearly, and an inhibition phase where w advances at the
constant speed factor of the (invariant) fiber configuration while the
fibers relax under their north-south fields.  Section hits are solved
algebraically, so there is no integrator jitter in crossing times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import ModelParams, return_time, speed_factor
from .returnmap import evolve_fibers, rotation_shifts
from .torus import dist_to_poles, wrap


@dataclass(frozen=True)
class FlowState:
    """Point of the full phase space with absolute time attached."""

    x: float
    y: float
    w: float
    z: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        z = np.array(self.z, dtype=float)
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", float(wrap(self.x)))
        object.__setattr__(self, "y", float(wrap(self.y)))
        if not (0.0 <= self.w < 1.0):
            raise ValueError("w must lie in [0, 1)")


def _apply_base(params: ModelParams, x: float, y: float):
    a = params.anosov.matrix
    return (float(wrap(a[0, 0] * x + a[0, 1] * y)),
            float(wrap(a[1, 0] * x + a[1, 1] * y)))


def _phases(s: FlowState, t_end: float, params: ModelParams):
    """Yield maximal single-phase intervals until absolute time t_end.

    Each item is (kind, t0, t1, state0, data): kind "kick" with data = the
    per-unit rotation rates already divided by b, or "relax" with data =
    (speed, tau_full); state0 is the phase-entry state (x, y, w, z).
    """
    x, y, w, z, t = s.x, s.y, s.w, s.z.copy(), s.t
    while t < t_end:
        if w < params.b:
            shifts = rotation_shifts(params, x)
            span = params.b - w
            t1 = min(t + span, t_end)
            yield ("kick", t, t1, (x, y, w, z.copy()), shifts / params.b)
            if t1 < t + span:
                return
            if w == 0.0:
                z = wrap(z + shifts)  # exact full-kick update, matches the return map
            else:
                z = wrap(z + span * shifts / params.b)
            w = params.b
            t = t + span
        else:
            c = speed_factor(z, params.phi)
            if c <= 0:
                raise ValueError("speed factor must be positive (inhibition table >= 1?)")
            if w == params.b:
                span = return_time(z, params)
            else:
                span = (1.0 - w) / c
            t1 = min(t + span, t_end)
            yield ("relax", t, t1, (x, y, w, z.copy()), (c, span))
            if t1 < t + span:
                return
            z_new, _ = evolve_fibers(params, z, span)
            # the inhibited arc is flow-invariant; entry/exit speeds agree up
            # to fibers that collapse numerically onto a pole
            c_exit = speed_factor(z_new, params.phi)
            assert c_exit == c or float(np.min(dist_to_poles(z_new))) < 1e-9, (
                "speed factor drifted inside an inhibition phase"
            )
            z = z_new
            x, y = _apply_base(params, x, y)
            w = 0.0
            t = t + span


def evolve(s: FlowState, dt: float, params: ModelParams) -> FlowState:
    """Advance the flow by dt using the exact phase decomposition."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0:
        return s
    t_end = s.t + dt
    last = None
    for kind, t0, t1, state0, data in _phases(s, t_end, params):
        last = (kind, t0, t1, state0, data)
    if last is None:
        return s
    kind, t0, t1, (x, y, w, z), data = last
    span = t_end - t0
    if kind == "kick":
        z1 = wrap(z + span * data)
        w1 = w + span
        if w1 >= params.b:  # landed exactly on the mid-section
            return FlowState(x, y, params.b if w1 == params.b else w1, z1, t_end)
        return FlowState(x, y, w1, z1, t_end)
    c, tau_full = data
    z1, _ = evolve_fibers(params, z, span)
    w1 = w + c * span
    if span >= tau_full or w1 >= 1.0:
        x, y = _apply_base(params, x, y)
        return FlowState(x, y, 0.0, z1, t_end)
    return FlowState(x, y, w1, z1, t_end)


def section_orbit(s0: FlowState, n_returns: int, params: ModelParams):
    """States at the first n_returns crossings of the w=0 section.

    The flow is marched phase-by-phase, so crossing states carry no
    time-stepping error; an initial state off the section first runs to it.
    """
    out = []
    s = s0
    horizon = n_returns * (params.b + params.tau_max) + 2.0
    for kind, t0, t1, state0, data in _phases(s0, s0.t + horizon, params):
        if kind == "relax":
            (x, y, w, z) = state0
            c, span = data
            z1, _ = evolve_fibers(params, z, span)
            x1, y1 = _apply_base(params, x, y)
            out.append(FlowState(x1, y1, 0.0, z1, t1))
            if len(out) >= n_returns:
                break
    return out


def sample_trajectory(
    s0: FlowState, t_end: float, dt_out: float, params: ModelParams
):
    """Sample (t, w, z) on a uniform output grid; internally event-exact.

    Returns (t (G,), w (G,), z (G, N)).
    """
    grid = np.arange(0.0, t_end, dt_out) + s0.t
    tw = np.empty_like(grid)
    tz = np.empty((grid.size, params.N))
    for kind, t0, t1, (x, y, w, z), data in _phases(s0, s0.t + t_end, params):
        lo = np.searchsorted(grid, t0, side="left")
        hi = np.searchsorted(grid, t1, side="left")
        if hi == lo:
            continue
        dt = grid[lo:hi] - t0
        if kind == "kick":
            tw[lo:hi] = w + dt
            tz[lo:hi] = wrap(z[None, :] + dt[:, None] * data[None, :])
        else:
            c, _ = data
            tw[lo:hi] = w + c * dt
            zs, _ = evolve_fibers(params, np.broadcast_to(z, (dt.size, params.N)), dt)
            tz[lo:hi] = zs
    return grid, tw, tz


def activation_raster(s0: FlowState, t_end: float, params: ModelParams):
    """All fiber crossings of 1/2, as (time, unit) pairs sorted by time.

    Crossings happen only during kick phases (1/2 is a fixed point of every
    relax phase) and are solved from the linear congruence exactly.
    """
    events: list[tuple[float, int]] = []
    for kind, t0, t1, (x, y, w, z), data in _phases(s0, s0.t + t_end, params):
        if kind != "kick":
            continue
        for i in range(params.N):
            rate = data[i]
            if rate <= 0:
                continue
            # crossings of z_i + rate*s = 1/2 mod 1 for s in [0, t1 - t0)
            span = t1 - t0
            k_lo = math.ceil(z[i] - 0.5)
            k_hi = math.ceil(z[i] + rate * span - 0.5)
            for k in range(k_lo, k_hi):
                ts = (0.5 + k - z[i]) / rate
                if 0.0 <= ts < span:
                    events.append((t0 + ts, i))
    events.sort()
    return events
