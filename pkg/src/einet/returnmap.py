"""Exact first-return map on the base section, its tangent cocycle, Lyapunov
spectrum estimation, Birkhoff averages and the fiber-synchronization probe.

The return map factors through the intermediate section: a rigid fiber
rotation driven by the base x-coordinate, followed by the base automorphism
and a simultaneous north-south flow of all fibers for the (state-dependent)
crossing time.  The skew-product structure makes the differential block
lower-triangular; the crossing time is locally constant and contributes no
derivative terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import OnSingularity
from .flows import ns_evolve
from .params import ModelParams, return_time
from .torus import circle_dist, dist_to_poles, wrap

SINGULARITY_TOL = 1e-12

OBSERVABLES = ("one", "cos_z", "in_sink", "inhibiting", "activation_rate")


@dataclass(frozen=True)
class SectionPoint:
    """Point on the return section: base (x, y) on T^2, fibers z on T^N."""

    x: float
    y: float
    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=float)
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", float(wrap(self.x)))
        object.__setattr__(self, "y", float(wrap(self.y)))

    @property
    def N(self) -> int:
        return self.z.size


@dataclass(frozen=True)
class StepRecord:
    """One application of the return map.

    ``tau`` is the duration of the flow leg (the full section-to-section time
    is b + tau); activations are (unit, time-within-rotation-phase) pairs for
    every fiber crossing of 1/2, which can only happen while the kick is
    being applied.
    """

    next: SectionPoint
    tau: float
    activations: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class TangentFrame:
    """Orthonormal tangent frame with accumulated per-direction log stretches."""

    basis: np.ndarray
    log_norms: np.ndarray

    @classmethod
    def identity(cls, dim: int) -> "TangentFrame":
        return cls(np.eye(dim), np.zeros(dim))


# ---------------------------------------------------------------------------
# grouping of identical unit specs (lets N=20 networks evolve vectorized)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _fiber_groups(fibers: tuple) -> tuple[tuple[int, ...], ...]:
    groups: dict = {}
    for i, f in enumerate(fibers):
        groups.setdefault(f, []).append(i)
    return tuple(tuple(v) for v in groups.values())


@lru_cache(maxsize=None)
def _rot_groups(rotations: tuple) -> tuple[tuple[int, ...], ...]:
    groups: dict = {}
    for i, r in enumerate(rotations):
        groups.setdefault(r, []).append(i)
    return tuple(tuple(v) for v in groups.values())


def rotation_shifts(params: ModelParams, x):
    """Lift values r_i(x) for all units; x scalar -> (N,), x (B,) -> (B, N)."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (params.N,))
    for idx in _rot_groups(params.rotations):
        out[..., list(idx)] = np.asarray(params.rotations[idx[0]].lift(x))[..., None]
    return out


def rotation_derivs(params: ModelParams, x):
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (params.N,))
    for idx in _rot_groups(params.rotations):
        out[..., list(idx)] = np.asarray(params.rotations[idx[0]].deriv(x))[..., None]
    return out


def evolve_fibers(params: ModelParams, z, tau):
    """Apply each unit's flow for its step duration.

    z: (..., N); tau: scalar or (...,). Returns (z_end, dz) arrays.
    """
    z = np.asarray(z, dtype=float)
    tau = np.asarray(tau, dtype=float)
    z_end = np.empty_like(z)
    dz = np.empty_like(z)
    for idx in _fiber_groups(params.fibers):
        cols = list(idx)
        tcol = tau if tau.ndim == 0 else tau[..., None]
        ev = ns_evolve(params.fibers[idx[0]], z[..., cols], tcol)
        z_end[..., cols] = ev.z_end
        dz[..., cols] = ev.dz
    return z_end, dz


# ---------------------------------------------------------------------------
# the return map
# ---------------------------------------------------------------------------

def h1(p: SectionPoint, params: ModelParams) -> SectionPoint:
    """Kick leg: base frozen, each fiber advanced by its response to x."""
    z = wrap(p.z + rotation_shifts(params, p.x))
    return SectionPoint(p.x, p.y, z)


def h2(q: SectionPoint, params: ModelParams) -> SectionPoint:
    """Flow leg: base advanced by the automorphism, fibers flowed for the
    crossing time determined by the current fiber configuration."""
    tau = return_time(q.z, params)
    a = params.anosov.matrix
    x = wrap(a[0, 0] * q.x + a[0, 1] * q.y)
    y = wrap(a[1, 0] * q.x + a[1, 1] * q.y)
    z, _ = evolve_fibers(params, q.z, tau)
    return SectionPoint(x, y, z)


def _activations(z, shifts, b: float):
    """Crossing times of 1/2 during the kick: solve z + (t/b) r = 1/2 mod 1."""
    acts = []
    for i, (zi, ri) in enumerate(zip(z, shifts)):
        if ri <= 0:
            continue
        k_lo = math.ceil(zi - 0.5)
        k_hi = math.ceil(zi + ri - 0.5)  # exclusive
        for k in range(k_lo, k_hi):
            t = b * (0.5 + k - zi) / ri
            if 0.0 <= t < b:
                acts.append((i, t))
    acts.sort(key=lambda a: (a[1], a[0]))
    return tuple(acts)


def step(p: SectionPoint, params: ModelParams) -> StepRecord:
    """One full return: kick, then flow; records duration and activations."""
    shifts = rotation_shifts(params, p.x)
    mid = SectionPoint(p.x, p.y, wrap(p.z + shifts))
    tau = return_time(mid.z, params)
    nxt = h2(mid, params)
    return StepRecord(nxt, tau, _activations(p.z, shifts, params.b))


def _step_inverse(p: SectionPoint, params: ModelParams) -> SectionPoint:
    """Inverse of ``step`` off the singularity set (testing aid).

    The inhibition count is invariant along the flow leg, so the crossing
    time is recoverable from the landed fiber configuration.
    """
    a = params.anosov.matrix
    inv = np.linalg.inv(a)
    x = wrap(inv[0, 0] * p.x + inv[0, 1] * p.y)
    y = wrap(inv[1, 0] * p.x + inv[1, 1] * p.y)
    tau = return_time(p.z, params)
    z_mid, _ = evolve_fibers(params, p.z, -tau)
    z = wrap(z_mid - rotation_shifts(params, x))
    return SectionPoint(x, y, z)


# ---------------------------------------------------------------------------
# tangent dynamics
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _all_breakpoints(rotations: tuple) -> np.ndarray:
    pts = np.concatenate([r.breakpoints() for r in rotations])
    out = np.sort(pts)
    out.setflags(write=False)
    return out


def _near_breakpoint(params: ModelParams, x: float) -> bool:
    pts = _all_breakpoints(params.rotations)
    i = np.searchsorted(pts, x)
    for j in (i - 1, i % pts.size):
        if abs(circle_dist(pts[j], x)) <= SINGULARITY_TOL:
            return True
    return False


def step_jacobian(p: SectionPoint, params: ModelParams) -> np.ndarray:
    """Differential of the return map at p (block lower-triangular).

    Raises OnSingularity when a rotated fiber coordinate sits at a pole or
    the base x-coordinate sits at a rotation-map breakpoint (within 1e-12).
    The crossing time is locally constant and is differentiated as such.
    """
    shifts = rotation_shifts(params, p.x)
    z_hat = wrap(p.z + shifts)
    if float(np.min(dist_to_poles(z_hat))) <= SINGULARITY_TOL:
        raise OnSingularity("rotated fiber coordinate at a pole")
    if _near_breakpoint(params, p.x):
        raise OnSingularity("base x-coordinate at a rotation-map breakpoint")
    tau = return_time(z_hat, params)
    _, dz = evolve_fibers(params, z_hat, tau)
    rp = rotation_derivs(params, p.x)
    n = params.N
    jac = np.zeros((2 + n, 2 + n))
    jac[:2, :2] = params.anosov.matrix
    jac[2:, 0] = dz * rp
    jac[2:, 2:] = np.diag(dz)
    return jac


def tangent_step(p: SectionPoint, frame: TangentFrame, params: ModelParams) -> TangentFrame:
    """Push the orthonormal frame through the differential and re-orthonormalize."""
    jac = step_jacobian(p, params)
    q, r = np.linalg.qr(jac @ frame.basis)
    sgn = np.sign(np.diag(r))
    sgn[sgn == 0] = 1.0
    q = q * sgn
    diag = np.abs(np.diag(r))
    ortho_defect = float(np.max(np.abs(q.T @ q - np.eye(q.shape[0]))))
    if ortho_defect > 1e-10:
        raise OnSingularity(f"frame lost orthonormality (defect {ortho_defect:.2e})")
    return TangentFrame(q, frame.log_norms + np.log(diag))


@dataclass(frozen=True)
class LyapunovResult:
    exponents: np.ndarray      # sorted descending
    stderr: np.ndarray         # aligned with exponents
    n_steps: int
    n_restarts: int

    def to_dict(self) -> dict:
        return {
            "exponents": self.exponents.tolist(),
            "stderr": self.stderr.tolist(),
            "n_steps": self.n_steps,
            "n_restarts": self.n_restarts,
        }


def _perturb(p: SectionPoint, rng) -> SectionPoint:
    eps = 1e-9
    return SectionPoint(
        wrap(p.x + eps * rng.uniform(0.5, 1.0)),
        wrap(p.y + eps * rng.uniform(0.5, 1.0)),
        wrap(p.z + eps * rng.uniform(0.5, 1.0, p.z.shape)),
    )


class _FusedCocycle:
    """Scalar-arithmetic inner loop for the Benettin iteration.

    Recomputes nothing twice: one rotation evaluation and one fiber
    evolution per step feed both the next point and the differential.
    Falls back to the array path for tabulated fibers.
    """

    def __init__(self, params: ModelParams):
        from .flows import sine_scalar_evolve

        self.params = params
        self.scalar_evolve = sine_scalar_evolve
        self.scalar_ok = all(f.kind in ("sine", "projective") for f in params.fibers)
        self.rates = [f.rate for f in params.fibers]
        a = params.anosov.matrix
        self.a = (float(a[0, 0]), float(a[0, 1]), float(a[1, 0]), float(a[1, 1]))
        self.table = params.phi.table
        self.b = params.b
        self.breaks = _all_breakpoints(params.rotations)
        self.jac = np.zeros((2 + params.N, 2 + params.N))
        self.jac[:2, :2] = params.anosov.matrix

    def advance(self, x: float, y: float, z: list, basis: np.ndarray):
        """One step: returns (x', y', z', Q, log-stretch vector)."""
        import math as m

        params = self.params
        rots = params.rotations
        n = params.N
        z_hat = [0.0] * n
        rp = [0.0] * n
        for i in range(n):
            v = z[i] + rots[i].lift_scalar(x)
            v -= m.floor(v)
            if v >= 1.0:
                v = 0.0
            z_hat[i] = v
            rp[i] = rots[i].deriv_scalar(x)
            d = min(v, 1.0 - v, abs(v - 0.5))
            if d <= SINGULARITY_TOL:
                raise OnSingularity("rotated fiber coordinate at a pole")
        j = int(np.searchsorted(self.breaks, x))
        for jj in (j - 1, j % self.breaks.size):
            dd = abs(self.breaks[jj] - x)
            if min(dd, 1.0 - dd) <= SINGULARITY_TOL:
                raise OnSingularity("base x-coordinate at a rotation-map breakpoint")
        count = sum(1 for v in z_hat if v > 0.5)
        tau = (1.0 - self.b) / (1.0 - self.table[count])
        z2 = [0.0] * n
        jac = self.jac
        if self.scalar_ok:
            for i in range(n):
                zi, dzi = self.scalar_evolve(self.rates[i], z_hat[i], tau)
                z2[i] = zi
                jac[2 + i, 0] = dzi * rp[i]
                jac[2 + i, 2 + i] = dzi
        else:
            zarr, dzarr = evolve_fibers(params, np.array(z_hat), tau)
            for i in range(n):
                z2[i] = float(zarr[i])
                jac[2 + i, 0] = dzarr[i] * rp[i]
                jac[2 + i, 2 + i] = dzarr[i]
        q, r = np.linalg.qr(jac @ basis)
        diag = np.diag(r)
        sgn = np.sign(diag)
        sgn[sgn == 0] = 1.0
        q = q * sgn
        a00, a01, a10, a11 = self.a
        x2 = a00 * x + a01 * y
        x2 -= m.floor(x2)
        y2 = a10 * x + a11 * y
        y2 -= m.floor(y2)
        if x2 >= 1.0:
            x2 = 0.0
        if y2 >= 1.0:
            y2 = 0.0
        return x2, y2, z2, q, np.log(np.abs(diag))


def lyapunov_spectrum(
    p0: SectionPoint,
    n_transient: int,
    n_iter: int,
    params: ModelParams,
    seed: int = 0,
    convergence_every: int = 0,
):
    """Benettin-style QR estimate of the (2+N) return-map exponents.

    Orbit segments hitting the singularity set are abandoned and restarted
    from a 1e-9 perturbation (counted in the result).  Standard errors are
    running-mean errors of the per-step log stretches.  When
    ``convergence_every`` > 0, also returns a list of (step, running
    exponents) checkpoints.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE1]))
    dim = 2 + params.N
    kernel = _FusedCocycle(params)
    x, y = p0.x, p0.y
    z = [float(v) for v in p0.z]
    basis = np.eye(dim)
    restarts = 0

    k = 0
    while k < n_transient:
        try:
            x, y, z, basis, _ = kernel.advance(x, y, z, basis)
            k += 1
        except OnSingularity:
            restarts += 1
            p = _perturb(SectionPoint(x, y, np.array(z)), rng)
            x, y, z = p.x, p.y, list(p.z)

    sums = np.zeros(dim)
    sq = np.zeros(dim)
    used = 0
    track: list[tuple[int, np.ndarray]] = []
    while used < n_iter:
        try:
            x, y, z, basis, inc = kernel.advance(x, y, z, basis)
        except OnSingularity:
            restarts += 1
            p = _perturb(SectionPoint(x, y, np.array(z)), rng)
            x, y, z = p.x, p.y, list(p.z)
            continue
        sums += inc
        sq += inc * inc
        used += 1
        if convergence_every and used % convergence_every == 0:
            track.append((used, sums / used))
        if used % 512 == 0:
            defect = float(np.max(np.abs(basis.T @ basis - np.eye(dim))))
            assert defect < 1e-10, f"frame lost orthonormality ({defect:.2e})"

    mean = sums / used
    var = np.maximum(sq / used - mean * mean, 0.0)
    se = np.sqrt(var / used)
    order = np.argsort(mean)[::-1]
    result = LyapunovResult(mean[order], se[order], used, restarts)
    return (result, track) if convergence_every else result


# ---------------------------------------------------------------------------
# batched orbits (used by averages, synchronization, acceptance experiments)
# ---------------------------------------------------------------------------

def batch_step(params: ModelParams, x, y, z):
    """Vectorized return map over a batch: x,y (B,), z (B,N).

    Returns (x', y', z', tau (B,), activation counts (B, N)).
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    shifts = rotation_shifts(params, x)
    z_hat = wrap(z + shifts)
    tau = np.asarray(return_time(z_hat, params))
    a = params.anosov.matrix
    x2 = wrap(a[0, 0] * x + a[0, 1] * y)
    y2 = wrap(a[1, 0] * x + a[1, 1] * y)
    z2, _ = evolve_fibers(params, z_hat, tau)
    counts = np.ceil(z + shifts - 0.5) - np.ceil(z - 0.5)
    return x2, y2, z2, tau, counts.astype(int)


def observable_panel(params: ModelParams, z, tau, counts):
    """Evaluate the observable catalog at a batch of section states."""
    dm = np.array([f.delta_minus for f in params.fibers])
    vals = {
        "one": np.ones(z.shape[0]),
        "cos_z": np.cos(2 * np.pi * z).mean(axis=1),
        "in_sink": (np.minimum(z, 1.0 - z) <= dm).mean(axis=1),
        "inhibiting": ((z > 0.5) & (z < 1.0)).mean(axis=1),
        "activation_rate": counts.sum(axis=1).astype(float),
    }
    return vals


def birkhoff_panel(
    params: ModelParams,
    points: list[SectionPoint],
    n: int,
    flow_weighted: bool = True,
):
    """Time averages of the whole observable catalog along several orbits.

    Flow weighting uses the full section-to-section duration b + tau per
    step; the activation rate is total crossings divided by total weight.
    Returns {tag: (B,) array}.
    """
    xs = np.array([p.x for p in points])
    ys = np.array([p.y for p in points])
    zs = np.stack([p.z for p in points])
    b = zs.shape[0]
    acc = {tag: np.zeros(b) for tag in OBSERVABLES}
    wsum = np.zeros(b)
    for _ in range(n):
        x2, y2, z2, tau, counts = batch_step(params, xs, ys, zs)
        w = (params.b + tau) if flow_weighted else np.ones_like(tau)
        vals = observable_panel(params, zs, tau, counts)
        for tag in OBSERVABLES:
            if tag == "activation_rate":
                acc[tag] += vals[tag]  # raw counts, normalized by total weight
            else:
                acc[tag] += w * vals[tag]
        wsum += w
        xs, ys, zs = x2, y2, z2
    return {tag: acc[tag] / wsum for tag in OBSERVABLES}


def birkhoff_average(
    p0: SectionPoint,
    observable: str,
    n: int,
    params: ModelParams,
    flow_weighted: bool = True,
) -> float:
    """Time average of one catalog observable along the orbit of p0."""
    if observable not in OBSERVABLES:
        raise ValueError(f"observable must be one of {OBSERVABLES}")
    panel = birkhoff_panel(params, [p0], n, flow_weighted=flow_weighted)
    return float(panel[observable][0])


def sync_test(base0, z_a, z_b, n: int, params: ModelParams) -> np.ndarray:
    """Iterate two fiber configurations under identical base driving and
    record the sup circle distance of the fibers after each return."""
    x0, y0 = float(wrap(base0[0])), float(wrap(base0[1]))
    xs = np.array([x0, x0])
    ys = np.array([y0, y0])
    zs = np.stack([wrap(np.asarray(z_a, float)), wrap(np.asarray(z_b, float))])
    out = np.empty(n + 1)
    out[0] = float(np.max(circle_dist(zs[0], zs[1])))
    for k in range(1, n + 1):
        xs, ys, zs, _, _ = batch_step(params, xs, ys, zs)
        out[k] = float(np.max(circle_dist(zs[0], zs[1])))
    return out


def sync_trials(params: ModelParams, n_trials: int, n_steps: int, tol: float, seed: int):
    """Seeded batch of synchronization trials; returns (hit step or -1) per trial
    and the full distance series (trials, n_steps+1)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    series = np.empty((n_trials, n_steps + 1))
    for t in range(n_trials):
        base = rng.random(2)
        za = rng.random(params.N)
        zb = rng.random(params.N)
        series[t] = sync_test(base, za, zb, n_steps, params)
    hit = np.full(n_trials, -1, dtype=int)
    for t in range(n_trials):
        idx = np.nonzero(series[t] < tol)[0]
        if idx.size:
            hit[t] = int(idx[0])
    return hit, series
