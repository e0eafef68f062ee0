"""Model data, derived constants, and numerical certification of assumptions.

A network instance consists of a hyperbolic toral automorphism driving the
base, N north-south circle fibers, N degree->=1 rotation response maps, and
an inhibition table Phi.  ``validate_params`` certifies the standing
assumptions on a grid and reports signed margins; failures are report
entries, never exceptions, so broken fixtures can still be inspected.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import InfeasibleGeometry, NotHyperbolic, SchemaError
from .flows import ns_evolve
from .torus import wrap

SCHEMA = "ei-params/1"


# ---------------------------------------------------------------------------
# base automorphism
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnosovSpec:
    """Hyperbolic 2x2 integer matrix with its expansion data.

    ``lam`` is the log of the spectral radius, ``beta`` the |cosine| of the
    angle between the unstable direction and the x-axis.
    """

    entries: tuple[tuple[int, int], tuple[int, int]]
    lam: float
    unstable_dir: tuple[float, float]
    stable_dir: tuple[float, float]
    beta: float

    @property
    def matrix(self) -> np.ndarray:
        return _amat(self.entries)

    @property
    def expansion(self) -> float:
        return math.exp(self.lam)


@lru_cache(maxsize=None)
def _amat(entries) -> np.ndarray:
    m = np.array(entries, dtype=float)
    m.setflags(write=False)
    return m


def _eigenvector(entries, mu: float) -> tuple[float, float]:
    (a, b), (c, d) = entries
    if b != 0:
        v = np.array([b, mu - a], dtype=float)
    else:
        v = np.array([mu - d, c], dtype=float)
    v /= np.hypot(v[0], v[1])
    if v[0] < 0:
        v = -v
    return (float(v[0]), float(v[1]))


def anosov_data(entries) -> AnosovSpec:
    """Build the base-map spec from an integer 2x2 matrix.

    Raises NotHyperbolic when |trace| <= 2 or |det| != 1.
    """
    m = np.asarray(entries)
    if m.shape != (2, 2) or not np.all(m == np.round(m)):
        raise NotHyperbolic(f"expected an integer 2x2 matrix, got {entries!r}")
    m = m.astype(int)
    tr = int(m[0, 0] + m[1, 1])
    det = int(round(float(np.linalg.det(m))))
    if abs(det) != 1:
        raise NotHyperbolic(f"|det| must be 1, got {det}")
    if abs(tr) <= 2:
        raise NotHyperbolic(f"|trace| must exceed 2, got {tr}")
    disc = math.sqrt(tr * tr - 4 * det)
    mu1 = (tr + disc) / 2.0
    mu2 = (tr - disc) / 2.0
    big, small = (mu1, mu2) if abs(mu1) >= abs(mu2) else (mu2, mu1)
    ent = tuple(tuple(int(x) for x in row) for row in m)
    unstable = _eigenvector(ent, big)
    stable = _eigenvector(ent, small)
    spec = AnosovSpec(
        entries=ent,
        lam=math.log(abs(big)),
        unstable_dir=unstable,
        stable_dir=stable,
        beta=abs(unstable[0]),
    )
    resid = spec.matrix @ np.array(unstable) - big * np.array(unstable)
    if float(np.max(np.abs(resid))) > 1e-12 * max(1.0, abs(big)):
        raise NotHyperbolic(f"eigenvector residual too large: {resid}")
    return spec


# ---------------------------------------------------------------------------
# fiber flows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NSFlowSpec:
    """One unit's north-south circle flow plus its certified zones.

    ``I+`` = [1/2 - delta_plus, 1/2 + delta_plus] around the repelling pole,
    ``I-`` = [-delta_minus, delta_minus] around the attracting pole, and
    ``contraction_c`` is the contraction constant the validator checks on I-.
    """

    kind: str  # "sine" | "projective" | "tabulated"
    delta_plus: float
    delta_minus: float
    contraction_c: float
    amplitude: float = 0.0      # sine family: v(z) = -amplitude*sin(2 pi z)
    alpha: float = 0.0          # projective family: exp(t*diag(alpha, -alpha)) action
    samples: tuple = ()         # tabulated field values on a uniform grid over [0,1)

    def __post_init__(self):
        if self.kind not in ("sine", "projective", "tabulated"):
            raise ValueError(f"unknown fiber kind {self.kind!r}")
        if self.delta_plus <= 0 or self.delta_minus <= 0:
            raise ValueError("zone half-widths must be positive")
        if self.kind == "sine" and self.amplitude <= 0:
            raise ValueError("sine amplitude must be positive")
        if self.kind == "projective" and self.alpha <= 0:
            raise ValueError("projective alpha must be positive")
        if self.kind == "tabulated":
            n = len(self.samples)
            if n < 8 or n % 2:
                raise ValueError("tabulated field needs an even number (>=8) of samples")

    @property
    def rate(self) -> float:
        """Linearization rate at the poles: v'(1/2) = rate, v'(0) = -rate."""
        if self.kind == "sine":
            return 2.0 * math.pi * self.amplitude
        if self.kind == "projective":
            return 2.0 * self.alpha
        return float(self.field_spline_derivative()(0.5))

    @property
    def lambda_minus(self) -> float:
        if self.kind == "tabulated":
            return float(self.field_spline_derivative()(0.0))
        return -self.rate

    @property
    def lambda_plus(self) -> float:
        return self.rate if self.kind != "tabulated" else float(
            self.field_spline_derivative()(0.5)
        )

    def field_spline(self):
        return _tab_spline(self.samples)

    def field_spline_derivative(self):
        return _tab_spline(self.samples).derivative()

    def value(self, z):
        """Vector field value v(z)."""
        if self.kind == "sine":
            return -self.amplitude * np.sin(2 * np.pi * np.asarray(z))
        if self.kind == "projective":
            return -(self.alpha / np.pi) * np.sin(2 * np.pi * np.asarray(z))
        return self.field_spline()(wrap(z))


def sine_flow(amplitude, delta_plus, delta_minus, contraction_c=0.5) -> NSFlowSpec:
    return NSFlowSpec(
        kind="sine",
        amplitude=float(amplitude),
        delta_plus=float(delta_plus),
        delta_minus=float(delta_minus),
        contraction_c=float(contraction_c),
    )


def projective_flow(alpha, delta_plus, delta_minus, contraction_c=0.5) -> NSFlowSpec:
    return NSFlowSpec(
        kind="projective",
        alpha=float(alpha),
        delta_plus=float(delta_plus),
        delta_minus=float(delta_minus),
        contraction_c=float(contraction_c),
    )


def tabulated_flow(samples, delta_plus, delta_minus, contraction_c=0.5) -> NSFlowSpec:
    """Tabulated C^2 field given by values on the uniform grid k/len(samples).

    The samples must vanish at 0 and 1/2 and be negative on (0,1/2),
    positive on (1/2,1) so the flow is north-south.
    """
    samples = tuple(float(s) for s in samples)
    n = len(samples)
    if abs(samples[0]) > 1e-12 or abs(samples[n // 2]) > 1e-12:
        raise ValueError("tabulated field must vanish at z=0 and z=1/2")
    lower = np.array(samples[1 : n // 2])
    upper = np.array(samples[n // 2 + 1 :])
    if not (np.all(lower < 0) and np.all(upper > 0)):
        raise ValueError("tabulated field must be negative on (0,1/2), positive on (1/2,1)")
    return NSFlowSpec(
        kind="tabulated",
        samples=samples,
        delta_plus=float(delta_plus),
        delta_minus=float(delta_minus),
        contraction_c=float(contraction_c),
    )


@lru_cache(maxsize=None)
def _tab_spline(samples: tuple):
    from scipy.interpolate import CubicSpline

    n = len(samples)
    grid = np.linspace(0.0, 1.0, n + 1)
    vals = np.array(samples + (samples[0],))
    return CubicSpline(grid, vals, bc_type="periodic")


# ---------------------------------------------------------------------------
# rotation response maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotationMapSpec:
    """Piecewise-analytic degree-kappa circle map from the steep-arc construction.

    kappa equally spaced affine arcs of slope (1+steepness_margin)/epsilon map
    onto [d, 1-d] (mod 1); in between, C^1 connectors with a cosine-profile
    slope rise by 2d while staying above ``c_prime``.  The stored lift has
    r(0) in [0, 1).
    """

    kappa: int
    epsilon: float
    d: float
    c_prime: float
    phase: float
    steepness_margin: float
    arc_slope: float
    arc_len: float
    conn_len: float
    conn_w: float
    conn_smid: float
    anchor: int

    # -- closed-form pieces -------------------------------------------------

    def _raw(self, s):
        """Value of the unanchored lift at block coordinate s in [0,1)."""
        s = np.asarray(s, dtype=float)
        j = np.minimum(np.floor(s * self.kappa), self.kappa - 1)
        o = s - j / self.kappa
        on_arc = o <= self.arc_len
        xi = np.clip(o - self.arc_len, 0.0, self.conn_len)
        val_arc = self.d + self.arc_slope * o
        val_conn = (1.0 - self.d) + self._conn_value(xi)
        return j + np.where(on_arc, val_arc, val_conn)

    def _raw_deriv(self, s):
        s = np.asarray(s, dtype=float)
        j = np.minimum(np.floor(s * self.kappa), self.kappa - 1)
        o = s - j / self.kappa
        on_arc = o <= self.arc_len
        xi = np.clip(o - self.arc_len, 0.0, self.conn_len)
        return np.where(on_arc, self.arc_slope, self._conn_slope(xi))

    def _bump_int(self, xi):
        """Integral of cos^2(pi xi / (2 w)) from 0 to xi (clamped at w)."""
        w = self.conn_w
        xc = np.clip(xi, 0.0, w)
        return xc / 2.0 + (w / (2.0 * np.pi)) * np.sin(np.pi * xc / w)

    def _conn_slope(self, xi):
        w, L = self.conn_w, self.conn_len
        rise = self.arc_slope - self.conn_smid
        bump = np.where(xi < w, np.cos(np.pi * np.minimum(xi, w) / (2 * w)) ** 2, 0.0)
        mirrored = np.where(
            xi > L - w, np.cos(np.pi * np.minimum(L - xi, w) / (2 * w)) ** 2, 0.0
        )
        return self.conn_smid + rise * (bump + mirrored)

    def _conn_value(self, xi):
        w, L = self.conn_w, self.conn_len
        rise = self.arc_slope - self.conn_smid
        left = self._bump_int(xi)
        right = np.where(xi > L - w, w / 2.0 - self._bump_int(L - xi), 0.0)
        return self.conn_smid * xi + rise * (left + right)

    # -- public evaluation ---------------------------------------------------

    def lift(self, x):
        """Increasing real lift with lift(0) in [0,1) and lift(x+1) = lift(x)+kappa."""
        x = np.asarray(x, dtype=float)
        rel = x - self.phase
        k = np.floor(rel)
        out = self._raw(rel - k) + self.kappa * k + self.anchor
        return out if out.ndim else float(out)

    def value(self, x):
        """Circle value r(x) in [0,1)."""
        return wrap(self.lift(x))

    def deriv(self, x):
        """Slope r'(x) (> 0 everywhere)."""
        x = np.asarray(x, dtype=float)
        rel = x - self.phase
        out = self._raw_deriv(rel - np.floor(rel))
        return out if out.ndim else float(out)

    # scalar fast paths (hot loops); same formulas as the array versions
    def lift_scalar(self, x: float) -> float:
        rel = x - self.phase
        k = math.floor(rel)
        s = rel - k
        j = min(int(s * self.kappa), self.kappa - 1)
        o = s - j / self.kappa
        if o <= self.arc_len:
            val = self.d + self.arc_slope * o
        else:
            xi = min(o - self.arc_len, self.conn_len)
            w, L = self.conn_w, self.conn_len
            rise = self.arc_slope - self.conn_smid
            xc = min(xi, w)
            left = xc / 2.0 + (w / (2.0 * math.pi)) * math.sin(math.pi * xc / w)
            right = 0.0
            if xi > L - w:
                xr = min(L - xi, w)
                right = w / 2.0 - (xr / 2.0 + (w / (2.0 * math.pi)) * math.sin(math.pi * xr / w))
            val = (1.0 - self.d) + self.conn_smid * xi + rise * (left + right)
        return j + val + self.kappa * k + self.anchor

    def deriv_scalar(self, x: float) -> float:
        rel = x - self.phase
        s = rel - math.floor(rel)
        j = min(int(s * self.kappa), self.kappa - 1)
        o = s - j / self.kappa
        if o <= self.arc_len:
            return self.arc_slope
        xi = min(o - self.arc_len, self.conn_len)
        w, L = self.conn_w, self.conn_len
        rise = self.arc_slope - self.conn_smid
        out = self.conn_smid
        if xi < w:
            out += rise * math.cos(math.pi * xi / (2 * w)) ** 2
        if xi > L - w:
            out += rise * math.cos(math.pi * (L - xi) / (2 * w)) ** 2
        return out

    @property
    def min_slope(self) -> float:
        return self.conn_smid

    @property
    def max_slope(self) -> float:
        return self.arc_slope

    @property
    def max_curvature(self) -> float:
        """Largest |r''| over the map (attained inside the matching zones)."""
        return (self.arc_slope - self.conn_smid) * np.pi / (2.0 * self.conn_w)

    def breakpoints(self) -> np.ndarray:
        """x-positions (in [0,1)) of the piece joints, for singularity flagging."""
        pts = []
        for j in range(self.kappa):
            start = self.phase + j / self.kappa
            pts += [start, start + self.arc_len,
                    start + self.arc_len + self.conn_w,
                    start + 1.0 / self.kappa - self.conn_w]
        return np.sort(wrap(np.array(pts)))


def build_rotation_map(
    kappa: int,
    epsilon: float,
    d: float,
    connector_slope_floor: float,
    phase: float = 0.0,
    steepness_margin: float = 0.01,
) -> RotationMapSpec:
    """Construct the steep-arc rotation map.

    kappa disjoint arcs of length epsilon*(1-2d)/(1+steepness_margin) carry
    constant slope (1+steepness_margin)/epsilon and map onto [d+l, 1-d+l];
    the margin keeps the steepness check strictly positive.  Connectors are
    monotone C^1 (in fact C^2) with slope > connector_slope_floor.
    Raises InfeasibleGeometry when the pieces cannot coexist.
    """
    if kappa < 1 or int(kappa) != kappa:
        raise ValueError("kappa must be a positive integer")
    if not (0.0 < d < 0.5):
        raise ValueError("d must lie in (0, 1/2)")
    if epsilon <= 0 or connector_slope_floor <= 0 or steepness_margin < 0:
        raise ValueError("epsilon, slope floor and steepness margin must be positive")
    kappa = int(kappa)
    arc_slope = (1.0 + steepness_margin) / epsilon
    arc_len = (1.0 - 2.0 * d) / arc_slope
    if kappa * arc_len >= 1.0:
        raise InfeasibleGeometry(
            f"{kappa} steep arcs of length {arc_len:.4g} do not fit in one period"
        )
    conn_len = 1.0 / kappa - arc_len
    rise = 2.0 * d
    if rise <= connector_slope_floor * conn_len:
        raise InfeasibleGeometry(
            "connector must rise {:.4g} over length {:.4g}; slope floor {:.4g} "
            "leaves no room".format(rise, conn_len, connector_slope_floor)
        )
    w = min(conn_len / 4.0, 0.5 * (rise - connector_slope_floor * conn_len)
            / (arc_slope - connector_slope_floor))
    smid = (rise - arc_slope * w) / (conn_len - w)
    spec = RotationMapSpec(
        kappa=kappa,
        epsilon=float(epsilon),
        d=float(d),
        c_prime=float(connector_slope_floor),
        phase=float(wrap(phase) % (1.0 / kappa)),
        steepness_margin=float(steepness_margin),
        arc_slope=arc_slope,
        arc_len=arc_len,
        conn_len=conn_len,
        conn_w=float(w),
        conn_smid=float(smid),
        anchor=0,
    )
    shift = -int(math.floor(spec.lift(0.0)))
    spec = RotationMapSpec(**{**asdict(spec), "anchor": shift})
    _grid_check(spec)
    return spec


def _grid_check(spec: RotationMapSpec, n: int = 4096) -> None:
    """Build-time sanity grid: monotone, degree, slope window, r(0) in [0,1)."""
    x = np.linspace(0.0, 1.0, n, endpoint=False)
    vals = spec.lift(x)
    der = spec.deriv(x)
    assert np.all(np.diff(vals) > 0), "rotation lift not increasing"
    assert abs((spec.lift(1.0) - spec.lift(0.0)) - spec.kappa) < 1e-9, "degree mismatch"
    assert 0.0 <= spec.lift(0.0) < 1.0, "lift anchor out of range"
    assert np.all(der > 0.999 * spec.conn_smid), "slope fell below connector minimum"
    assert der.max() <= spec.arc_slope * (1 + 1e-12), "slope exceeded arc slope"


# ---------------------------------------------------------------------------
# inhibition and the assembled model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InhibitionSpec:
    """Speed-reduction table Phi(0..N); structural checks only here, the
    semantic requirements (Phi(0)=0, increasing, Phi(N)<1) are validator
    report entries so broken fixtures remain loadable."""

    table: tuple[float, ...]

    def __post_init__(self):
        if len(self.table) < 1:
            raise ValueError("inhibition table must have at least one entry")

    def __call__(self, n: int) -> float:
        return self.table[n]


@dataclass(frozen=True)
class ModelParams:
    """Complete description of one network instance."""

    N: int
    b: float
    anosov: AnosovSpec
    phi: InhibitionSpec
    fibers: tuple[NSFlowSpec, ...]
    rotations: tuple[RotationMapSpec, ...]
    tau_max: float = field(init=False)

    def __post_init__(self):
        if not (0.0 < self.b < 1.0):
            raise ValueError("b must lie in (0,1)")
        if len(self.fibers) != self.N or len(self.rotations) != self.N:
            raise ValueError("need exactly N fiber flows and N rotation maps")
        if len(self.phi.table) != self.N + 1:
            raise ValueError("inhibition table must have N+1 entries")
        head = 1.0 - self.phi.table[self.N]
        tau = (1.0 - self.b) / head if head > 0 else math.inf
        object.__setattr__(self, "tau_max", tau)


def model_params(N, b, anosov, phi_table, fibers, rotations) -> ModelParams:
    """Assemble a ModelParams, broadcasting a single fiber/rotation spec to N."""
    if isinstance(fibers, NSFlowSpec):
        fibers = (fibers,) * N
    if isinstance(rotations, RotationMapSpec):
        rotations = (rotations,) * N
    return ModelParams(
        N=int(N),
        b=float(b),
        anosov=anosov if isinstance(anosov, AnosovSpec) else anosov_data(anosov),
        phi=phi_table if isinstance(phi_table, InhibitionSpec)
        else InhibitionSpec(tuple(float(v) for v in phi_table)),
        fibers=tuple(fibers),
        rotations=tuple(rotations),
    )


def speed_factor(z, phi: InhibitionSpec):
    """Base-speed multiplier 1 - Phi(#{i: z_i in (1/2, 1)}).

    The arc is open at both ends: points exactly at 0 or 1/2 do not inhibit.
    Accepts (..., N) arrays and reduces over the last axis.
    """
    z = np.asarray(z, dtype=float)
    count = np.count_nonzero(z > 0.5, axis=-1)
    table = np.asarray(phi.table)
    out = 1.0 - table[count]
    return out if np.ndim(out) else float(out)


def return_time(z, params: ModelParams):
    """Crossing time of the inhibition phase: (1-b) / speed_factor(z)."""
    out = (1.0 - params.b) / speed_factor(z, params.phi)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[AssumptionCheck, ...]
    warnings: tuple[str, ...]
    derived: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [asdict(c) for c in self.checks],
            "warnings": list(self.warnings),
            "derived": self.derived,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _zone_grid(lo: float, hi: float, resolution: int) -> np.ndarray:
    n = max(129, min(4097, int((hi - lo) * resolution) + 2))
    return np.linspace(lo, hi, n)


def validate_params(
    params: ModelParams,
    grid_resolution: int = 10_000,
    time_samples: int = 100,
) -> ValidationReport:
    """Certify the standing assumptions numerically; margins are signed
    (positive = satisfied with that much room), failures are entries."""
    checks: list[AssumptionCheck] = []
    warnings: list[str] = []
    derived: dict = {
        "lambda": params.anosov.lam,
        "expansion": params.anosov.expansion,
        "beta": params.anosov.beta,
        "tau_max": params.tau_max,
        "d": [],
        "max_curvature": [r.max_curvature for r in params.rotations],
        "min_rotation_slope": [r.min_slope for r in params.rotations],
    }

    tab = params.phi.table
    checks.append(AssumptionCheck(
        "inhibition:zero_at_rest", tab[0] == 0.0, 0.0 - abs(tab[0]),
        f"Phi(0) = {tab[0]}"))
    diffs = np.diff(tab) if len(tab) > 1 else np.array([math.inf])
    checks.append(AssumptionCheck(
        "inhibition:increasing", bool(np.all(diffs > 0)), float(diffs.min()),
        "Phi must be strictly increasing"))
    checks.append(AssumptionCheck(
        "inhibition:below_one", tab[-1] < 1.0, 1.0 - tab[-1],
        f"Phi(N) = {tab[-1]}"))

    if params.anosov.expansion <= 3.0:
        warnings.append(
            "expansion factor exp(lambda) = {:.4f} <= 3: curve-range growth "
            "guarantees need exp(lambda) > 3 for two fibers (more for larger N)"
            .format(params.anosov.expansion))

    flow_ok = math.isfinite(params.tau_max)
    if not flow_ok:
        warnings.append("Phi(N) >= 1 makes the return time unbounded; "
                        "flow-dependent checks recorded as failed")

    e_lam = params.anosov.expansion
    t_lo = 1.0 - params.b
    ts = np.linspace(t_lo, params.tau_max, time_samples) if flow_ok else None

    for i, f in enumerate(params.fibers):
        dp, dm = f.delta_plus, f.delta_minus
        disjoint = min((0.5 - dp) - dm, (1.0 - dm) - (0.5 + dp))
        checks.append(AssumptionCheck(
            f"fiber{i}:zones_disjoint", disjoint > 0, disjoint,
            "I+ and I- must be disjoint"))
        if not flow_ok or disjoint <= 0:
            for nm in ("expansion", "contraction", "covering"):
                checks.append(AssumptionCheck(
                    f"fiber{i}:{nm}", False, -math.inf, "skipped: model inconsistent"))
            derived["d"].append(math.nan)
            continue

        zp = _zone_grid(0.5 - dp, 0.5 + dp, grid_resolution)
        zm = _zone_grid(-dm, dm, grid_resolution)
        worst_exp = math.inf
        worst_con = -math.inf
        worst_cov = math.inf
        for t in ts:
            dz_p = np.asarray(ns_evolve(f, zp, float(t)).dz)
            worst_exp = min(worst_exp, float(dz_p.min()))
            dz_m = np.asarray(ns_evolve(f, wrap(zm), float(t)).dz)
            worst_con = max(worst_con, float(dz_m.max()))
            lo = float(np.asarray(ns_evolve(f, 0.5 - dp, float(t)).z_end))
            hi = float(np.asarray(ns_evolve(f, 0.5 + dp, float(t)).z_end))
            worst_cov = min(worst_cov, dm - lo, hi - (1.0 - dm))
        checks.append(AssumptionCheck(
            f"fiber{i}:expansion", worst_exp > e_lam, worst_exp - e_lam,
            "min (g^t)' on I+ vs exp(lambda), t in [1-b, tau_max]"))
        checks.append(AssumptionCheck(
            f"fiber{i}:contraction", worst_con <= f.contraction_c,
            f.contraction_c - worst_con,
            "max (g^t)' on I- vs contraction constant"))
        checks.append(AssumptionCheck(
            f"fiber{i}:covering", worst_cov > 0, worst_cov,
            "g^t(I+) must cover the complement of I-"))

        lo_b = float(np.asarray(ns_evolve(f, 0.5 - dp, t_lo).z_end))
        hi_b = float(np.asarray(ns_evolve(f, 0.5 + dp, t_lo).z_end))
        d_i = min(dm - lo_b, hi_b - (1.0 - dm))
        derived["d"].append(d_i)

        rot = params.rotations[i]
        checks.append(AssumptionCheck(
            f"rotation{i}:pole_margin", rot.d <= d_i, d_i - rot.d,
            "declared rotation margin d vs derived distance "
            f"d_i = {d_i:.6g}"))

        xg = np.linspace(0.0, 1.0, max(1024, grid_resolution), endpoint=False)
        xg = np.union1d(xg, rot.breakpoints())
        vals = wrap(rot.lift(xg))
        slopes = rot.deriv(xg)
        region = (vals > d_i) & (vals < 1.0 - d_i)
        min_steep = float(slopes[region].min()) if region.any() else math.inf
        checks.append(AssumptionCheck(
            f"rotation{i}:steepness", min_steep > 1.0 / rot.epsilon,
            min_steep - 1.0 / rot.epsilon,
            "min slope where r(x) mod 1 lies in (d_i, 1-d_i) vs 1/epsilon"))
        checks.append(AssumptionCheck(
            f"rotation{i}:floor", rot.min_slope > rot.c_prime,
            rot.min_slope - rot.c_prime,
            "global minimum slope vs declared floor c'"))

    return ValidationReport(tuple(checks), tuple(warnings), derived)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def params_to_dict(params: ModelParams) -> dict:
    fibers = []
    for f in params.fibers:
        e: dict = {"kind": f.kind, "delta_plus": f.delta_plus,
                   "delta_minus": f.delta_minus, "contraction_c": f.contraction_c}
        if f.kind == "sine":
            e["amplitude"] = f.amplitude
        elif f.kind == "projective":
            e["alpha"] = f.alpha
        else:
            e["samples"] = list(f.samples)
        fibers.append(e)
    rotations = [
        {"kappa": r.kappa, "epsilon": r.epsilon, "d": r.d,
         "connector_floor": r.c_prime, "phase": r.phase,
         "steepness_margin": r.steepness_margin}
        for r in params.rotations
    ]
    return {
        "schema": SCHEMA,
        "model": {
            "N": params.N,
            "b": params.b,
            "anosov": {"entries": [list(r) for r in params.anosov.entries]},
            "phi": {"table": list(params.phi.table)},
        },
        "fibers": fibers,
        "rotations": rotations,
    }


def _fiber_from_dict(e: dict) -> NSFlowSpec:
    kind = e.get("kind", "sine")
    common = dict(delta_plus=e["delta_plus"], delta_minus=e["delta_minus"],
                  contraction_c=e.get("contraction_c", 0.5))
    if kind == "sine":
        return sine_flow(e["amplitude"], **common)
    if kind == "projective":
        return projective_flow(e["alpha"], **common)
    if kind == "tabulated":
        return tabulated_flow(e["samples"], **common)
    raise SchemaError(f"unknown fiber kind {kind!r}")


def params_from_dict(doc: dict) -> ModelParams:
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise SchemaError(f"expected schema {SCHEMA!r}, got {doc.get('schema')!r}")
    try:
        model = doc["model"]
        n = int(model["N"])
        fibers = [_fiber_from_dict(e) for e in doc["fibers"]]
        rotations = [
            build_rotation_map(
                e["kappa"], e["epsilon"], e["d"], e["connector_floor"],
                phase=e.get("phase", 0.0),
                steepness_margin=e.get("steepness_margin", 0.01),
            )
            for e in doc["rotations"]
        ]
        if len(fibers) == 1:
            fibers = fibers * n
        if len(rotations) == 1:
            rotations = rotations * n
        return model_params(
            N=n, b=float(model["b"]),
            anosov=model["anosov"]["entries"],
            phi_table=model["phi"]["table"],
            fibers=tuple(fibers), rotations=tuple(rotations),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed parameter document: {exc}") from exc


def load_params(path) -> ModelParams:
    """Read a parameter document (TOML or JSON, sniffed by suffix/content)."""
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() in (".toml", ".tml"):
        doc = _load_toml(raw)
    elif path.suffix.lower() == ".json":
        doc = _load_json(raw)
    else:
        stripped = raw.lstrip()
        doc = _load_json(raw) if stripped.startswith(b"{") else _load_toml(raw)
    return params_from_dict(doc)


def _load_toml(raw: bytes) -> dict:
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:  # pragma: no cover
        import tomli as tomllib
    try:
        return tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise SchemaError(f"TOML parse error: {exc}") from exc


def _load_json(raw: bytes) -> dict:
    try:
        return json.loads(raw.decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SchemaError(f"JSON parse error: {exc}") from exc


def save_params(params: ModelParams, path) -> None:
    Path(path).write_text(json.dumps(params_to_dict(params), indent=2) + "\n")


def params_hash(params: ModelParams) -> str:
    doc = json.dumps(params_to_dict(params), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(doc.encode()).hexdigest()
