import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from einet import (
    InfeasibleGeometry,
    InhibitionSpec,
    NotHyperbolic,
    anosov_data,
    build_rotation_map,
    model_params,
    params_from_dict,
    params_hash,
    params_to_dict,
    return_time,
    speed_factor,
    validate_params,
)
from einet.errors import SchemaError
from einet.params import sine_flow

PHI2 = InhibitionSpec((0.0, 0.2, 0.4))


# ---------------------------------------------------------------------------
# speed factor and return time
# ---------------------------------------------------------------------------

def test_speed_factor_rest_is_one():
    assert speed_factor(np.zeros(2), PHI2) == 1.0


def test_speed_factor_both_inhibiting():
    assert speed_factor(np.array([0.6, 0.7]), PHI2) == pytest.approx(0.6, abs=0)


def test_speed_factor_open_arc_boundary():
    # exactly at the repelling pole or the sink does not inhibit
    assert speed_factor(np.array([0.5, 0.5]), PHI2) == 1.0
    assert speed_factor(np.array([0.0, 0.0]), PHI2) == 1.0


@given(st.lists(st.floats(min_value=0.0, max_value=0.999999), min_size=2, max_size=2))
def test_speed_factor_permutation_invariant(zs):
    z = np.array(zs)
    assert speed_factor(z, PHI2) == speed_factor(z[::-1], PHI2)


def _params_phi2():
    fib = sine_flow(0.4, 0.05, 0.05, contraction_c=0.9)
    rot = build_rotation_map(1, 0.05, 0.1, 0.1)
    return model_params(2, 0.3, [[3, 1], [2, 1]], [0.0, 0.2, 0.4], fib, rot)


def test_return_time_no_feedback():
    p = _params_phi2()
    assert return_time(np.zeros(2), p) == pytest.approx(0.7, abs=0)


def test_return_time_one_inhibiting():
    p = _params_phi2()
    assert return_time(np.array([0.6, 0.1]), p) == pytest.approx(0.7 / 0.8, abs=1e-15)


def test_return_time_all_inhibiting_hits_max():
    p = _params_phi2()
    assert return_time(np.array([0.7, 0.9]), p) == p.tau_max


def test_return_time_times_speed_is_exact():
    p = _params_phi2()
    rng = np.random.default_rng(1)
    for _ in range(200):
        z = rng.random(2)
        prod = return_time(z, p) * speed_factor(z, p.phi)
        assert abs(prod - 0.7) <= 2 * np.spacing(0.7)


# ---------------------------------------------------------------------------
# base automorphism
# ---------------------------------------------------------------------------

def test_anosov_fig_matrix():
    spec = anosov_data([[10, 3], [3, 1]])
    # eigenvalue oracle: (11 + sqrt(117)) / 2
    assert spec.lam == pytest.approx(math.log((11 + math.sqrt(117)) / 2), abs=1e-14)
    assert spec.lam == pytest.approx(2.389526434574219, abs=1e-12)


def test_anosov_small_matrix():
    spec = anosov_data([[3, 1], [2, 1]])
    assert spec.lam == pytest.approx(math.log(2 + math.sqrt(3)), abs=1e-14)
    assert spec.expansion == pytest.approx(3.7320508075688776, abs=1e-12)
    assert spec.expansion > 3
    # unstable eigenvector (1, sqrt(3)-1) normalized
    want_beta = 1.0 / math.hypot(1.0, math.sqrt(3) - 1.0)
    assert spec.beta == pytest.approx(want_beta, abs=1e-13)
    assert spec.beta == pytest.approx(0.8068982213550735, abs=1e-12)


def test_anosov_eigen_residual():
    spec = anosov_data([[3, 1], [2, 1]])
    v = np.array(spec.unstable_dir)
    resid = spec.matrix @ v - spec.expansion * v
    assert np.max(np.abs(resid)) < 1e-12


def test_anosov_rejects_parabolic():
    with pytest.raises(NotHyperbolic):
        anosov_data([[1, 1], [0, 1]])


def test_anosov_rejects_wrong_det():
    with pytest.raises(NotHyperbolic):
        anosov_data([[4, 0], [0, 1]])


def test_small_expansion_only_warns():
    fib = sine_flow(0.4, 0.05, 0.05, contraction_c=0.9)
    rot = build_rotation_map(1, 0.05, 0.1, 0.1)
    p = model_params(2, 0.3, [[2, 1], [1, 1]], [0.0, 0.02, 0.04], fib, rot)
    rep = validate_params(p, grid_resolution=1024, time_samples=16)
    assert any("<= 3" in w for w in rep.warnings)


# ---------------------------------------------------------------------------
# rotation maps
# ---------------------------------------------------------------------------

def test_rotation_reference_arc_geometry():
    # one arc of length epsilon*(1-2d) = 0.008 with slope 1/epsilon = 100
    r = build_rotation_map(1, 0.01, 0.1, 0.15, steepness_margin=0.0)
    assert r.arc_len == pytest.approx(0.008, abs=1e-15)
    assert r.arc_slope == pytest.approx(100.0, abs=1e-12)
    mid = r.phase + r.arc_len / 2
    assert float(np.asarray(r.lift(mid))) == pytest.approx(0.5, abs=1e-12)


def test_rotation_degree():
    r = build_rotation_map(2, 0.03, 0.12, 0.15)
    x = np.linspace(-1.0, 2.0, 57)
    assert np.allclose(r.lift(x + 1.0) - r.lift(x), 2.0, atol=1e-9)


def test_rotation_infeasible_arcs():
    with pytest.raises(InfeasibleGeometry):
        build_rotation_map(3, 0.4, 0.05, 0.05, steepness_margin=0.0)


def test_rotation_infeasible_floor():
    # connector must rise 2d over ~0.99 at slope > 1: impossible
    with pytest.raises(InfeasibleGeometry):
        build_rotation_map(1, 0.01, 0.05, 1.0)


def test_rotation_anchor_in_unit_interval():
    for phase in (0.0, 0.11, 0.37):
        r = build_rotation_map(2, 0.05, 0.14, 0.2, phase=phase)
        v0 = float(np.asarray(r.lift(0.0)))
        assert 0.0 <= v0 < 1.0


def test_rotation_grid_slope_checks():
    """Construction passes the steepness/floor checks at 1e4 points per unit."""
    r = build_rotation_map(2, 0.05, 0.14, 0.2, phase=0.1)
    x = np.linspace(0.0, 1.0, 10_000, endpoint=False)
    vals = np.asarray(r.value(x))
    slopes = np.asarray(r.deriv(x))
    region = (vals > r.d) & (vals < 1.0 - r.d)
    assert slopes[region].min() > 1.0 / r.epsilon
    assert slopes.min() > r.c_prime
    assert np.all(np.diff(np.asarray(r.lift(x))) > 0)


def test_rotation_derivative_is_continuous():
    r = build_rotation_map(1, 0.05, 0.14, 0.2)
    x = np.linspace(0.0, 1.0, 200_001)
    d = np.asarray(r.deriv(x))
    # C^1: finite-difference of the lift matches the stored derivative
    v = np.asarray(r.lift(x))
    mid = (d[1:] + d[:-1]) / 2
    fd = np.diff(v) / np.diff(x)
    assert np.max(np.abs(fd - mid)) < 2e-2 * r.arc_slope


def test_rotation_scalar_paths_match_arrays(rng):
    r = build_rotation_map(3, 0.04, 0.12, 0.15, phase=0.05)
    for _ in range(500):
        x = float(rng.uniform(-2, 3))
        assert r.lift_scalar(x) == pytest.approx(float(np.asarray(r.lift(x))), abs=5e-15)
        assert r.deriv_scalar(x) == pytest.approx(float(np.asarray(r.deriv(x))), abs=5e-13)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

ASSUMPTION_PREFIXES = ("fiber", "rotation")


def test_certified_config_passes_with_positive_margins(certified):
    rep = validate_params(certified)
    assert rep.passed
    for c in rep.checks:
        if c.name.startswith(ASSUMPTION_PREFIXES):
            assert c.margin > 0, c


def test_validation_flags_bad_inhibition(certified):
    p = model_params(certified.N, certified.b, certified.anosov,
                     [0.0, 0.5, 1.0], certified.fibers, certified.rotations)
    rep = validate_params(p, grid_resolution=512, time_samples=8)
    assert not rep.passed
    failed = {c.name for c in rep.failures()}
    assert "inhibition:below_one" in failed


def test_derived_pole_distance_matches_independent_formula(certified):
    """d_i from the validator vs a direct tangent-chart computation."""
    rep = validate_params(certified)
    f = certified.fibers[0]
    rate = 2 * math.pi * 7.0
    t = 1.0 - certified.b
    # edge of the expansion zone flows down; cot of a tiny angle is huge.
    # The offset is re-derived from the represented endpoint so the oracle
    # sees the same float the validator evolves.
    h = 0.5 - (0.5 - f.delta_plus)
    y0 = 1.0 / math.tan(math.pi * h)
    z_edge = math.atan(y0 * math.exp(-rate * t)) / math.pi
    want = f.delta_minus - z_edge
    assert rep.derived["d"][0] == pytest.approx(want, rel=1e-10)


def test_wide_expansion_zone_fails_honestly():
    """With a strongly contracting field, a +-0.05 expansion zone cannot keep
    the required stretch at its edges over the whole crossing-time window:
    the edge orbit escapes and is compressed long before t = 1-b."""
    fib = sine_flow(7.0, 0.05, 0.05, contraction_c=0.5)
    rot = build_rotation_map(1, 0.05, 0.02, 0.02)
    p = model_params(2, 0.3, [[3, 1], [2, 1]], [0.0, 0.02, 0.04], fib, rot)
    rep = validate_params(p, grid_resolution=1024, time_samples=16)
    failed = {c.name for c in rep.failures()}
    assert "fiber0:expansion" in failed


def test_report_serializes(certified):
    rep = validate_params(certified, grid_resolution=512, time_samples=8)
    doc = json.loads(rep.to_json())
    assert doc["passed"] is True
    assert all("margin" in c for c in doc["checks"])


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_roundtrip_through_dict(certified):
    doc = params_to_dict(certified)
    p2 = params_from_dict(doc)
    assert params_hash(p2) == params_hash(certified)
    assert p2.tau_max == certified.tau_max


def test_schema_version_enforced(certified):
    doc = params_to_dict(certified)
    doc["schema"] = "something-else"
    with pytest.raises(SchemaError):
        params_from_dict(doc)


def test_single_specs_broadcast(certified):
    doc = params_to_dict(certified)
    doc["rotations"] = doc["rotations"][:1]
    p2 = params_from_dict(doc)
    assert len(p2.rotations) == p2.N
