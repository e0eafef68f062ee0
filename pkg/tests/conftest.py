from pathlib import Path

import numpy as np
import pytest

from einet import build_rotation_map, load_params, model_params
from einet.params import sine_flow

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="session")
def certified():
    """The shipped certified two-unit configuration."""
    return load_params(CONFIG_DIR / "n2-valid.toml")


@pytest.fixture(scope="session")
def fig3():
    """The shipped 20-unit qualitative configuration."""
    return load_params(CONFIG_DIR / "fig3-like.toml")


@pytest.fixture(scope="session")
def mild():
    """Weakly contracting fibers: orbits spread over the whole circle, which
    exercises curve geometry (crossings, jumps) much harder than the
    certified configuration."""
    fib = sine_flow(0.4, 0.05, 0.05, contraction_c=0.9)
    rot1 = build_rotation_map(1, 0.05, 0.1, 0.1, phase=0.0)
    rot2 = build_rotation_map(2, 0.05, 0.1, 0.1, phase=0.07)
    return model_params(2, 0.3, [[3, 1], [2, 1]], [0.0, 0.02, 0.04], fib, (rot1, rot2))


@pytest.fixture(scope="session")
def mild_strong_phi():
    """Mild fibers with a strong inhibition table (0, 0.2, 0.4)."""
    fib = sine_flow(0.4, 0.05, 0.05, contraction_c=0.9)
    rot1 = build_rotation_map(1, 0.05, 0.1, 0.1, phase=0.0)
    rot2 = build_rotation_map(2, 0.05, 0.1, 0.1, phase=0.07)
    return model_params(2, 0.3, [[3, 1], [2, 1]], [0.0, 0.2, 0.4], fib, (rot1, rot2))


@pytest.fixture(scope="session")
def certified_wide():
    """A certified configuration whose expansion zone is wide (amplitude 1,
    delta_plus = 0.01), so points of I+ are usable away from the singularity
    tolerance.  The slower field still covers the sink zone in time 1-b."""
    from einet import validate_params

    fib = sine_flow(1.0, 0.01, 0.15, contraction_c=0.5)
    rot1 = build_rotation_map(1, 0.05, 0.03, 0.05, phase=0.0)
    rot2 = build_rotation_map(2, 0.05, 0.03, 0.05, phase=0.1)
    p = model_params(2, 0.3, [[3, 1], [2, 1]], [0.0, 0.02, 0.04], fib, (rot1, rot2))
    rep = validate_params(p, grid_resolution=2048, time_samples=32)
    assert rep.passed, [c for c in rep.failures()]
    return p


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250808)
