import math

import numpy as np
from hypothesis import given, strategies as st

from einet.torus import circle_dist, inv_tan_pi, tan_pi, wrap

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@given(finite)
def test_wrap_range(x):
    w = wrap(x)
    assert 0.0 <= w < 1.0


@given(finite, st.integers(min_value=-3, max_value=3))
def test_wrap_periodic(x, k):
    assert abs(wrap(x + k) - wrap(x)) < 1e-9 or abs(abs(wrap(x + k) - wrap(x)) - 1.0) < 1e-9


@given(finite, finite)
def test_circle_dist_bounds(a, b):
    d = circle_dist(a, b)
    assert 0.0 <= d <= 0.5


def test_wrap_negative_epsilon():
    assert wrap(-1e-18) == 0.0
    assert wrap(1.0) == 0.0


def test_tan_pi_matches_naive_away_from_pole():
    z = np.linspace(0.01, 0.99, 197)
    z = z[np.abs(z - 0.5) > 0.02]
    assert np.allclose(tan_pi(z), np.tan(np.pi * z), rtol=1e-12, atol=1e-12)


def test_tan_pi_accurate_near_pole():
    # relative accuracy where naive tan(pi*z) loses ~11 digits
    z = 0.5 - 1e-12
    h = 0.5 - z  # the exactly represented offset of z from the pole
    got = tan_pi(z)
    want = 1.0 / math.tan(math.pi * h)  # cot(pi h), well conditioned
    assert abs(got - want) / abs(want) < 1e-13
    naive = math.tan(math.pi * z)
    assert abs(naive - want) / abs(want) > 1e-6  # the naive form really is lossy


def test_inv_tan_pi_roundtrip():
    z = np.linspace(0.001, 0.999, 499)
    z = z[np.abs(z - 0.5) > 1e-3]
    y = tan_pi(z)
    back = inv_tan_pi(y, z > 0.5)
    assert np.max(np.abs(back - z)) < 1e-12
