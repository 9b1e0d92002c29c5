import json
import math

import numpy as np
from hypothesis import given, settings, strategies as st

from phi4box import LatticeSpec, FieldState, energy
from phi4box.propagators import free_evolve
from phi4box.diagrams import all_pairings
from phi4box.serialization import canonical_json

SPEC = LatticeSpec(spatial_dim=1, modes_per_axis=16, dt=0.02,
                   t_min=-2.0, t_max=2.0, t_interaction=0.5)


def band_limited_state(seed):
    # random data without the Nyquist mode (its gradient is not
    # representable on the grid, so its energy is not conserved by quadrature)
    rng = np.random.default_rng(seed)
    x = SPEC.x_axis
    phi = np.zeros(16)
    pi = np.zeros(16)
    for k in range(1, 8):
        a, b, c, d = rng.standard_normal(4)
        phi += a * np.cos(k * x) + b * np.sin(k * x)
        pi += c * np.cos(k * x) + d * np.sin(k * x)
    return FieldState(phi, pi)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3.0, 3.0), st.integers(0, 2 ** 32 - 1))
def test_free_evolution_conserves_energy(dt, seed):
    st0 = band_limited_state(seed)
    e0 = energy(st0, 0.0, SPEC)
    e1 = energy(free_evolve(st0, dt, SPEC), 0.0, SPEC)
    assert math.isclose(e0, e1, rel_tol=1e-10, abs_tol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.integers(0, 2 ** 16))
def test_free_evolution_composes(t1, t2, seed):
    rng = np.random.default_rng(seed)
    st0 = FieldState(rng.standard_normal(16), rng.standard_normal(16))
    a = free_evolve(free_evolve(st0, t1, SPEC), t2, SPEC)
    b = free_evolve(st0, t1 + t2, SPEC)
    assert np.allclose(a.phi, b.phi, atol=1e-11)
    assert np.allclose(a.pi, b.pi, atol=1e-11)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 4))
def test_pairing_count_is_double_factorial(pairs):
    items = list(range(2 * pairs))
    expected = 1
    for m in range(2 * pairs - 1, 0, -2):
        expected *= m
    assert len(all_pairings(items)) == expected


@settings(max_examples=30, deadline=None)
@given(st.recursive(
    st.one_of(st.integers(-10 ** 6, 10 ** 6),
              st.floats(allow_nan=False, allow_infinity=False),
              st.text(max_size=8), st.booleans(), st.none()),
    lambda inner: st.one_of(st.lists(inner, max_size=4),
                            st.dictionaries(st.text(max_size=5), inner,
                                            max_size=4)),
    max_leaves=12))
def test_canonical_json_roundtrips(obj):
    text = canonical_json(obj)
    parsed = json.loads(text)
    assert canonical_json(parsed) == text
