import numpy as np
import pytest

from phi4box import (LatticeSpec, FieldState, SpacetimeSource, to_spectral,
                     from_spectral, energy, energy_inner, mode_energies,
                     fock_inner)


def test_lattice_validation():
    with pytest.raises(ValueError):
        LatticeSpec(spatial_dim=4)
    with pytest.raises(ValueError):
        LatticeSpec(modes_per_axis=15)
    with pytest.raises(ValueError):
        LatticeSpec(dt=0.013)  # does not divide the window
    with pytest.raises(ValueError):
        LatticeSpec(t_interaction=9.0)  # window outside the grid


def test_time_grid(small_spec):
    sp = small_spec
    assert sp.num_times == 201
    assert sp.times[0] == sp.t_min and sp.times[-1] == sp.t_max
    assert np.isclose(np.sum(sp.time_weights), sp.t_max - sp.t_min)
    assert sp.time_index(0.0) == 100
    with pytest.raises(ValueError):
        sp.time_index(0.013)


def test_mode_mask_excludes_zero_mode_when_massless(small_spec):
    assert not small_spec.mode_mask.flat[0]
    massive = LatticeSpec(spatial_dim=1, modes_per_axis=16, dt=0.02,
                          t_min=-2.0, t_max=2.0, t_interaction=0.5, mass=1.0)
    assert massive.mode_mask.all()
    assert np.isclose(massive.omega.flat[0], 1.0)


def test_spectral_roundtrip(small_spec):
    rng = np.random.default_rng(3)
    st = FieldState(rng.standard_normal(16), rng.standard_normal(16))
    back = from_spectral(to_spectral(st, small_spec), small_spec)
    assert np.allclose(back.phi, st.phi, atol=1e-14)
    assert np.allclose(back.pi, st.pi, atol=1e-14)


def test_traveling_wave_energy(small_spec):
    # phi(t,x) = A cos(kx - wt) has energy (1/2) A^2 w^2 L
    sp = small_spec
    a, k = 1.3, 2
    st = FieldState(a * np.cos(k * sp.x_axis), a * k * np.sin(k * sp.x_axis))
    expected = 0.5 * a ** 2 * k ** 2 * sp.box_length
    assert np.isclose(energy(st, 0.0, sp), expected, rtol=1e-13)


def test_mode_energies_sum_matches_total(small_spec):
    sp = small_spec
    rng = np.random.default_rng(5)
    x = sp.x_axis
    # band-limited data: no k = 0 (excluded) and no Nyquist mode (the grid
    # cannot represent its gradient)
    phi = np.zeros(16)
    pi = np.zeros(16)
    for k in range(1, 6):
        a, b, c, d = rng.standard_normal(4)
        phi += a * np.cos(k * x) + b * np.sin(k * x)
        pi += c * np.cos(k * x) + d * np.sin(k * x)
    st = FieldState(phi, pi)
    e = mode_energies(st, sp)
    assert np.isclose(np.sum(e[sp.mode_mask]), energy(st, 0.0, sp),
                      rtol=1e-12)


def test_energy_inner_polarizes_energy(small_spec):
    sp = small_spec
    rng = np.random.default_rng(7)
    phi = rng.standard_normal(16)
    st = FieldState(phi, rng.standard_normal(16))
    assert np.isclose(energy_inner(st, st, sp), energy(st, 0.0, sp),
                      rtol=1e-12)


def test_fock_inner_single_mode_relation(small_spec):
    # on one mode of frequency w: energy_inner = w * fock_inner
    sp = small_spec
    k = 3
    a = FieldState(np.cos(k * sp.x_axis), 0.4 * np.sin(k * sp.x_axis))
    b = FieldState(0.7 * np.cos(k * sp.x_axis), np.sin(k * sp.x_axis))
    assert np.isclose(energy_inner(a, b, sp), k * fock_inner(a, b, sp),
                      rtol=1e-12)


def test_source_validation(small_spec):
    sp = small_spec
    good = SpacetimeSource(np.zeros((sp.num_times,) + sp.grid_shape),
                           (-1.0, -0.7))
    good.validate(sp)
    with pytest.raises(ValueError):
        SpacetimeSource(np.zeros((3,) + sp.grid_shape),
                        (-1.0, -0.7)).validate(sp)
    bad = SpacetimeSource(np.ones((sp.num_times,) + sp.grid_shape),
                          (-1.0, -0.7))
    with pytest.raises(ValueError):
        bad.validate(sp)  # values outside the declared support
