import numpy as np
import pytest

from phi4box import LatticeSpec, energy
from phi4box.propagators import free_evolve
from phi4box.stochastic import (StochasticConfig, StochasticSample,
                                sample_xi, sigma_squared, covariance_target,
                                covariance_mc, third_moment_mc,
                                equal_point_covariance, zero_point_energy)


@pytest.fixture
def cfg():
    return StochasticConfig(beta=2.0, sample_count=256, seed=42)


def test_config_validation():
    with pytest.raises(ValueError):
        StochasticConfig(beta=-1.0)
    with pytest.raises(ValueError):
        StochasticConfig(beta=1.0, sample_count=1)


def test_samples_are_reproducible(cfg, small_spec):
    a = sample_xi(cfg, small_spec, 7)
    b = sample_xi(cfg, small_spec, 7)
    assert np.array_equal(a.alpha, b.alpha)
    c = sample_xi(StochasticConfig(beta=2.0, sample_count=256, seed=42,
                                   stream=1), small_spec, 7)
    assert not np.array_equal(a.alpha, c.alpha)


def test_sample_solves_free_equation(cfg, small_spec):
    # evolving the t=0 Cauchy data freely reproduces the sample at any t
    sp = small_spec
    sample = sample_xi(cfg, sp, 3)
    st0 = sample.state(0.0, sp)
    st1 = sample.state(0.8, sp)
    ev = free_evolve(st0, 0.8, sp)
    assert np.allclose(ev.phi, st1.phi, atol=1e-13)
    assert np.allclose(ev.pi, st1.pi, atol=1e-13)


def test_trajectory_matches_states(cfg, small_spec):
    sp = small_spec
    sample = sample_xi(cfg, sp, 5)
    traj = sample.trajectory(sp, times=np.array([0.0, 0.5]))
    assert np.allclose(traj[0], sample.state(0.0, sp).phi, atol=1e-13)
    assert np.allclose(traj[1], sample.state(0.5, sp).phi, atol=1e-13)


def test_sigma_squared_law(small_spec):
    sp = small_spec
    s2 = sigma_squared(sp, 2.0)
    vol = sp.box_length
    m = sp.mode_mask
    assert np.allclose(s2[m], 1.0 / (4 * np.pi * 2.0 * sp.omega[m] * vol))
    assert np.all(s2[~m] == 0.0)


def test_covariance_target_symmetry(small_spec):
    sp = small_spec
    a = covariance_target(sp, 2.0, 0.3, [2])
    b = covariance_target(sp, 2.0, -0.3, [-2])
    assert np.isclose(a, b, rtol=1e-13)
    assert equal_point_covariance(sp, 2.0) > 0


def test_covariance_mc_within_errors(cfg, small_spec):
    sp = small_spec
    probes = [((0.0, 1), (0.0, 1)), ((0.0, 2), (0.4, 5)), ((-0.3, 0), (0.3, 8))]
    recs = covariance_mc(cfg, sp, probes)
    for r in recs:
        assert r["sigma_distance"] < 5.0


def test_third_moments_vanish(cfg, small_spec):
    recs = third_moment_mc(cfg, small_spec, [((0.0, 2), (0.4, 5))])
    assert recs[0]["target"] == 0.0
    assert recs[0]["sigma_distance"] < 5.0


def test_zero_point_scaling(small_spec):
    sp = small_spec
    cfg1 = StochasticConfig(beta=2.0, sample_count=512, seed=9)
    z = zero_point_energy(cfg1, sp)
    m = z["mask"]
    sig = np.abs(z["mean"] - z["target"]) / z["stderr"]
    assert np.max(sig[m]) < 5.0
    # the target is exactly proportional to omega
    ratio = z["target"][m] / sp.omega[m]
    assert np.allclose(ratio, 1.0 / (4 * np.pi), rtol=1e-13)
