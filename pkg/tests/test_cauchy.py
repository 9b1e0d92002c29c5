import numpy as np
import pytest

from phi4box import LatticeSpec, FieldState
from phi4box.propagators import free_trajectory
from phi4box.cauchy import (perturbative_cauchy, direct_solve, energy_drift,
                            residual_table, rewrap_time, BlowUpError)
from conftest import single_mode_state


def test_zero_data_stays_zero(small_spec):
    st = FieldState(np.zeros(16), np.zeros(16))
    series = perturbative_cauchy(st, 0.1, 3, small_spec)
    for term in series.terms:
        assert np.all(term == 0.0)


def test_homogeneity_of_orders(small_spec):
    # scaling the data by s scales the order-n term by s^(2n+1)
    sp = small_spec
    st = single_mode_state(sp, k=1, amp=0.7, amp_pi=0.3)
    s = 1.7
    scaled = FieldState(s * st.phi, s * st.pi)
    a = perturbative_cauchy(st, 0.1, 2, sp)
    b = perturbative_cauchy(scaled, 0.1, 2, sp)
    for n in range(3):
        assert np.allclose(b.terms[n], s ** (2 * n + 1) * a.terms[n],
                           rtol=1e-11, atol=1e-13)


def test_partial_sum_weights(small_spec):
    sp = small_spec
    st = single_mode_state(sp, amp=0.5)
    series = perturbative_cauchy(st, 0.2, 2, sp)
    manual = sum(0.2 ** n * series.terms[n] for n in range(3))
    assert np.allclose(series.partial_sum(), manual, atol=1e-14)
    assert np.allclose(series.partial_sum(order=0), series.terms[0],
                       atol=1e-15)


def test_direct_solve_free_limit(small_spec):
    sp = small_spec
    st = single_mode_state(sp, k=2, amp=0.8, amp_pi=0.4)
    traj = direct_solve(st, 0.0, sp)
    assert np.allclose(traj.phi, free_trajectory(st, sp, t_ref=sp.t_min),
                       atol=1e-12)


def test_direct_solve_conserves_energy(small_spec):
    sp = small_spec
    st = single_mode_state(sp, amp=1.0, amp_pi=0.5)
    traj = direct_solve(st, 0.3, sp)
    assert energy_drift(traj, 0.3, sp) < 1e-5


def test_direct_solve_blowup_guard(small_spec):
    st = single_mode_state(small_spec, amp=1.0)
    with pytest.raises(BlowUpError):
        direct_solve(st, 0.3, small_spec, norm_bound=0.5)


def test_residual_shrinks_with_coupling(small_spec):
    sp = small_spec
    st = single_mode_state(sp, amp=1.0, amp_pi=0.3)
    rows = residual_table(st, sp, [1], [0.01, 0.1])
    sup_small = rows[0][2]
    sup_big = rows[1][2]
    # order-1 residual is O(lam^2): 10x coupling -> ~100x residual
    assert 50 < sup_big / sup_small < 200


def test_rewrap_time(small_spec):
    assert rewrap_time(small_spec) == small_spec.box_length
