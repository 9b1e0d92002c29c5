import numpy as np
import pytest

from phi4box import LatticeSpec, FieldState
from phi4box.measurement import (MeasurementSetup, make_wavepacket_source,
                                 mirror_source)


@pytest.fixture
def small_spec():
    return LatticeSpec(spatial_dim=1, modes_per_axis=16, dt=0.02,
                       t_min=-2.0, t_max=2.0, t_interaction=0.5)


@pytest.fixture
def standard_setup():
    sp = LatticeSpec(spatial_dim=1, modes_per_axis=64, dt=0.01,
                     t_min=-8.0, t_max=8.0, t_interaction=1.5, coupling=0.05)
    rin = make_wavepacket_source(sp, -4.0, np.pi, 0.4, 0.55,
                                 wavenumber=3.0, amplitude=8.0)
    rout = mirror_source(rin, sp)
    return MeasurementSetup(sp, rin, rout, order=3)


def single_mode_state(spec, k=1, amp=1.0, amp_pi=0.0):
    x = spec.x_axis
    return FieldState(amp * np.cos(k * x), amp_pi * np.sin(k * x))
