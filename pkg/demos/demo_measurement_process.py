"""Walk through the classical measurement process on the standard scenario.

An early source rho_in launches a wave packet, an observer fires rho_out
after the interaction window, and the interaction-induced energy shift
Delta E is read off in three independent ways.
"""

import numpy as np

from phi4box import LatticeSpec
from phi4box.measurement import (MeasurementSetup, make_wavepacket_source,
                                 mirror_source, global_expand, delta_E,
                                 energy_decomposition,
                                 delta_E_finite_difference)

spec = LatticeSpec(spatial_dim=1, modes_per_axis=64, dt=0.01,
                   t_min=-8.0, t_max=8.0, t_interaction=1.5, coupling=0.05)

rho_in = make_wavepacket_source(spec, -4.0, np.pi, 0.4, 0.55,
                                wavenumber=3.0, amplitude=8.0)
rho_out = mirror_source(rho_in, spec)
setup = MeasurementSetup(spec, rho_in, rho_out, order=3)

print("expanding the measurement process to order", setup.order, "...")
expansion = global_expand(setup)
print("effective source sup |rho_tilde| =",
      np.max(np.abs(expansion.rho_tilde.values)))

rep = delta_E(setup, expansion)
print()
print("Delta E (advanced formula) :", rep.extra["delta_E_advanced"])
print("Delta E (retarded formula) :", rep.extra["delta_E_retarded"])
print("relative difference        :", rep.extra["formula_rel_diff"])

dec = energy_decomposition(setup, expansion)
print()
print("asymptotic energies (interacting vs free):")
for name, val, free in [("E  ", dec.E_interaction, dec.E_free_interaction),
                        ("E+ ", dec.E_plus, dec.E_free_plus),
                        ("E- ", dec.E_minus, dec.E_free_minus)]:
    print(f"  {name}: {val:+.9f}   free: {free:+.9f}   shift: {val - free:+.3e}")
print("plus/minus balance (should vanish):",
      dec.extra["plus_minus_balance"])

fd = delta_E_finite_difference(setup, expansion)
print()
print("finite-difference oracle   :", fd["delta_E_fd"])
print("relative deviation         :",
      abs(fd["delta_E_fd"] - rep.delta_E) / abs(rep.delta_E))
