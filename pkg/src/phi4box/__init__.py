"""Spectral and combinatorial toolkit for perturbative classical phi^4 theory.

Subpackages:
    core         lattices, field containers, energies, scalar products
    propagators  Green's functions of the wave operator, momentum values
    cauchy       perturbative Cauchy expansion and the direct nonlinear solver
    measurement  sources, global expansion, energy shift Delta E, amplitudes
    diagrams     tree/loop diagram enumeration, exact weights, beta matching
    stochastic   Gaussian background field, covariance and loop Monte Carlo
    cli          batch driver
"""

from .core import (LatticeSpec, FieldState, SpectralField, SpacetimeSource,
                   EnergyReport, to_spectral, from_spectral, energy,
                   energy_inner, fock_inner, mode_energies)
from .propagators import PropagatorKind, free_evolve, apply_green, momentum_value

__all__ = [
    "LatticeSpec", "FieldState", "SpectralField", "SpacetimeSource",
    "EnergyReport", "to_spectral", "from_spectral", "energy", "energy_inner",
    "fock_inner", "mode_energies", "PropagatorKind", "free_evolve",
    "apply_green", "momentum_value",
]
