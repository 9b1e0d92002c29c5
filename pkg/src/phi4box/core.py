"""Discretization, field containers, scalar products and the classical energy.

The model is a real scalar field on a periodic box [0, L)^d with the equation
of motion

    box(phi) = -(lam/6) phi^3 ,    box = d_t^2 - Laplace + m^2 ,

whose conserved energy is

    E = integral( pi^2/2 + |grad phi|^2/2 + m^2 phi^2/2 + lam phi^4/24 ).

Fields are stored either on the spatial grid (FieldState) or as discrete
Fourier coefficients (SpectralField).  The Fourier convention is

    phi(x) = sum_k c_k exp(i k.x),   c_k = FFT(phi)/N^d ,

so Parseval reads  integral(f g) = L^d sum_k conj(f_k) g_k  for real f, g.
With m = 0 the k = 0 mode has no oscillator frequency and is excluded from
every mode sum and from all propagator applications (mode_mask).
"""

from dataclasses import dataclass, field
import numpy as np


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic space-time discretization parameters."""

    spatial_dim: int = 1
    box_length: float = 2 * np.pi
    modes_per_axis: int = 64
    mass: float = 0.0
    dt: float = 0.01
    t_min: float = -8.0
    t_max: float = 8.0
    t_interaction: float = 1.5
    coupling: float = 0.0

    def __post_init__(self):
        if self.spatial_dim not in (1, 2, 3):
            raise ValueError("spatial_dim must be 1, 2 or 3")
        if self.modes_per_axis <= 0 or self.modes_per_axis % 2 != 0:
            raise ValueError("modes_per_axis must be a positive even integer")
        if self.box_length <= 0 or self.dt <= 0 or self.mass < 0:
            raise ValueError("box_length, dt must be > 0 and mass >= 0")
        if not (self.t_min < -self.t_interaction < self.t_interaction < self.t_max):
            raise ValueError("need t_min < -T < T < t_max")
        nsteps = (self.t_max - self.t_min) / self.dt
        if abs(nsteps - round(nsteps)) > 1e-9:
            raise ValueError("dt must divide t_max - t_min")

    # -- derived grids (computed on demand; LatticeSpec itself stays frozen) --

    @property
    def grid_shape(self):
        return (self.modes_per_axis,) * self.spatial_dim

    @property
    def dx(self):
        return self.box_length / self.modes_per_axis

    @property
    def dvol(self):
        return self.dx ** self.spatial_dim

    @property
    def num_times(self):
        return int(round((self.t_max - self.t_min) / self.dt)) + 1

    @property
    def times(self):
        return self.t_min + self.dt * np.arange(self.num_times)

    @property
    def time_weights(self):
        # trapezoid weights on the uniform time grid
        w = np.full(self.num_times, self.dt)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @property
    def x_axis(self):
        return self.dx * np.arange(self.modes_per_axis)

    def k_components(self):
        """List of d arrays, each broadcast to grid_shape, with k_j values."""
        n = self.modes_per_axis
        k1 = 2 * np.pi * np.fft.fftfreq(n, d=self.dx)
        comps = []
        for axis in range(self.spatial_dim):
            shape = [1] * self.spatial_dim
            shape[axis] = n
            comps.append(k1.reshape(shape) * np.ones(self.grid_shape))
        return comps

    @property
    def k_squared(self):
        ksq = np.zeros(self.grid_shape)
        for kc in self.k_components():
            ksq = ksq + kc ** 2
        return ksq

    @property
    def omega(self):
        """Mode frequencies sqrt(|k|^2 + m^2); masked modes get omega = 1 to
        keep divisions finite (their amplitudes are always forced to zero)."""
        om2 = self.k_squared + self.mass ** 2
        om = np.sqrt(om2)
        return np.where(self.mode_mask, om, 1.0)

    @property
    def mode_mask(self):
        """Boolean grid of retained modes; excludes k = 0 when massless."""
        if self.mass > 0:
            return np.ones(self.grid_shape, dtype=bool)
        return self.k_squared > 1e-12

    def interaction_mask(self):
        """chi_I(t): 1 inside [-T, T], 0 outside, on the time grid."""
        t = self.times
        return ((t >= -self.t_interaction - 1e-12)
                & (t <= self.t_interaction + 1e-12)).astype(float)

    def time_index(self, t):
        i = int(round((t - self.t_min) / self.dt))
        if not (0 <= i < self.num_times) or abs(self.t_min + i * self.dt - t) > 1e-9:
            raise ValueError(f"time {t} is not on the grid")
        return i


@dataclass
class FieldState:
    """Real field and its time derivative on the spatial grid."""

    phi: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.pi = np.asarray(self.pi, dtype=float)
        if self.phi.shape != self.pi.shape:
            raise ValueError("phi and pi must have the same shape")
        if not (np.all(np.isfinite(self.phi)) and np.all(np.isfinite(self.pi))):
            raise ValueError("field values must be finite")

    def copy(self):
        return FieldState(self.phi.copy(), self.pi.copy())


@dataclass
class SpectralField:
    """Fourier coefficients (phi_k, pi_k); conjugate symmetry encodes reality."""

    phi: np.ndarray
    pi: np.ndarray


@dataclass
class SpacetimeSource:
    """Real source density on the (time x space) grid with a support window."""

    values: np.ndarray
    support: tuple

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        t0, t1 = self.support
        if t0 > t1:
            raise ValueError("empty support window")

    def validate(self, spec: LatticeSpec):
        if self.values.shape != (spec.num_times,) + spec.grid_shape:
            raise ValueError("source shape does not match the lattice")
        t0, t1 = self.support
        if t0 < spec.t_min - 1e-12 or t1 > spec.t_max + 1e-12:
            raise ValueError("source support exceeds the time grid")
        outside = (spec.times < t0 - 1e-12) | (spec.times > t1 + 1e-12)
        if np.any(self.values[outside] != 0.0):
            raise ValueError("source values must vanish exactly outside support")


@dataclass
class EnergyReport:
    E_interaction: float = 0.0
    E_plus: float = 0.0
    E_minus: float = 0.0
    E_free_interaction: float = 0.0
    E_free_plus: float = 0.0
    E_free_minus: float = 0.0
    delta_E: float = 0.0
    extra: dict = field(default_factory=dict)

    def check_arithmetic(self):
        lhs = self.delta_E
        rhs = ((self.E_interaction - self.E_free_interaction)
               - (self.E_plus - self.E_free_plus))
        return lhs, rhs


# ---------------------------------------------------------------------------
# transforms

def to_spectral(state: FieldState, spec: LatticeSpec) -> SpectralField:
    if state.phi.shape != spec.grid_shape:
        raise ValueError("field shape does not match the lattice")
    n = spec.modes_per_axis ** spec.spatial_dim
    return SpectralField(np.fft.fftn(state.phi) / n, np.fft.fftn(state.pi) / n)


def from_spectral(sf: SpectralField, spec: LatticeSpec) -> FieldState:
    if sf.phi.shape != spec.grid_shape:
        raise ValueError("coefficient shape does not match the lattice")
    n = spec.modes_per_axis ** spec.spatial_dim
    return FieldState(np.fft.ifftn(sf.phi * n).real, np.fft.ifftn(sf.pi * n).real)


def spatial_coeffs(values, spec: LatticeSpec):
    """FFT over the spatial axes of a (time x space) array, c_k convention."""
    axes = tuple(range(values.ndim - spec.spatial_dim, values.ndim))
    n = spec.modes_per_axis ** spec.spatial_dim
    return np.fft.fftn(values, axes=axes) / n


def spatial_values(coeffs, spec: LatticeSpec):
    axes = tuple(range(coeffs.ndim - spec.spatial_dim, coeffs.ndim))
    n = spec.modes_per_axis ** spec.spatial_dim
    return np.fft.ifftn(coeffs * n, axes=axes).real


# ---------------------------------------------------------------------------
# energies and scalar products

def gradient_squared(phi, spec: LatticeSpec):
    out = np.zeros_like(phi)
    c = np.fft.fftn(phi)
    for kc in spec.k_components():
        out += np.fft.ifftn(1j * kc * c).real ** 2
    return out


def energy(state: FieldState, lam: float, spec: LatticeSpec) -> float:
    """Classical energy on a time slice, lattice quadrature."""
    dens = (0.5 * state.pi ** 2
            + 0.5 * gradient_squared(state.phi, spec)
            + 0.5 * spec.mass ** 2 * state.phi ** 2
            + lam / 24.0 * state.phi ** 4)
    return float(np.sum(dens)) * spec.dvol


def energy_inner(a: FieldState, b: FieldState, spec: LatticeSpec) -> float:
    """Polarized free energy ( . , . ); time-slice independent on free fields."""
    ca, cb = np.fft.fftn(a.phi), np.fft.fftn(b.phi)
    grad = np.zeros(spec.grid_shape)
    for kc in spec.k_components():
        grad += np.fft.ifftn(1j * kc * ca).real * np.fft.ifftn(1j * kc * cb).real
    dens = 0.5 * (a.pi * b.pi + grad + spec.mass ** 2 * a.phi * b.phi)
    return float(np.sum(dens)) * spec.dvol


def mode_energies(state: FieldState, spec: LatticeSpec):
    """Free energy resolved per momentum mode: (L^d/2)(|pi_k|^2 + w^2|phi_k|^2).

    Summing over the mode grid reproduces energy(state, 0) for retained modes.
    """
    sf = to_spectral(state, spec)
    vol = spec.box_length ** spec.spatial_dim
    return 0.5 * vol * (np.abs(sf.pi) ** 2 + (spec.k_squared + spec.mass ** 2)
                        * np.abs(sf.phi) ** 2)


def free_amplitudes(state: FieldState, spec: LatticeSpec):
    """a_k = w phi_k + i pi_k; the positive-frequency amplitude (times 2w)."""
    sf = to_spectral(state, spec)
    a = spec.omega * sf.phi + 1j * sf.pi
    return np.where(spec.mode_mask, a, 0.0)


def fock_inner(a: FieldState, b: FieldState, spec: LatticeSpec) -> float:
    """Lorentz-type scalar product: (L^d/2) sum_k (conj(a)b + a conj(b))/(2w).

    On a single mode, energy_inner = omega * fock_inner in this convention
    (the box-normalization constant is pinned by the unit tests).
    """
    aa = free_amplitudes(a, spec)
    bb = free_amplitudes(b, spec)
    vol = spec.box_length ** spec.spatial_dim
    val = 0.5 * vol * np.sum((np.conj(aa) * bb + aa * np.conj(bb)).real
                             / (2.0 * spec.omega) * spec.mode_mask)
    return float(val)
