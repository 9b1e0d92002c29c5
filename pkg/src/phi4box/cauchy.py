"""Perturbative solution of the nonlinear Cauchy problem and a direct solver.

The equation of motion box(phi) = -(lam/6) phi^3 is expanded in powers of the
coupling, phi = sum_n lam^n phi_n.  The corrections satisfy

    box(phi_n) = -rho_n ,   rho_n = (1/6) sum_{a+b+c=n-1} phi_a phi_b phi_c ,

with zero Cauchy data at the initial time; they are obtained by applying the
retarded Green's function.  The direct solver (Strang split-step with an exact
free rotation) serves as the independent convergence oracle.
"""

from dataclasses import dataclass, field
import numpy as np

from .core import LatticeSpec, FieldState, SpacetimeSource, to_spectral, energy
from .propagators import PropagatorKind, apply_green, free_trajectory


@dataclass
class PerturbationSeries:
    """Order-n corrections phi_0 ... phi_N on the (time x space) grid."""

    order: int
    terms: list
    coupling: float

    def __post_init__(self):
        if self.order != len(self.terms) - 1:
            raise ValueError("order must equal len(terms) - 1")

    def partial_sum(self, coupling=None, order=None):
        lam = self.coupling if coupling is None else coupling
        n_max = self.order if order is None else order
        out = np.zeros_like(self.terms[0])
        for n in range(min(n_max, self.order) + 1):
            out += lam ** n * self.terms[n]
        return out


def rho_n(terms, n, spec: LatticeSpec, mask=None) -> SpacetimeSource:
    """Order-n cubic source (1/6) sum_{a+b+c=n-1} phi_a phi_b phi_c.

    `mask` is an optional time-grid indicator (the interaction window chi_I)
    multiplied onto the result.
    """
    if n < 1:
        raise ValueError("rho_n is defined for n >= 1")
    if len(terms) < n:
        raise ValueError(f"need terms up to order {n - 1}, got {len(terms)}")
    vals = np.zeros_like(terms[0])
    for a in range(n):
        for b in range(n - a):
            c = n - 1 - a - b
            vals += terms[a] * terms[b] * terms[c]
    vals /= 6.0
    support = (spec.t_min, spec.t_max)
    if mask is not None:
        vals = vals * np.reshape(mask, (-1,) + (1,) * spec.spatial_dim)
        idx = np.nonzero(mask)[0]
        if idx.size:
            support = (spec.times[idx[0]], spec.times[idx[-1]])
        else:
            support = (spec.t_min, spec.t_min)
            vals = np.zeros_like(vals)
    return SpacetimeSource(vals, support)


def perturbative_cauchy(initial: FieldState, lam: float, order: int,
                        spec: LatticeSpec) -> PerturbationSeries:
    """Retarded perturbation expansion from Cauchy data at t_min.

    phi_0 is the free evolution of `initial`; each correction is the retarded
    response to -rho_n and carries zero Cauchy data at t_min.  The terms do
    not depend on lam (it only weights the partial sums).
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    terms = [free_trajectory(initial, spec, t_ref=spec.t_min)]
    for n in range(1, order + 1):
        src = rho_n(terms, n, spec)
        src = SpacetimeSource(-src.values, src.support)
        terms.append(apply_green(PropagatorKind.Retarded, src, spec))
    return PerturbationSeries(order, terms, lam)


@dataclass
class Trajectory:
    """Field and momentum history on the full time grid."""

    phi: np.ndarray  # (num_times,) + grid_shape
    pi: np.ndarray
    times: np.ndarray

    def state(self, i) -> FieldState:
        return FieldState(self.phi[i], self.pi[i])


class BlowUpError(RuntimeError):
    def __init__(self, t, norm):
        super().__init__(f"field norm {norm:.3e} exceeded the bound at t = {t:.6g}")
        self.time = t
        self.norm = norm


def direct_solve(initial: FieldState, lam: float, spec: LatticeSpec,
                 source=None, interaction_mask=None, norm_bound=1e8) -> Trajectory:
    """Strang split-step integration of box(phi) = -chi (lam/6) phi^3 + source.

    Half nonlinear/source kick, exact free rotation, half kick; second order
    in dt with exact linear part (no CFL restriction).  `source` is an
    optional driving density on the (time x space) grid; `interaction_mask`
    restricts the nonlinearity to a time window (default: always on).
    """
    nt = spec.num_times
    chi = np.ones(nt) if interaction_mask is None else np.asarray(interaction_mask, float)
    phi_hist = np.empty((nt,) + spec.grid_shape)
    pi_hist = np.empty((nt,) + spec.grid_shape)
    phi = initial.phi.copy()
    pi = initial.pi.copy()
    phi_hist[0], pi_hist[0] = phi, pi

    w = spec.omega
    mask = spec.mode_mask
    c, s = np.cos(w * spec.dt), np.sin(w * spec.dt)

    # With m = 0 the k = 0 mode is excluded everywhere, so the acceleration is
    # projected onto the retained modes (subtract the spatial mean); otherwise
    # the nonlinearity would secularly drive the frequency-zero mode that the
    # Green's-function machinery drops.
    project = not bool(np.all(mask))

    def kick(i, phi, pi, half_dt):
        acc = -chi[i] * (lam / 6.0) * phi ** 3
        if source is not None:
            acc = acc + source[i]
        if project:
            acc = acc - np.mean(acc)
        return pi + half_dt * acc

    n_grid = spec.modes_per_axis ** spec.spatial_dim
    for i in range(nt - 1):
        pi = kick(i, phi, pi, 0.5 * spec.dt)
        # exact free rotation in mode space
        ck = np.fft.fftn(phi) / n_grid
        dk = np.fft.fftn(pi) / n_grid
        ck2 = np.where(mask, c * ck + s / w * dk, ck + spec.dt * dk)
        dk2 = np.where(mask, -w * s * ck + c * dk, dk)
        phi = np.fft.ifftn(ck2 * n_grid).real
        pi = np.fft.ifftn(dk2 * n_grid).real
        pi = kick(i + 1, phi, pi, 0.5 * spec.dt)
        nrm = np.max(np.abs(phi))
        if not np.isfinite(nrm) or nrm > norm_bound:
            raise BlowUpError(spec.times[i + 1], nrm)
        phi_hist[i + 1], pi_hist[i + 1] = phi, pi
    return Trajectory(phi_hist, pi_hist, spec.times.copy())


def energy_drift(traj: Trajectory, lam: float, spec: LatticeSpec) -> float:
    """Maximum relative deviation of the conserved energy along a trajectory."""
    e0 = energy(traj.state(0), lam, spec)
    emax = 0.0
    for i in range(len(traj.times)):
        e = energy(traj.state(i), lam, spec)
        emax = max(emax, abs(e - e0))
    return emax / abs(e0)


def residual_table(initial: FieldState, spec: LatticeSpec, orders, lams):
    """Rows (lam, order, sup_error, l2_error) of truncation residuals.

    The direct solver is the reference; the perturbative partial sum at each
    order is compared on the full grid.
    """
    series = perturbative_cauchy(initial, 0.0, max(orders), spec)
    rows = []
    for lam in lams:
        ref = direct_solve(initial, lam, spec).phi
        for n in orders:
            diff = series.partial_sum(coupling=lam, order=n) - ref
            sup = float(np.max(np.abs(diff)))
            l2 = float(np.sqrt(np.sum(diff ** 2) * spec.dvol * spec.dt))
            rows.append((lam, n, sup, l2))
    return rows


def rewrap_time(spec: LatticeSpec) -> float:
    """Travel time for a unit-speed packet to wrap around the periodic box.

    Runs longer than this mix wrapped-around radiation back into the window;
    scenario times should stay below it.
    """
    return spec.box_length
