"""The classical measurement process: sources, global expansion, energy shift.

An incoming source rho_in (before the interaction window) and an observer
source rho_out (after it) drive the field,

    box(phi) + chi_I (lam/6) phi^3 = (rho_in + rho_out)/2 ,

and the process is expanded around the free solution

    phi0 = phi_in + phi_out ,
    phi_in = (1/2) S_ret rho_in ,  phi_out = (1/2) S_adv rho_out ,

with order-n corrections  phi_n = S_n(-rho_n),  S_n = S0 + c_n P0 + i d_n K0
(default c_n = d_n = 0) and the effective source rho_tilde = sum lam^n rho_n.

The energy shift read off by the observer is

    Delta E = -(1/4) Sdot_adv(rho_tilde, rho_out)
            = +(1/4) Sdot_ret(rho_tilde, rho_in) ,

where Sdot_* are the time-differentiated Green's-function bilinears; the
equality of the two formulas expresses conservation of the free energy
exchanged between the in and out sources.  All asymptotic energies reduce to
one symmetric bilinear kdot_bilinear(r1, r2), the polarized free energy of
the half-retarded responses; in mode space

    kdot(r1, r2) = (L^d/8) sum_k [ conj(C1) C2 + conj(S1) S2 ] ,

with the full-time transforms C_k = int cos(w t) r_k(t) dt, S_k likewise with
sin.  In these terms E_+ = kdot(rho_in - rho_tilde, .), E_- =
kdot(rho_out - rho_tilde, .), E = kdot(rho_in - rho_out - rho_tilde, .) and
Delta E = (E - E^free) - (E_+ - E_+^free) = 2 kdot(rho_out, rho_tilde).
"""

from dataclasses import dataclass, field
from itertools import combinations
import numpy as np

from .core import (LatticeSpec, FieldState, SpacetimeSource, EnergyReport,
                   spatial_coeffs, spatial_values, energy, to_spectral)
from .propagators import PropagatorKind, apply_green, smear_fundamental
from .cauchy import PerturbationSeries, rho_n, direct_solve


@dataclass
class MeasurementSetup:
    lattice: LatticeSpec
    rho_in: SpacetimeSource
    rho_out: SpacetimeSource
    order: int = 2
    c: tuple = ()
    d: tuple = ()

    def __post_init__(self):
        sp = self.lattice
        self.rho_in.validate(sp)
        self.rho_out.validate(sp)
        if self.order < 1:
            raise ValueError("expansion order must be >= 1")
        t = sp.t_interaction
        if not (self.rho_in.support[1] < -t and self.rho_in.support[0] > sp.t_min):
            raise ValueError("rho_in support must lie in (t_min, -T)")
        if not (self.rho_out.support[0] > t and self.rho_out.support[1] < sp.t_max):
            raise ValueError("rho_out support must lie in (T, t_max)")

    def kernel_coeff(self, n):
        cn = self.c[n - 1] if n - 1 < len(self.c) else 0.0
        dn = self.d[n - 1] if n - 1 < len(self.d) else 0.0
        return float(cn), float(dn)


def make_wavepacket_source(spec: LatticeSpec, t_center, x_center, t_width,
                           x_width, wavenumber=0.0, amplitude=1.0,
                           clip=4.0) -> SpacetimeSource:
    """Gaussian wave packet source, clipped to exact zeros at +/- clip widths.

    rho(t, x) = A exp(-(t-t0)^2/2s_t^2) exp(-w(x)^2/2s_x^2) cos(k0 w(x))
    with w(x) the periodically wrapped displacement from x_center.  The
    support window [t0 - clip s_t, t0 + clip s_t] must avoid the interaction
    window and stay inside the time grid.
    """
    t0, t1 = t_center - clip * t_width, t_center + clip * t_width
    if t0 < spec.t_min or t1 > spec.t_max:
        raise ValueError("packet support exceeds the time grid")
    if t1 > -spec.t_interaction and t0 < spec.t_interaction:
        raise ValueError("packet support overlaps the interaction window")
    t = spec.times
    env_t = np.where(np.abs(t - t_center) <= clip * t_width,
                     np.exp(-0.5 * ((t - t_center) / t_width) ** 2), 0.0)
    x_center = np.atleast_1d(np.asarray(x_center, dtype=float))
    r2 = np.zeros(spec.grid_shape)
    phase = np.zeros(spec.grid_shape)
    k0 = np.atleast_1d(np.asarray(wavenumber, dtype=float)) * np.ones(spec.spatial_dim)
    ax = spec.x_axis
    for j in range(spec.spatial_dim):
        shape = [1] * spec.spatial_dim
        shape[j] = spec.modes_per_axis
        w = ax.reshape(shape) - x_center[j]
        w = (w + spec.box_length / 2) % spec.box_length - spec.box_length / 2
        r2 = r2 + w ** 2
        phase = phase + k0[j] * w
    env_x = np.exp(-0.5 * r2 / x_width ** 2) * np.cos(phase)
    vals = amplitude * env_t.reshape((-1,) + (1,) * spec.spatial_dim) * env_x
    return SpacetimeSource(vals, (t0, t1))


def add_sources(a: SpacetimeSource, b: SpacetimeSource) -> SpacetimeSource:
    return SpacetimeSource(a.values + b.values,
                           (min(a.support[0], b.support[0]),
                            max(a.support[1], b.support[1])))


# ---------------------------------------------------------------------------
# the expansion

@dataclass
class ExpansionResult:
    """Perturbative solution of the measurement process on the full grid."""

    series: PerturbationSeries          # phi_0 ... phi_N (phi_0 = free part)
    series_dot: list                    # exact time derivatives of the terms
    rho_terms: list                     # rho_1 ... rho_N (unweighted sources)
    rho_tilde: SpacetimeSource          # sum_n lam^n rho_n
    phi_in: np.ndarray
    phi_out: np.ndarray

    def state(self, i, coupling=None, order=None) -> FieldState:
        lam = self.series.coupling if coupling is None else coupling
        n_max = self.series.order if order is None else order
        phi = np.zeros_like(self.series.terms[0][i])
        dphi = np.zeros_like(phi)
        for n in range(min(n_max, self.series.order) + 1):
            phi += lam ** n * self.series.terms[n][i]
            dphi += lam ** n * self.series_dot[n][i]
        return FieldState(phi, dphi)


def phi0_from_sources(setup: MeasurementSetup):
    """Free part phi0 = (1/2) S_ret rho_in + (1/2) S_adv rho_out.

    Returns (phi_in, phi_out, phi_in_dot, phi_out_dot) on the full grid;
    box(phi0) = (rho_in + rho_out)/2 to quadrature accuracy.
    """
    sp = setup.lattice
    phi_in = 0.5 * apply_green(PropagatorKind.Retarded, setup.rho_in, sp)
    phi_out = 0.5 * apply_green(PropagatorKind.Advanced, setup.rho_out, sp)
    din = 0.5 * apply_green(PropagatorKind.Retarded, setup.rho_in, sp,
                            time_derivative=True)
    dout = 0.5 * apply_green(PropagatorKind.Advanced, setup.rho_out, sp,
                             time_derivative=True)
    return phi_in, phi_out, din, dout


def global_expand(setup: MeasurementSetup) -> ExpansionResult:
    """Order-by-order solution with the causal kernel S0 (plus c_n, d_n terms).

    rho_n is clipped to the interaction window; rho_tilde collects the
    coupling-weighted sum and is supported in [-T, T] exactly.
    """
    sp = setup.lattice
    lam = sp.coupling
    chi = sp.interaction_mask()
    phi_in, phi_out, din, dout = phi0_from_sources(setup)
    terms = [phi_in + phi_out]
    dots = [din + dout]
    rho_terms = []
    tilde = np.zeros_like(terms[0])
    for n in range(1, setup.order + 1):
        rn = rho_n(terms, n, sp, mask=chi)
        rho_terms.append(rn)
        tilde += lam ** n * rn.values
        neg = SpacetimeSource(-rn.values, rn.support)
        cn, dn = setup.kernel_coeff(n)
        term = apply_green(PropagatorKind.Causal, neg, sp)
        dterm = apply_green(PropagatorKind.Causal, neg, sp, time_derivative=True)
        if cn != 0.0:
            term = term + cn * smear_fundamental(PropagatorKind.FundP0, neg, sp)
            dterm = dterm + cn * smear_fundamental(PropagatorKind.FundP0, neg,
                                                   sp, time_derivative=True)
        if dn != 0.0:
            term = term + (1j * dn * smear_fundamental(
                PropagatorKind.FundK0, neg, sp)).real
            dterm = dterm + (1j * dn * smear_fundamental(
                PropagatorKind.FundK0, neg, sp, time_derivative=True)).real
        terms.append(term)
        dots.append(dterm)
    rho_tilde = SpacetimeSource(tilde, (-sp.t_interaction, sp.t_interaction))
    return ExpansionResult(PerturbationSeries(setup.order, terms, lam), dots,
                           rho_terms, rho_tilde, phi_in, phi_out)


# ---------------------------------------------------------------------------
# bilinears

def _full_transforms(values, spec: LatticeSpec):
    """Full-time cos/sin transforms C_k, S_k of a source, trapezoid weights."""
    rho_k = spatial_coeffs(values, spec)
    w = spec.omega[np.newaxis]
    t = spec.times.reshape((-1,) + (1,) * spec.spatial_dim)
    wt = spec.time_weights.reshape((-1,) + (1,) * spec.spatial_dim)
    ck = np.sum(wt * np.cos(w * t) * rho_k, axis=0)
    sk = np.sum(wt * np.sin(w * t) * rho_k, axis=0)
    return ck, sk


def _values(r):
    return r.values if isinstance(r, SpacetimeSource) else np.asarray(r)


def kdot_bilinear(r1, r2, spec: LatticeSpec) -> float:
    """Symmetric asymptotic-energy bilinear of two sources.

    kdot(r, r) is the free energy carried by the field (1/2) S_ret r after
    the source has acted (equivalently, by (1/2) S_adv r before it).
    """
    c1, s1 = _full_transforms(_values(r1), spec)
    c2, s2 = _full_transforms(_values(r2), spec)
    vol = spec.box_length ** spec.spatial_dim
    tot = np.sum((np.conj(c1) * c2 + np.conj(s1) * s2).real * spec.mode_mask)
    return float(vol / 8.0 * tot)


def _dot_bilinear(r1, r2, spec, kind):
    src = r2 if isinstance(r2, SpacetimeSource) else \
        SpacetimeSource(np.asarray(r2), (spec.t_min, spec.t_max))
    resp = apply_green(kind, src, spec, time_derivative=True)
    wt = spec.time_weights.reshape((-1,) + (1,) * spec.spatial_dim)
    return float(np.sum(wt * _values(r1) * resp) * spec.dvol)


def sdotwedge_bilinear(r1, r2, spec: LatticeSpec) -> float:
    """int r1(x) d_t(S_ret r2)(x) dx over space-time."""
    return _dot_bilinear(r1, r2, spec, PropagatorKind.Retarded)


def sdotvee_bilinear(r1, r2, spec: LatticeSpec) -> float:
    """int r1(x) d_t(S_adv r2)(x) dx over space-time."""
    return _dot_bilinear(r1, r2, spec, PropagatorKind.Advanced)


# ---------------------------------------------------------------------------
# energy shift and decomposition

def delta_E(setup: MeasurementSetup, expansion: ExpansionResult = None,
            flag_tolerance=1e-6) -> EnergyReport:
    """Energy shift read off by the observer, both Green's-function formulas.

    delta_E is the advanced-formula value; extra carries the retarded-formula
    value, the bilinear route 2 kdot(rho_out, rho_tilde), and a flag when the
    two formulas disagree beyond flag_tolerance (indicating re-wrap or an
    interaction window that is too short).
    """
    sp = setup.lattice
    if expansion is None:
        expansion = global_expand(setup)
    tilde = expansion.rho_tilde
    vee = -0.25 * sdotvee_bilinear(tilde, setup.rho_out, sp)
    wedge = 0.25 * sdotwedge_bilinear(tilde, setup.rho_in, sp)
    kroute = 2.0 * kdot_bilinear(setup.rho_out, tilde, sp)
    scale = max(abs(vee), abs(wedge), 1e-300)
    rel = abs(vee - wedge) / scale
    report = EnergyReport(delta_E=vee)
    report.extra = {
        "delta_E_advanced": vee,
        "delta_E_retarded": wedge,
        "delta_E_kdot": kroute,
        "formula_rel_diff": rel,
        "flagged": bool(rel > flag_tolerance),
    }
    return report


def quartic_slice_check(setup: MeasurementSetup, expansion: ExpansionResult,
                        threshold=1e-6):
    """Quartic energy density integrals at the +/-T slices, vs the free energy.

    The compact bilinear formulas drop these terms; the check verifies they
    are below threshold x E before the formulas are trusted.
    """
    sp = setup.lattice
    lam = sp.coupling
    vals = {}
    eref = abs(kdot_bilinear(setup.rho_in, setup.rho_in, sp)) + 1e-300
    for label, tslice in (("minus_T", -sp.t_interaction),
                          ("plus_T", sp.t_interaction)):
        st = expansion.state(sp.time_index(tslice))
        q = lam / 24.0 * float(np.sum(st.phi ** 4)) * sp.dvol
        vals[label] = q
    ok = all(abs(v) <= threshold * eref for v in vals.values())
    return {"quartic_slices": vals, "reference_energy": eref, "ok": ok}


def energy_decomposition(setup: MeasurementSetup,
                         expansion: ExpansionResult = None,
                         flag_tolerance=1e-6) -> EnergyReport:
    """Asymptotic energies E, E_+, E_- and their free counterparts.

    All six values come from the kdot bilinear; the report's delta_E is the
    defining arithmetic combination (E - E^free) - (E_+ - E_+^free).  The
    extra dict carries the plus/minus balance (E_+ - E_+^free) - (E_- -
    E_-^free) (zero when free energy bookkeeping between the sources closes)
    and the quartic slice diagnostics.
    """
    sp = setup.lattice
    if expansion is None:
        expansion = global_expand(setup)
    rin = setup.rho_in.values
    rout = setup.rho_out.values
    tld = expansion.rho_tilde.values
    kd = lambda a, b: kdot_bilinear(a, b, sp)
    e_plus = kd(rin - tld, rin - tld)
    e_minus = kd(rout - tld, rout - tld)
    e_int = kd(rin - rout - tld, rin - rout - tld)
    e_plus_f = kd(rin, rin)
    e_minus_f = kd(rout, rout)
    e_int_f = kd(rin - rout, rin - rout)
    report = EnergyReport(
        E_interaction=e_int, E_plus=e_plus, E_minus=e_minus,
        E_free_interaction=e_int_f, E_free_plus=e_plus_f,
        E_free_minus=e_minus_f,
        delta_E=(e_int - e_int_f) - (e_plus - e_plus_f))
    balance = (e_plus - e_plus_f) - (e_minus - e_minus_f)
    scale = max(abs(e_plus - e_plus_f), abs(e_minus - e_minus_f), 1e-300)
    report.extra = {
        "plus_minus_balance": balance,
        "balance_rel": abs(balance) / scale,
        "flagged": bool(abs(balance) / scale > flag_tolerance),
        "quartic_check": quartic_slice_check(setup, expansion),
    }
    return report


def readout_times(setup: MeasurementSetup):
    """Observation times for the E slices: midway between the interaction
    window edge and the nearest source support, snapped to the grid.

    Exactly at +/-T the effective source still acts (its support includes the
    endpoint), so slice readouts happen strictly outside all supports, where
    the free continuation makes the energy slice-independent.
    """
    sp = setup.lattice
    t_after = 0.5 * (sp.t_interaction + setup.rho_out.support[0])
    t_before = 0.5 * (-sp.t_interaction + setup.rho_in.support[1])
    snap = lambda t: sp.t_min + sp.dt * round((t - sp.t_min) / sp.dt)
    return snap(t_before), snap(t_after)


def slice_energies(setup: MeasurementSetup, expansion: ExpansionResult):
    """Free slice energies of the perturbative solution at the window edges
    and grid ends (oracle counterpart of the kdot formulas)."""
    sp = setup.lattice
    t_before, t_after = readout_times(setup)
    out = {}
    for label, t in (("t_min", sp.t_min), ("before_window", t_before),
                     ("after_window", t_after), ("t_max", sp.t_max)):
        st = expansion.state(sp.time_index(t))
        out[label] = energy(st, 0.0, sp)
    return out


def delta_E_finite_difference(setup: MeasurementSetup,
                              expansion: ExpansionResult = None):
    """Direct-solver measurement of Delta E (independent of the bilinears).

    Both the interacting (lam) and free (lam = 0) processes are integrated
    forward from the perturbative initial data at t_min with the source
    (rho_in + rho_out)/2; free slice energies just after the interaction
    window and at the end of the grid give

        Delta E = (E - E^free) - (E_+ - E_+^free) .
    """
    sp = setup.lattice
    if expansion is None:
        expansion = global_expand(setup)
    chi = sp.interaction_mask()
    drive = 0.5 * (setup.rho_in.values + setup.rho_out.values)
    i_T = sp.time_index(readout_times(setup)[1])
    i_end = sp.num_times - 1

    init_int = expansion.state(0)
    traj_int = direct_solve(init_int, sp.coupling, sp, source=drive,
                            interaction_mask=chi)
    init_free = FieldState(expansion.phi_in[0] + expansion.phi_out[0],
                           expansion.series_dot[0][0])
    traj_free = direct_solve(init_free, 0.0, sp, source=drive,
                             interaction_mask=chi)
    e_T = energy(traj_int.state(i_T), 0.0, sp)
    e_T_f = energy(traj_free.state(i_T), 0.0, sp)
    e_end = energy(traj_int.state(i_end), 0.0, sp)
    e_end_f = energy(traj_free.state(i_end), 0.0, sp)
    return {
        "delta_E_fd": (e_T - e_T_f) - (e_end - e_end_f),
        "E_T": e_T, "E_T_free": e_T_f,
        "E_plus": e_end, "E_plus_free": e_end_f,
    }


# ---------------------------------------------------------------------------
# time reflection

def mirror_source(src: SpacetimeSource, spec: LatticeSpec) -> SpacetimeSource:
    """Time-reflected source t -> -t (requires a symmetric time grid)."""
    if abs(spec.t_min + spec.t_max) > 1e-12:
        raise ValueError("time reflection needs a grid symmetric about t = 0")
    return SpacetimeSource(src.values[::-1].copy(),
                           (-src.support[1], -src.support[0]))


def mirror_setup(setup: MeasurementSetup) -> MeasurementSetup:
    """(t -> -t, rho_in <-> rho_out); covariance of the pipeline under this
    map holds whenever all d_n vanish."""
    sp = setup.lattice
    return MeasurementSetup(sp, mirror_source(setup.rho_out, sp),
                            mirror_source(setup.rho_in, sp),
                            order=setup.order, c=setup.c, d=setup.d)


# ---------------------------------------------------------------------------
# classical n-point tree amplitudes

def _free_traj_pair(state: FieldState, spec: LatticeSpec):
    sf = to_spectral(state, spec)
    w = spec.omega[np.newaxis]
    t = spec.times.reshape((-1,) + (1,) * spec.spatial_dim)
    c, s = np.cos(w * t), np.sin(w * t)
    m = spec.mode_mask[np.newaxis]
    phi_k = np.where(m, c * sf.phi[np.newaxis] + s / w * sf.pi[np.newaxis],
                     sf.phi[np.newaxis] + t * sf.pi[np.newaxis])
    pi_k = np.where(m, -w * s * sf.phi[np.newaxis] + c * sf.pi[np.newaxis],
                    sf.pi[np.newaxis] * np.ones_like(t))
    return spatial_values(phi_k, spec), spatial_values(pi_k, spec)


def _odd_triples(items):
    """Unordered partitions of `items` into three nonempty odd-sized blocks."""
    items = list(items)
    n = len(items)
    first = items[0]
    for na in range(1, n - 1, 2):
        for rest_a in combinations(items[1:], na - 1):
            a = (first,) + rest_a
            remaining = [x for x in items if x not in a]
            m = len(remaining)
            for nb in range(1, m, 2):
                if (m - nb) % 2 == 0:
                    continue
                anchor = remaining[0]
                for rest_b in combinations(remaining[1:], nb - 1):
                    b = (anchor,) + rest_b
                    c = tuple(x for x in remaining if x not in b)
                    if not c:
                        continue
                    yield a, b, c


def npoint_amplitude(in_states, out_states, spec: LatticeSpec, lam,
                     dotted=("out", 0)):
    """Classical n-point tree amplitude (coefficient of the energy shift).

    External legs are free fields given by Cauchy data at t = 0; one leg (the
    dotted one) enters through its time derivative.  The value is the sum
    over all labeled tree topologies with k = n/2 - 1 quartic vertices,
    causal internal lines and the interaction window on every vertex:

        A = (lam^k / 2) sum_trees int chi psi_dot prod (S0-contracted subtrees)

    For n = 4 this is (lam/2) int_I phi1 phi2 phi3 psi_dot.  Odd n returns
    0.0 (the amplitude vanishes unless n is even).
    """
    n = len(in_states) + len(out_states)
    if n % 2 == 1:
        return 0.0
    if n < 2:
        raise ValueError("need at least two external legs")
    chi = spec.interaction_mask().reshape((-1,) + (1,) * spec.spatial_dim)
    legs = []
    dot_idx = (0 if dotted[0] == "in" else len(in_states)) + dotted[1]
    for st in list(in_states) + list(out_states):
        legs.append(_free_traj_pair(st, spec))
    k = n // 2 - 1
    psi_dot = legs[dot_idx][1]
    rest = [i for i in range(n) if i != dot_idx]

    memo = {}

    def branch(subset):
        if len(subset) == 1:
            return legs[subset[0]][0]
        key = subset
        if key in memo:
            return memo[key]
        tot = np.zeros((spec.num_times,) + spec.grid_shape)
        for a, b, c in _odd_triples(list(subset)):
            tot += branch(tuple(sorted(a))) * branch(tuple(sorted(b))) \
                * branch(tuple(sorted(c)))
        src = SpacetimeSource(chi * tot, (-spec.t_interaction,
                                          spec.t_interaction))
        res = apply_green(PropagatorKind.Causal, src, spec)
        memo[key] = res
        return res

    wt = spec.time_weights.reshape((-1,) + (1,) * spec.spatial_dim)
    total = 0.0
    if n == 2:
        total = float(np.sum(wt * chi * psi_dot * legs[rest[0]][0]) * spec.dvol)
        return 0.5 * total
    for a, b, c in _odd_triples(rest):
        integrand = chi * psi_dot * branch(tuple(sorted(a))) \
            * branch(tuple(sorted(b))) * branch(tuple(sorted(c)))
        total += float(np.sum(wt * integrand) * spec.dvol)
    return 0.5 * lam ** k * total
