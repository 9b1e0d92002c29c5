"""Green's functions and fundamental solutions of the wave operator.

All lattice applications are spectral in space and trapezoid-quadrature in
time.  Mode-wise kernels for the operator d_t^2 + w^2 (i.e. box = d_t^2 -
Laplace + m^2 acting on one Fourier mode):

    retarded   g^(s) =  theta(s)  sin(w s)/w      (response to the past)
    advanced   gv(s) = -theta(-s) sin(w s)/w      (response to the future)
    causal     g0(s) =  (g^ + gv)/2
    P0 kernel  p0(s) =  cos(w s)/(2 pi w)         (even, real)
    K0 kernel  k0(s) = -i sin(w s)/(2 pi w)       (odd, imaginary)

so that g^ - gv = 2 pi i k0 holds identically, matching the continuum
relation between the causal Green's functions and the fundamental solution.
apply_green(Retarded, rho) solves box(phi) = rho with vanishing past data.

The separable kernels make the time integrals cumulative:  the retarded
response is  phi_k(t) = [sin(wt) I_c(t) - cos(wt) I_s(t)]/w  with running
integrals I_c, I_s of cos(w tau) rho, sin(w tau) rho.
"""

import enum
import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from .core import LatticeSpec, FieldState, SpacetimeSource, to_spectral, from_spectral, spatial_coeffs, spatial_values


class PropagatorKind(enum.Enum):
    Retarded = "retarded"
    Advanced = "advanced"
    Causal = "causal"
    FundK0 = "K0"
    FundP0 = "P0"
    Feynman = "feynman"


# ---------------------------------------------------------------------------
# free evolution

def free_evolve(state: FieldState, delta_t: float, spec: LatticeSpec) -> FieldState:
    """Exact free evolution by delta_t (any sign): mode-wise rotation.

    The k = 0 massless mode evolves by its exact drift phi += delta_t * pi.
    """
    sf = to_spectral(state, spec)
    w = spec.omega
    c, s = np.cos(w * delta_t), np.sin(w * delta_t)
    phi = np.where(spec.mode_mask, c * sf.phi + s / w * sf.pi,
                   sf.phi + delta_t * sf.pi)
    pi = np.where(spec.mode_mask, -w * s * sf.phi + c * sf.pi, sf.pi)
    return from_spectral(type(sf)(phi, pi), spec)


def free_trajectory(state: FieldState, spec: LatticeSpec, t_ref=0.0):
    """Field values of the free solution on the full (time x space) grid.

    `state` holds the Cauchy data at time t_ref.  Returns the real field
    array of shape (num_times,) + grid_shape.
    """
    sf = to_spectral(state, spec)
    w = spec.omega[np.newaxis]
    dt = (spec.times - t_ref).reshape((-1,) + (1,) * spec.spatial_dim)
    phi_k = np.where(spec.mode_mask[np.newaxis],
                     np.cos(w * dt) * sf.phi[np.newaxis]
                     + np.sin(w * dt) / w * sf.pi[np.newaxis],
                     sf.phi[np.newaxis] + dt * sf.pi[np.newaxis])
    return spatial_values(phi_k, spec)


# ---------------------------------------------------------------------------
# lattice Green's function application

def _running_integrals(rho_k, w, spec):
    """Cumulative trapezoid integrals of cos(w t) rho and sin(w t) rho."""
    t = spec.times.reshape((-1,) + (1,) * spec.spatial_dim)
    cos_t, sin_t = np.cos(w * t), np.sin(w * t)
    ic = cumulative_trapezoid(cos_t * rho_k, dx=spec.dt, axis=0, initial=0.0)
    isn = cumulative_trapezoid(sin_t * rho_k, dx=spec.dt, axis=0, initial=0.0)
    return cos_t, sin_t, ic, isn


def apply_green(kind: PropagatorKind, source: SpacetimeSource, spec: LatticeSpec,
                time_derivative=False):
    """Apply a Green's function {Retarded, Advanced, Causal} to a source.

    Returns the real field on the (time x space) grid; with time_derivative
    the exact time derivative of the response is returned instead (the
    kernels are differentiated analytically, not by finite differences).
    """
    source.validate(spec)
    if kind not in (PropagatorKind.Retarded, PropagatorKind.Advanced,
                    PropagatorKind.Causal):
        raise ValueError("apply_green supports Retarded, Advanced, Causal")
    if kind is PropagatorKind.Causal:
        ret = apply_green(PropagatorKind.Retarded, source, spec, time_derivative)
        adv = apply_green(PropagatorKind.Advanced, source, spec, time_derivative)
        return 0.5 * (ret + adv)

    rho_k = spatial_coeffs(source.values, spec)
    w = spec.omega[np.newaxis]
    cos_t, sin_t, ic, isn = _running_integrals(rho_k, w, spec)
    if kind is PropagatorKind.Retarded:
        if time_derivative:
            out = cos_t * ic + sin_t * isn
        else:
            out = (sin_t * ic - cos_t * isn) / w
    else:  # Advanced: integrals from t to t_max
        jc, js = ic[-1] - ic, isn[-1] - isn
        if time_derivative:
            out = -(sin_t * js + cos_t * jc)
        else:
            out = (cos_t * js - sin_t * jc) / w
    out = np.where(spec.mode_mask[np.newaxis], out, 0.0)
    return spatial_values(out, spec)


def smear_fundamental(kind: PropagatorKind, source: SpacetimeSource,
                      spec: LatticeSpec, time_derivative=False):
    """Smear a source with the fundamental solutions P0 or K0 (full-time kernels).

    The P0 result is real; the K0 result is purely imaginary and is returned
    as a complex array.
    """
    source.validate(spec)
    rho_k = spatial_coeffs(source.values, spec)
    w = spec.omega[np.newaxis]
    t = spec.times.reshape((-1,) + (1,) * spec.spatial_dim)
    cos_t, sin_t = np.cos(w * t), np.sin(w * t)
    wt = spec.time_weights.reshape((-1,) + (1,) * spec.spatial_dim)
    cc = np.sum(wt * cos_t * rho_k, axis=0, keepdims=True)
    ss = np.sum(wt * sin_t * rho_k, axis=0, keepdims=True)
    if kind is PropagatorKind.FundP0:
        if time_derivative:
            out = (-sin_t * cc + cos_t * ss) / (2 * np.pi)
        else:
            out = (cos_t * cc + sin_t * ss) / (2 * np.pi * w)
    elif kind is PropagatorKind.FundK0:
        if time_derivative:
            out = -1j * (cos_t * cc + sin_t * ss) / (2 * np.pi)
        else:
            out = -1j * (sin_t * cc - cos_t * ss) / (2 * np.pi * w)
    else:
        raise ValueError("smear_fundamental supports FundP0 and FundK0")
    out = np.where(spec.mode_mask[np.newaxis], out, 0.0)
    n = spec.modes_per_axis ** spec.spatial_dim
    axes = tuple(range(1, 1 + spec.spatial_dim))
    full = np.fft.ifftn(out * n, axes=axes)
    return full.real if kind is PropagatorKind.FundP0 else 1j * full.imag


# ---------------------------------------------------------------------------
# epsilon-regularized momentum-space values

def momentum_value(kind: PropagatorKind, k0, kvec, eps):
    """Scalar epsilon-regularized momentum-space value of a propagator.

    Conventions (signature +---):  p2 = k0^2 - |kvec|^2,
        Feynman  = 1/(p2 + i eps)
        Causal   = Re Feynman = p2/(p2^2 + eps^2)
        FundP0   = (1/pi) eps/(p2^2 + eps^2)     so Feynman = S0 - i pi P0
        FundK0   = sign(k0) FundP0
        Retarded = 1/(p2 + i eps k0),  Advanced = 1/(p2 - i eps k0)
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    kvec = np.atleast_1d(np.asarray(kvec, dtype=float))
    p2 = float(k0) ** 2 - float(np.dot(kvec, kvec))
    den = p2 * p2 + eps * eps
    if kind is PropagatorKind.Feynman:
        return 1.0 / (p2 + 1j * eps)
    if kind is PropagatorKind.Causal:
        return complex(p2 / den)
    if kind is PropagatorKind.FundP0:
        return complex(eps / den / np.pi)
    if kind is PropagatorKind.FundK0:
        return complex(np.sign(k0) * eps / den / np.pi)
    if kind is PropagatorKind.Retarded:
        return 1.0 / (p2 + 1j * eps * k0)
    if kind is PropagatorKind.Advanced:
        return 1.0 / (p2 - 1j * eps * k0)
    raise ValueError(f"unknown kind {kind}")


# ---------------------------------------------------------------------------
# the product-of-propagators identity

def _reduced_momenta(momenta, qvec):
    """(omega_a, p_a) with p_a = |kvec_a + qvec| from four-momentum input."""
    red = []
    for m in momenta:
        om = float(m[0])
        kv = np.atleast_1d(np.asarray(m[1], dtype=float))
        qv = np.zeros_like(kv) if qvec is None else np.atleast_1d(np.asarray(qvec, dtype=float))
        p = float(np.linalg.norm(kv + qv))
        if p <= 0:
            raise ValueError("need |kvec + qvec| > 0")
        red.append((om, p))
    # pole separation: the on-shell frequencies -omega_a +/- p_a must differ
    poles = sorted(p for om, pp in red for p in (-om - pp, -om + pp))
    for x, y in zip(poles, poles[1:]):
        if abs(x - y) < 1e-6:
            raise ValueError("coincident poles: momenta must be pairwise "
                             "separated")
    return red


def _quad_complex(f, a, b, points=None, **kw):
    re = quad(lambda x: f(x).real, a, b, points=points, **kw)[0]
    im = quad(lambda x: f(x).imag, a, b, points=points, **kw)[0]
    return re + 1j * im


def _lemmarep_sides(red, eps, window=None):
    """Both sides of the identity for one fixed regulator eps."""
    def feyn(om, a):
        om_a, p_a = a
        return 1.0 / ((om + om_a) ** 2 - p_a ** 2 + 1j * eps)

    def s0(om, a):
        om_a, p_a = a
        x = (om + om_a) ** 2 - p_a ** 2
        return x / (x * x + eps * eps)

    def p0(om, a):
        om_a, p_a = a
        x = (om + om_a) ** 2 - p_a ** 2
        return eps / (x * x + eps * eps) / np.pi

    def lhs_f(om):
        val = 1.0 + 0j
        for a in red:
            val *= feyn(om, a)
        return val

    def rhs_f(om):
        tot = 0.0
        for i, a in enumerate(red):
            term = p0(om, a)
            for j, b in enumerate(red):
                if j != i:
                    term *= s0(om, b)
            tot += term
        return tot

    poles = sorted(p for om_a, p_a in red for p in (-om_a - p_a, -om_a + p_a))
    scale = max(abs(p) for p in poles) + max(p for _, p in red)
    w = window if window is not None else 50.0 * scale
    kw = dict(limit=400, epsabs=1e-10, epsrel=1e-10)
    lhs = _quad_complex(lhs_f, -w, w, points=poles, **kw)
    lhs += _quad_complex(lhs_f, w, np.inf, **kw)
    lhs += _quad_complex(lhs_f, -np.inf, -w, **kw)
    rhs = quad(rhs_f, -w, w, points=poles, **kw)[0]
    rhs += quad(rhs_f, w, np.inf, **kw)[0]
    rhs += quad(rhs_f, -np.inf, -w, **kw)[0]
    return lhs, -1j * np.pi * rhs


def verify_lemmarep(momenta, qvec=None, eps_schedule=(1e-2, 5e-3, 2.5e-3)):
    """Check int dq0 prod_a Feyn(k_a+q) = -i pi int dq0 sum_a P0 prod S0.

    momenta: list of (omega_a, kvec_a); qvec shifts the spatial parts.  Both
    sides are computed for every eps in the schedule and extrapolated to
    eps -> 0 by polynomial (Richardson) extrapolation.  Returns a dict with
    the per-eps values, the extrapolated sides and their relative error.
    """
    red = _reduced_momenta(momenta, qvec)
    eps_schedule = list(eps_schedule)
    if len(eps_schedule) < 2:
        raise ValueError("need at least two eps values to extrapolate")
    lhs_vals, rhs_vals = [], []
    for eps in eps_schedule:
        lhs, rhs = _lemmarep_sides(red, eps)
        lhs_vals.append(lhs)
        rhs_vals.append(rhs)

    def extrapolate(vals):
        deg = len(eps_schedule) - 1
        cr = np.polyfit(eps_schedule, [v.real for v in vals], deg)
        ci = np.polyfit(eps_schedule, [v.imag for v in vals], deg)
        return np.polyval(cr, 0.0) + 1j * np.polyval(ci, 0.0)

    lhs0, rhs0 = extrapolate(lhs_vals), extrapolate(rhs_vals)
    rel = abs(lhs0 - rhs0) / max(abs(lhs0), abs(rhs0))
    return {
        "r": len(red),
        "momenta": [(om, p) for om, p in red],
        "eps_schedule": eps_schedule,
        "lhs_per_eps": lhs_vals,
        "rhs_per_eps": rhs_vals,
        "lhs": lhs0,
        "rhs": rhs0,
        "rel_err": float(rel),
    }
