"""Gaussian stochastic background field and the loops it generates.

Each sample is a free solution

    xi_k(t) = alpha_k exp(-i w t) + conj(alpha_{-k}) exp(+i w t)

with independent complex Gaussian amplitudes alpha_k of variance

    <alpha_k conj(alpha_k)> = 1 / (4 pi beta w L^d) ,   <alpha_k^2> = 0 ,

which makes the covariance <xi(x) xi(y)> equal to the box mode sum

    (1 / (beta L^d)) sum_k exp(ik(x-y)) cos(w (t_x - t_y)) / (2 pi w)

(the fundamental solution P0 over beta) and gives every retained mode the
exact mean energy w / (2 pi beta).  Sampling is counter-based (Philox keyed
by seed, counter carrying stream and sample index), so samples are
reproducible and independent of threading or evaluation order.
"""

from dataclasses import dataclass
import numpy as np

from .core import (LatticeSpec, FieldState, SpectralField, from_spectral,
                   mode_energies, spatial_values)
from .measurement import MeasurementSetup, ExpansionResult, global_expand, \
    kdot_bilinear


@dataclass(frozen=True)
class StochasticConfig:
    beta: float
    sample_count: int = 4096
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.sample_count < 2:
            raise ValueError("need at least two samples")


@dataclass
class StochasticSample:
    """One draw of the background ensemble, stored as mode amplitudes."""

    alpha: np.ndarray   # complex, grid_shape

    def mode_variance(self, spec: LatticeSpec, beta: float):
        return sigma_squared(spec, beta)

    def state(self, t, spec: LatticeSpec) -> FieldState:
        """Cauchy data (xi, xi_dot) of the sample at time t."""
        w = spec.omega
        e = np.exp(-1j * w * t)
        rev = _conj_reverse(self.alpha)
        phi_k = self.alpha * e + rev * np.conj(e)
        pi_k = -1j * w * (self.alpha * e - rev * np.conj(e))
        phi_k = np.where(spec.mode_mask, phi_k, 0.0)
        pi_k = np.where(spec.mode_mask, pi_k, 0.0)
        return from_spectral(SpectralField(phi_k, pi_k), spec)

    def trajectory(self, spec: LatticeSpec, times=None):
        """Real field values on (times x space); defaults to the full grid."""
        t = (spec.times if times is None else np.asarray(times))
        t = t.reshape((-1,) + (1,) * spec.spatial_dim)
        w = spec.omega[np.newaxis]
        e = np.exp(-1j * w * t)
        rev = _conj_reverse(self.alpha)[np.newaxis]
        phi_k = self.alpha[np.newaxis] * e + rev * np.conj(e)
        phi_k = np.where(spec.mode_mask[np.newaxis], phi_k, 0.0)
        return spatial_values(phi_k, spec)


def _conj_reverse(a):
    """conj(a(-k)) on the FFT index grid."""
    out = np.conj(a)
    for ax in range(a.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def sigma_squared(spec: LatticeSpec, beta: float):
    """Per-mode amplitude variance 1/(4 pi beta w L^d) on retained modes."""
    vol = spec.box_length ** spec.spatial_dim
    return np.where(spec.mode_mask,
                    1.0 / (4 * np.pi * beta * spec.omega * vol), 0.0)


def _generator(config: StochasticConfig, sample_index):
    bits = np.random.Philox(key=config.seed & (2 ** 64 - 1),
                            counter=[0, 0, config.stream, sample_index])
    return np.random.Generator(bits)


def sample_xi(config: StochasticConfig, spec: LatticeSpec,
              sample_index=0) -> StochasticSample:
    """Draw one background-field sample (deterministic in seed/stream/index)."""
    rng = _generator(config, sample_index)
    shape = spec.grid_shape
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    alpha = np.sqrt(sigma_squared(spec, config.beta) / 2.0) * (re + 1j * im)
    return StochasticSample(np.where(spec.mode_mask, alpha, 0.0))


def covariance_target(spec: LatticeSpec, beta, dt_probe, dx_index):
    """Mode-sum covariance (P0 / beta) for time lag dt_probe and spatial
    offset given by grid index displacement dx_index."""
    vol = spec.box_length ** spec.spatial_dim
    dx_index = np.atleast_1d(np.asarray(dx_index, dtype=int))
    phase = np.zeros(spec.grid_shape)
    for j, kc in enumerate(spec.k_components()):
        phase = phase + kc * (dx_index[j] * spec.dx)
    term = np.cos(phase) * np.cos(spec.omega * dt_probe) / (2 * np.pi * spec.omega)
    return float(np.sum(np.where(spec.mode_mask, term, 0.0)) / (beta * vol))


def covariance_mc(config: StochasticConfig, spec: LatticeSpec, probes):
    """MC covariance estimates at probe pairs ((t1, idx1), (t2, idx2)).

    Returns a list of records {probe, mean, stderr, target, sigma_distance};
    the estimator is the symmetrized product xi(x1) xi(x2) averaged over
    samples, so it is symmetric in the two probes by construction.
    """
    m = config.sample_count
    vals = np.zeros((len(probes), m))
    for s in range(m):
        sample = sample_xi(config, spec, s)
        cache = {}
        for p, ((t1, i1), (t2, i2)) in enumerate(probes):
            for t in (t1, t2):
                if t not in cache:
                    cache[t] = sample.state(t, spec).phi
            vals[p, s] = 0.5 * (cache[t1][tuple(np.atleast_1d(i1))]
                                * cache[t2][tuple(np.atleast_1d(i2))]
                                + cache[t2][tuple(np.atleast_1d(i2))]
                                * cache[t1][tuple(np.atleast_1d(i1))])
    out = []
    for p, ((t1, i1), (t2, i2)) in enumerate(probes):
        mean = float(np.mean(vals[p]))
        stderr = float(np.std(vals[p], ddof=1) / np.sqrt(m))
        di = np.atleast_1d(np.asarray(i2)) - np.atleast_1d(np.asarray(i1))
        target = covariance_target(spec, config.beta, t2 - t1, di)
        out.append({
            "probe": ((t1, i1), (t2, i2)),
            "mean": mean,
            "stderr": stderr,
            "target": target,
            "sigma_distance": abs(mean - target) / stderr if stderr else 0.0,
        })
    return out


def third_moment_mc(config: StochasticConfig, spec: LatticeSpec, probes):
    """MC odd third moments <xi1 xi2 xi3>; the Gaussian ensemble target is 0.

    Probes are pairs ((t1, idx1), (t2, idx2)); the third point is placed at
    the midpoint in time and index.  Returns records with mean, stderr and
    the sigma distance from zero.
    """
    m = config.sample_count
    triples = []
    for (t1, i1), (t2, i2) in probes:
        triples.append(((t1, i1), (t2, i2),
                        (0.5 * (t1 + t2), (int(i1) + int(i2)) // 2)))
    vals = np.zeros((len(triples), m))
    for s in range(m):
        sample = sample_xi(config, spec, s)
        cache = {}
        for p, triple in enumerate(triples):
            prod = 1.0
            for t, i in triple:
                if t not in cache:
                    cache[t] = sample.state(t, spec).phi
                prod = prod * cache[t][tuple(np.atleast_1d(i))]
            vals[p, s] = prod
    out = []
    for p, triple in enumerate(triples):
        mean = float(np.mean(vals[p]))
        stderr = float(np.std(vals[p], ddof=1) / np.sqrt(m))
        out.append({"probe": triple, "mean": mean, "stderr": stderr,
                    "target": 0.0,
                    "sigma_distance": abs(mean) / stderr if stderr else 0.0})
    return out


def equal_point_covariance(spec: LatticeSpec, beta):
    """C(x, x) = (1/(beta L^d)) sum_k 1/(2 pi w) (cutoff-dependent)."""
    return covariance_target(spec, beta, 0.0, [0] * spec.spatial_dim)


def zero_point_energy(config: StochasticConfig, spec: LatticeSpec):
    """Per-mode mean energies of the ensemble vs the w/(2 pi beta) law."""
    m = config.sample_count
    acc = np.zeros(spec.grid_shape)
    acc2 = np.zeros(spec.grid_shape)
    for s in range(m):
        sample = sample_xi(config, spec, s)
        e = mode_energies(sample.state(0.0, spec), spec)
        acc += e
        acc2 += e * e
    mean = acc / m
    var = np.maximum(acc2 / m - mean ** 2, 0.0)
    stderr = np.sqrt(var / m)
    target = np.where(spec.mode_mask, spec.omega / (2 * np.pi * config.beta), 0.0)
    return {"mean": mean, "stderr": stderr, "target": target,
            "mask": spec.mode_mask}


# ---------------------------------------------------------------------------
# loop Monte Carlo for the energy shift

def _kdot_kernel(rho_out_values, spec: LatticeSpec, t_slice):
    """Spacetime kernel K with kdot(rho_out, rho) = sum K * rho (restricted
    to the time indices t_slice)."""
    from .core import spatial_coeffs
    rk = spatial_coeffs(rho_out_values, spec)
    w = spec.omega[np.newaxis]
    t = spec.times.reshape((-1,) + (1,) * spec.spatial_dim)
    wt = spec.time_weights.reshape((-1,) + (1,) * spec.spatial_dim)
    cout = np.sum(wt * np.cos(w * t) * rk, axis=0)
    sout = np.sum(wt * np.sin(w * t) * rk, axis=0)
    tt = spec.times[t_slice].reshape((-1,) + (1,) * spec.spatial_dim)
    vol = spec.box_length ** spec.spatial_dim
    g = (vol / 8.0) * (np.conj(cout)[np.newaxis] * np.cos(w * tt)
                       + np.conj(sout)[np.newaxis] * np.sin(w * tt))
    g = np.where(spec.mode_mask[np.newaxis], g, 0.0)
    axes = tuple(range(1, 1 + spec.spatial_dim))
    n = spec.modes_per_axis ** spec.spatial_dim
    h = np.fft.fftn(g, axes=axes).real / n
    wts = spec.time_weights[t_slice].reshape((-1,) + (1,) * spec.spatial_dim)
    return h * wts


def delta_E_mc(setup: MeasurementSetup, config: StochasticConfig,
               expansion: ExpansionResult = None):
    """First-order stochastic energy shift vs the tadpole-dressed prediction.

    Per sample, Delta E_s = 2 lam kdot(rho_out, chi (phi0 + xi_s)^3 / 6);
    the ensemble prediction replaces <(phi0 + xi)^3> by phi0^3 + 3 C0 phi0
    with the equal-point covariance C0 (the tadpole with its 1/2 symmetry
    factor dressing the tree).  Returns the MC mean, its standard error and
    the prediction, plus the deterministic (beta -> infinity) tree value.
    """
    sp = setup.lattice
    lam = sp.coupling
    if expansion is None:
        expansion = global_expand(setup)
    chi = sp.interaction_mask()
    idx = np.nonzero(chi)[0]
    kernel = _kdot_kernel(setup.rho_out.values, sp, idx)
    phi0 = (expansion.phi_in + expansion.phi_out)[idx]
    times = sp.times[idx]

    m = config.sample_count
    vals = np.empty(m)
    for s in range(m):
        xi = sample_xi(config, sp, s).trajectory(sp, times=times)
        rho1 = (phi0 + xi) ** 3 / 6.0
        vals[s] = 2.0 * lam * float(np.sum(kernel * rho1))
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(m))

    tree = 2.0 * lam * float(np.sum(kernel * phi0 ** 3 / 6.0))
    c0 = equal_point_covariance(sp, config.beta)
    tadpole = 2.0 * lam * float(np.sum(kernel * 0.5 * c0 * phi0))
    prediction = tree + tadpole
    return {
        "mc_mean": mean,
        "mc_stderr": stderr,
        "prediction": prediction,
        "tree": tree,
        "tadpole": tadpole,
        "sigma_distance": abs(mean - prediction) / stderr if stderr else 0.0,
        "samples": m,
    }
