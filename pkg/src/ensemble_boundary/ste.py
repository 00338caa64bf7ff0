"""Schrodingerist thermal ensemble: Gibbs averages over the sphere of states.

Expectations are ratios of integrals over the unit sphere of normalized
complex vectors (uniform surface measure on S^(2 dim - 1)) with weight
exp(-E(psi)/T). Two Monte Carlo routes estimate them: self-normalized
importance sampling with uniform proposals, and multi-chain random-walk
Metropolis. For dim = 2 a deterministic Bloch-sphere quadrature gives an
independent check.

Functionals are evaluated batch-wise: they accept arrays of shape
(..., dim) and return arrays of shape (...).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .diagnostics import effective_sample_size, split_rhat
from .errors import ContractViolation, ValidationError
from .hilbert import HermitianOperator, StateVector
from .models import (
    WfeSpec,
    com_dispersion,
    quadratic_form,
    wfe_energy,
    wfe_gradient,
)
from .vnte import ThermalParams

UNIFORM = "uniform"
METROPOLIS = "metropolis"


def _array(psi) -> np.ndarray:
    if isinstance(psi, StateVector):
        return psi.amplitudes
    return np.asarray(psi, dtype=complex)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


class _Functional:
    dim: int

    def __call__(self, psi):
        a = _array(psi)
        if a.shape[-1] != self.dim:
            raise ContractViolation(f"dimension mismatch: functional {self.dim}, state {a.shape[-1]}")
        return _scalar(self.evaluate(a))

    def evaluate(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError


# -- energies ---------------------------------------------------------------


class EnergyFunctional(_Functional):
    """Energy of a state; subclasses also supply the Euclidean gradient."""

    def gradient(self, psi) -> np.ndarray:
        """dE/dx + i dE/dy at psi = x + iy (no sphere projection)."""
        raise NotImplementedError

    def tangent_gradient(self, psi) -> np.ndarray:
        """Gradient projected onto the tangent space of the unit sphere at psi."""
        a = _array(psi)
        g = self.gradient(a)
        radial = np.einsum("...i,...i->...", a.conj(), g).real
        return g - radial[..., None] * a


@dataclass(frozen=True, eq=False)
class Linear(EnergyFunctional):
    """E(psi) = <psi|H|psi>."""

    H: HermitianOperator

    @property
    def dim(self):
        return self.H.dim

    def evaluate(self, a):
        return quadratic_form(self.H.entries, a)

    def gradient(self, psi):
        return 2 * (_array(psi) @ self.H.entries.T)


@dataclass(frozen=True, eq=False)
class Augmented(EnergyFunctional):
    """E(psi) = <psi|H|psi> + WFE(psi)."""

    H: HermitianOperator
    wfe: WfeSpec

    def __post_init__(self):
        if self.H.dim != self.wfe.dim:
            raise ContractViolation("H and WFE coordinate have different dimensions")

    @classmethod
    def from_model(cls, model) -> "Augmented":
        return cls(model.H, model.wfe)

    @property
    def dim(self):
        return self.H.dim

    def evaluate(self, a):
        return quadratic_form(self.H.entries, a) + wfe_energy(self.wfe, a)

    def gradient(self, psi):
        a = _array(psi)
        return 2 * (a @ self.H.entries.T) + wfe_gradient(self.wfe, a)


# -- observables ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HermitianExpectation(_Functional):
    O: HermitianOperator

    @property
    def dim(self):
        return self.O.dim

    def evaluate(self, a):
        return quadratic_form(self.O.entries, a)


@dataclass(frozen=True, eq=False)
class ProjectionWeight(_Functional):
    """|<phi|psi>|^2."""

    phi: StateVector

    @property
    def dim(self):
        return self.phi.dim

    def evaluate(self, a):
        return np.abs(a @ self.phi.amplitudes.conj()) ** 2


@dataclass(frozen=True, eq=False)
class ComDispersion(_Functional):
    X: HermitianOperator

    @property
    def dim(self):
        return self.X.dim

    def evaluate(self, a):
        return com_dispersion(self.X, a)


# -- configuration and results ----------------------------------------------


@dataclass(frozen=True)
class SamplerConfig:
    """Monte Carlo settings.

    ``n_samples`` is the total retained sample count, split evenly across
    chains. Metropolis chains additionally run ``burn_in`` steps first, during
    which the step size is tuned toward 30-50% acceptance.
    """

    method: str = METROPOLIS
    n_samples: int = 40_000
    n_chains: int = 4
    burn_in: int = 2_000
    step_size: float = 0.3
    seed: int = 0
    rhat_threshold: float = 1.05
    min_ess: float = 100.0
    tune: bool = True

    def __post_init__(self):
        if self.method not in (UNIFORM, METROPOLIS):
            raise ValidationError(f"unknown sampler method {self.method!r}")
        if self.n_chains < 1:
            raise ValidationError("n_chains must be >= 1")
        if self.burn_in < 0:
            raise ValidationError("burn_in must be >= 0")
        if not self.step_size > 0:
            raise ValidationError("step_size must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if self.per_chain < 100:
            raise ValidationError(
                f"need >= 100 retained samples per chain, got {self.n_samples} over {self.n_chains} chains"
            )

    @property
    def per_chain(self) -> int:
        return self.n_samples // self.n_chains


@dataclass(frozen=True)
class EnsembleEstimate:
    mean: float
    std_error: float
    n_effective: float
    r_hat: float
    acceptance_rate: float
    n_samples: int
    flagged: bool


@dataclass(frozen=True, eq=False)
class EnsembleSamples:
    """Draws from one run: states (n_chains, per_chain, dim) and, for
    importance sampling, log-weights (n_chains, per_chain)."""

    states: np.ndarray
    log_weights: Optional[np.ndarray]
    acceptance_rate: float
    config: SamplerConfig
    step_sizes: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def weights(self) -> Optional[np.ndarray]:
        if self.log_weights is None:
            return None
        w = np.exp(self.log_weights - self.log_weights.max())
        return w / w.sum()

    def values(self, obs) -> np.ndarray:
        return np.asarray(obs.evaluate(self.states), dtype=float)


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    masses: np.ndarray
    std_errors: np.ndarray
    estimate: EnsembleEstimate

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


# -- sampling ----------------------------------------------------------------


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    """Independent stream for chain ``chain`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chain,))))


def _gaussian_states(rng: np.random.Generator, shape: tuple, dim: int) -> np.ndarray:
    g = rng.standard_normal(shape + (dim, 2))
    return g[..., 0] + 1j * g[..., 1]


def _normalize(a: np.ndarray) -> np.ndarray:
    return a / np.linalg.norm(a, axis=-1, keepdims=True)


def sample_sphere_uniform(dim: int, rng: np.random.Generator) -> StateVector:
    """Uniform draw from the unit sphere of C^dim (a real (2 dim - 1)-sphere)."""
    if dim < 2:
        raise ContractViolation("dim must be >= 2")
    return StateVector.normalized(_gaussian_states(rng, (), dim))


def _check_inputs(energy, params, cfg):
    if not isinstance(params, ThermalParams):
        raise ContractViolation("params must be ThermalParams")
    if not isinstance(cfg, SamplerConfig):
        raise ContractViolation("cfg must be SamplerConfig")
    if energy.dim < 2:
        raise ContractViolation("dim must be >= 2")


def _draw_uniform(energy, params, cfg) -> EnsembleSamples:
    states = []
    for c in range(cfg.n_chains):
        rng = chain_rng(cfg.seed, c)
        states.append(_normalize(_gaussian_states(rng, (cfg.per_chain,), energy.dim)))
    states = np.stack(states)
    log_w = -params.beta * np.asarray(energy.evaluate(states), dtype=float) if params.beta else np.zeros(states.shape[:2])
    return EnsembleSamples(states=states, log_weights=log_w, acceptance_rate=float("nan"), config=cfg)


_TUNE_WINDOW = 50
_BLOCK = 512
_STEP_BOUNDS = (1e-6, 1e3)


def _draw_metropolis(energy, params, cfg) -> EnsembleSamples:
    C, dim, beta = cfg.n_chains, energy.dim, params.beta
    rngs = [chain_rng(cfg.seed, c) for c in range(C)]
    psi = np.stack([_normalize(_gaussian_states(r, (), dim)) for r in rngs])
    e = np.asarray(energy.evaluate(psi), dtype=float)
    step = np.full(C, float(cfg.step_size))

    n_total = cfg.burn_in + cfg.per_chain
    kept = np.empty((C, cfg.per_chain, dim), dtype=complex)
    window_acc = np.zeros(C)
    kept_acc = 0

    t = 0
    while t < n_total:
        b = min(_BLOCK, n_total - t)
        noise = np.stack([_gaussian_states(r, (b,), dim) for r in rngs], axis=1)
        log_u = np.log(np.stack([r.random(b) for r in rngs], axis=1))
        for k in range(b):
            prop = _normalize(psi + step[:, None] * noise[k])
            e_prop = np.asarray(energy.evaluate(prop), dtype=float)
            accept = log_u[k] < -beta * (e_prop - e) if beta else np.ones(C, dtype=bool)
            psi = np.where(accept[:, None], prop, psi)
            e = np.where(accept, e_prop, e)
            step_no = t + k
            if step_no < cfg.burn_in:
                window_acc += accept
                if cfg.tune and (step_no + 1) % _TUNE_WINDOW == 0:
                    rate = window_acc / _TUNE_WINDOW
                    factor = np.where(rate < 0.3, np.exp(rate - 0.4), np.where(rate > 0.5, np.exp(2 * (rate - 0.4)), 1.0))
                    step = np.clip(step * factor, *_STEP_BOUNDS)
                    window_acc[:] = 0
            else:
                kept[:, step_no - cfg.burn_in] = psi
                kept_acc += int(accept.sum())
        t += b

    return EnsembleSamples(
        states=kept,
        log_weights=None,
        acceptance_rate=kept_acc / (C * cfg.per_chain),
        config=cfg,
        step_sizes=step,
    )


def draw_ensemble(energy: EnergyFunctional, params: ThermalParams, cfg: SamplerConfig) -> EnsembleSamples:
    """Draw Gibbs-weighted ensemble members; deterministic in ``cfg.seed``."""
    _check_inputs(energy, params, cfg)
    if cfg.method == UNIFORM:
        return _draw_uniform(energy, params, cfg)
    return _draw_metropolis(energy, params, cfg)


# -- estimation ----------------------------------------------------------------


def estimate(samples: EnsembleSamples, obs) -> EnsembleEstimate:
    """Mean of ``obs`` over the ensemble with standard error and diagnostics."""
    cfg = samples.config
    if obs.dim != samples.states.shape[-1]:
        raise ContractViolation("observable dimension does not match samples")
    v = samples.values(obs)
    n = v.size
    if np.ptp(v) <= 64 * np.finfo(float).eps * max(1.0, float(np.abs(v).max())):
        return EnsembleEstimate(float(v.mean()), 0.0, float(n), 1.0, samples.acceptance_rate, n, False)

    if samples.log_weights is not None:
        w = samples.weights
        mean = float(np.sum(w * v))
        se = float(np.sqrt(np.sum(w**2 * (v - mean) ** 2)))
        ess = float(1.0 / np.sum(w**2))
        # independent draws: no transient, so convergence is judged by weight degeneracy
        return EnsembleEstimate(mean, se, ess, 1.0, float("nan"), n, ess < cfg.min_ess)

    mean = float(v.mean())
    spread = float(v.var(ddof=1))
    ess = effective_sample_size(v)
    rhat = split_rhat(v)
    se = math.sqrt(spread / ess)
    flagged = not (rhat <= cfg.rhat_threshold)
    return EnsembleEstimate(mean, se, ess, rhat, samples.acceptance_rate, n, flagged)


def ste_expectation(energy, obs, params: ThermalParams, cfg: SamplerConfig) -> EnsembleEstimate:
    if obs.dim != energy.dim:
        raise ContractViolation("energy and observable dimensions differ")
    return estimate(draw_ensemble(energy, params, cfg), obs)


def histogram(samples: EnsembleSamples, obs, bins: int, value_range=None) -> Histogram:
    """Gibbs-weighted histogram of obs over ensemble members.

    Values outside ``value_range`` are clipped into the end bins so masses
    always sum to one.
    """
    if bins < 2:
        raise ContractViolation("bins must be >= 2")
    v = samples.values(obs)
    est = estimate(samples, obs)
    if value_range is None:
        lo, hi = float(v.min()), float(v.max())
        if hi - lo < 1e-12 * max(1.0, abs(lo)):
            lo, hi = lo - 0.5, hi + 0.5
    else:
        lo, hi = map(float, value_range)
    edges = np.linspace(lo, hi, bins + 1)
    idx = np.clip(np.searchsorted(edges, v, side="right") - 1, 0, bins - 1)

    w = samples.weights
    if w is not None:
        masses = np.bincount(idx.ravel(), weights=w.ravel(), minlength=bins)
        masses = masses / masses.sum()
        ind = idx.ravel()[None, :] == np.arange(bins)[:, None]
        se = np.sqrt(np.sum(w.ravel() ** 2 * (ind - masses[:, None]) ** 2, axis=1))
    else:
        counts = np.bincount(idx.ravel(), minlength=bins).astype(float)
        masses = counts / counts.sum()
        se = np.empty(bins)
        for b in range(bins):
            indicator = (idx == b).astype(float)
            if masses[b] in (0.0, 1.0):
                se[b] = 0.0
            else:
                se[b] = math.sqrt(masses[b] * (1 - masses[b]) / effective_sample_size(indicator))
    return Histogram(edges=edges, masses=masses, std_errors=se, estimate=est)


def ensemble_histogram(energy, obs, params: ThermalParams, cfg: SamplerConfig, bins: int, value_range=None) -> Histogram:
    if bins < 2:
        raise ContractViolation("bins must be >= 2")
    return histogram(draw_ensemble(energy, params, cfg), obs, bins, value_range)


# -- dim-2 quadrature oracle ----------------------------------------------------


def check_phase_invariance(functional, rng: np.random.Generator, n_probe: int = 8, rtol: float = 1e-10):
    psi = _normalize(_gaussian_states(rng, (n_probe,), functional.dim))
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=(n_probe, 1)))
    a = np.asarray(functional.evaluate(psi), dtype=float)
    b = np.asarray(functional.evaluate(phases * psi), dtype=float)
    if np.any(np.abs(a - b) > rtol * np.maximum(1.0, np.abs(a))):
        raise ContractViolation(f"{type(functional).__name__} is not invariant under global phase")


def _bloch_ratio(energy, obs, beta: float, n: int, rows: int = 64) -> float:
    theta = (np.arange(n) + 0.5) * np.pi / n
    phi = np.arange(2 * n) * np.pi / n
    phase = np.exp(1j * phi)
    num = den = 0.0
    shift = math.inf
    for start in range(0, n, rows):
        th = theta[start : start + rows, None]
        psi = np.stack(np.broadcast_arrays(np.cos(th / 2) + 0j, phase * np.sin(th / 2)), axis=-1)
        e = np.asarray(energy.evaluate(psi), dtype=float)
        o = np.asarray(obs.evaluate(psi), dtype=float)
        if beta:
            local = float(e.min())
            if local < shift:
                rescale = math.exp(-beta * (shift - local)) if math.isfinite(shift) else 0.0
                num, den, shift = num * rescale, den * rescale, local
            w = np.sin(th) * np.exp(-beta * (e - shift))
        else:
            w = np.broadcast_to(np.sin(th), e.shape)
        num += float(np.sum(w * o))
        den += float(np.sum(w))
    return num / den


def ste_quadrature_2d(
    energy,
    obs,
    params: ThermalParams,
    n_grid: int = 32,
    tol: float = 1e-10,
    max_grid: int = 4096,
) -> float:
    """Deterministic dim-2 Gibbs average over the Bloch sphere.

    States are parametrized as (cos(theta/2), exp(i phi) sin(theta/2)) with
    area element sin(theta) dtheta dphi; the global phase integrates out for
    phase-invariant functionals. The theta axis uses the midpoint rule and phi
    the periodic trapezoid rule with twice as many points. ``n_grid`` is
    doubled and the sequence Romberg-extrapolated until successive
    extrapolants agree to ``tol`` (relative to max(1, |value|)).
    """
    if energy.dim != 2 or obs.dim != 2:
        raise ContractViolation("quadrature oracle is for dim = 2 only")
    rng = np.random.default_rng(12345)
    check_phase_invariance(energy, rng)
    check_phase_invariance(obs, rng)

    beta = params.beta
    n = max(2, int(n_grid))
    table = [[_bloch_ratio(energy, obs, beta, n)]]
    best = table[0][0]
    while 2 * n <= max_grid:
        n *= 2
        row = [_bloch_ratio(energy, obs, beta, n)]
        for k, prev in enumerate(table[-1]):
            f = 4.0 ** (k + 1)
            row.append((f * row[k] - prev) / (f - 1))
        table.append(row)
        if abs(row[-1] - best) <= tol * max(1.0, abs(row[-1])):
            return float(row[-1])
        best = row[-1]
    warnings.warn(f"Bloch quadrature not converged to {tol:g} at n_grid={n}", RuntimeWarning, stacklevel=2)
    return float(best)
