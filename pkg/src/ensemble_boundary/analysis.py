"""Case-I/case-II classification, nonlinear ground states, detection
statistics and the magnet order-parameter scan."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .hilbert import StateVector, sigma_z
from .models import CurieWeissModel, EnantiomerModel, build_curie_weiss, build_enantiomer, total_energy
from .parallel import cell_seed, map_ordered
from .ste import (
    Augmented,
    EnsembleEstimate,
    EnsembleSamples,
    HermitianExpectation,
    Histogram,
    ProjectionWeight,
    SamplerConfig,
    _normalize,
    chain_rng,
    draw_ensemble,
    estimate,
    histogram,
    sample_sphere_uniform,
)
from .vnte import ThermalParams, vnte_expectation


class Verdict(str, enum.Enum):
    CASE_I = "CaseI"
    CASE_II = "CaseII"
    CRITICAL = "Critical"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CaseClassification:
    verdict: Verdict
    energy_localized: float
    energy_superposed: float
    margin: float


def classify_case(model: EnantiomerModel, rtol: float = 1e-12) -> CaseClassification:
    """Compare total energies of the localized form psi_A and the symmetric
    superposition psi_0.

    margin = E(psi_0) - E(psi_A). Positive margin means the localized forms
    are lower (case I); negative means the superposition is (case II). Margins
    within rtol of the energy scale are reported as Critical.
    """
    e_loc = total_energy(model, model.psi_A)
    e_sup = total_energy(model, model.psi_0)
    margin = e_sup - e_loc
    scale = max(abs(e_loc), abs(e_sup), model.delta)
    if abs(margin) <= rtol * scale:
        verdict = Verdict.CRITICAL
    elif margin > 0:
        verdict = Verdict.CASE_I
    else:
        verdict = Verdict.CASE_II
    return CaseClassification(verdict, e_loc, e_sup, margin)


def critical_w(E: float, delta: float, d: float, N: int) -> float:
    """Coupling w* = 4 delta / (N^2 d^2) at which psi_A and psi_0 have equal
    total energy. Independent of E."""
    if not delta > 0 or not d > 0 or N < 1:
        raise ValidationError("need delta > 0, d > 0, N >= 1")
    return 4.0 * delta / (N**2 * d**2)


def locate_boundary(E: float, delta: float, d: float, N: int, w_lo: float, w_hi: float, rtol: float = 1e-12) -> float:
    """Bisect on the classify_case verdict between a case-II and a case-I coupling."""
    def verdict(w):
        return classify_case(build_enantiomer(E, delta, d, w, N)).verdict

    lo, hi = verdict(w_lo), verdict(w_hi)
    if lo == Verdict.CRITICAL:
        return float(w_lo)
    if hi == Verdict.CRITICAL:
        return float(w_hi)
    if not (lo == Verdict.CASE_II and hi == Verdict.CASE_I):
        raise ValidationError(f"[{w_lo}, {w_hi}] does not bracket the boundary ({lo}, {hi})")
    while w_hi - w_lo > rtol * w_hi:
        mid = 0.5 * (w_lo + w_hi)
        v = verdict(mid)
        if v == Verdict.CRITICAL:
            return mid
        if v == Verdict.CASE_I:
            w_hi = mid
        else:
            w_lo = mid
    return 0.5 * (w_lo + w_hi)


# -- nonlinear ground state -----------------------------------------------------


@dataclass(frozen=True)
class MinimizerConfig:
    n_starts: int = 32
    max_iter: int = 100_000
    gtol: float = 1e-9
    seed: int = 0
    armijo: float = 0.5


@dataclass(frozen=True, eq=False)
class GroundStateResult:
    minimizer: StateVector
    energy: float
    converged: bool
    iterations: int
    local_minima: tuple = ()


def _distinct_minima(states, energies, overlap_tol=1e-6):
    minima = []
    for k in np.argsort(energies, kind="stable"):
        a = states[k]
        if all(abs(np.vdot(b.amplitudes, a)) ** 2 < 1 - overlap_tol for b, _ in minima):
            minima.append((StateVector.normalized(a), float(energies[k])))
    return tuple(minima)


def ground_state_search(energy, dim: int, cfg: MinimizerConfig = MinimizerConfig()) -> GroundStateResult:
    """Minimize energy on the unit sphere by projected gradient descent.

    All starts advance together: each keeps its own step length, doubled
    after an accepted step and halved after an Armijo rejection, and the
    candidate is retracted onto the sphere by normalization. A start stops
    once its tangential gradient norm falls below ``cfg.gtol``.
    """
    if energy.dim != dim:
        raise ValidationError("energy functional dimension does not match dim")
    psi = np.stack([sample_sphere_uniform(dim, chain_rng(cfg.seed, s)).amplitudes for s in range(cfg.n_starts)])
    e = np.asarray(energy.evaluate(psi), dtype=float)
    g = energy.tangent_gradient(psi)
    gn = np.linalg.norm(g, axis=1)
    eta = np.ones(cfg.n_starts)
    active = gn >= cfg.gtol
    iters = np.zeros(cfg.n_starts, dtype=int)

    for _ in range(cfg.max_iter):
        if not active.any():
            break
        cand = _normalize(psi - eta[:, None] * g)
        ec = np.asarray(energy.evaluate(cand), dtype=float)
        gc = energy.tangent_gradient(cand)
        gnc = np.linalg.norm(gc, axis=1)
        # when the Armijo decrease is below the rounding of e, require a
        # gradient-norm decrease instead
        slack = 8 * np.finfo(float).eps * np.maximum(1.0, np.abs(e))
        target = cfg.armijo * eta * gn**2
        ok = np.where(target > slack, ec <= e - target, (ec - e <= slack) & (gnc < 0.9 * gn))
        ok &= active
        psi = np.where(ok[:, None], cand, psi)
        e = np.where(ok, ec, e)
        g = np.where(ok[:, None], gc, g)
        gn = np.where(ok, gnc, gn)
        iters += active
        eta = np.where(ok, np.minimum(2 * eta, 1e3), np.where(active, 0.5 * eta, eta))
        active &= (gn >= cfg.gtol) & (eta > 1e-18)

    converged = gn < cfg.gtol
    best = int(np.argmin(e))
    return GroundStateResult(
        minimizer=StateVector.normalized(psi[best]),
        energy=float(e[best]),
        converged=bool(converged[best]),
        iterations=int(iters[best]),
        local_minima=_distinct_minima(psi, e),
    )


# -- detection statistics ---------------------------------------------------------

LOCALIZED_WINDOW = 0.05


@dataclass(frozen=True, eq=False)
class DetectionStats:
    estimate: EnsembleEstimate
    histogram: Histogram
    localized_fraction: float


def _window_fraction(samples: EnsembleSamples, values: np.ndarray, targets, window: float) -> float:
    near = np.zeros(values.shape, dtype=bool)
    for t in targets:
        near |= np.abs(values - t) <= window
    w = samples.weights
    return float(near.mean()) if w is None else float(np.sum(w * near))


def conversion_stats_from_samples(model: EnantiomerModel, samples: EnsembleSamples, bins: int = 20, isoform: str = "A") -> DetectionStats:
    phi = {"A": model.psi_A, "B": model.psi_B}[isoform]
    obs = ProjectionWeight(phi)
    hist = histogram(samples, obs, bins, (0.0, 1.0))
    frac = _window_fraction(samples, samples.values(obs), (0.0, 1.0), LOCALIZED_WINDOW)
    return DetectionStats(hist.estimate, hist, frac)


def rotation_stats_from_samples(model: EnantiomerModel, samples: EnsembleSamples, bins: int = 20) -> DetectionStats:
    obs = HermitianExpectation(sigma_z())
    hist = histogram(samples, obs, bins, (-1.0, 1.0))
    frac = _window_fraction(samples, samples.values(obs), (-1.0, 1.0), 2 * LOCALIZED_WINDOW)
    return DetectionStats(hist.estimate, hist, frac)


def conversion_fraction_stats(model: EnantiomerModel, params: ThermalParams, cfg: SamplerConfig, bins: int = 20, isoform: str = "A") -> DetectionStats:
    """Distribution over ensemble members of the weight on isoform A (or B).

    ``localized_fraction`` is the Gibbs-weighted share of members within
    0.05 of 0 or 1, i.e. members that are essentially pure A or pure B.
    """
    samples = draw_ensemble(Augmented.from_model(model), params, cfg)
    return conversion_stats_from_samples(model, samples, bins, isoform)


def optical_rotation_stats(model: EnantiomerModel, params: ThermalParams, cfg: SamplerConfig, bins: int = 20) -> DetectionStats:
    """Signed statistic <psi|diag(1, -1)|psi>: +1 for pure A, -1 for pure B."""
    samples = draw_ensemble(Augmented.from_model(model), params, cfg)
    return rotation_stats_from_samples(model, samples, bins)


# -- scans ------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryCell:
    w: float
    T: float
    verdict: Verdict
    margin: float
    conversion: EnsembleEstimate
    bimodality: float


def _boundary_cell(task):
    E, delta, d, N, w, T, cfg, bins = task
    model = build_enantiomer(E, delta, d, w, N)
    stats = conversion_fraction_stats(model, ThermalParams(T), cfg, bins)
    c = classify_case(model)
    return BoundaryCell(w, T, c.verdict, c.margin, stats.estimate, stats.localized_fraction)


def boundary_scan(E, delta, d, N, w_grid, T_grid, cfg: SamplerConfig, bins: int = 20, workers: int = 1) -> list:
    """One cell per (w, T), w-major. Cell i samples with seed cell_seed(cfg.seed, i)."""
    if not len(w_grid) or not len(T_grid):
        raise ValidationError("grids must be nonempty")
    tasks = []
    for w in w_grid:
        for T in T_grid:
            seed = cell_seed(cfg.seed, len(tasks))
            tasks.append((E, delta, d, N, float(w), float(T), replace(cfg, seed=seed), bins))
    return map_ordered(_boundary_cell, tasks, workers)


@dataclass(frozen=True)
class MagnetCell:
    T: float
    w: float
    vnte_m2: float
    ste_m2: EnsembleEstimate


def natural_w_scale(model: CurieWeissModel) -> float:
    """Coupling at which w N^2 Var(M/N) reaches J for a maximally spread state."""
    return model.J / model.n_spins**2


def _magnet_cell(task):
    N, J, T, w, cfg = task
    model = build_curie_weiss(N, J, w)
    params = ThermalParams(T)
    exact = vnte_expectation(model.H, model.m2, params)
    ste = estimate(draw_ensemble(Augmented.from_model(model), params, cfg), HermitianExpectation(model.m2))
    return MagnetCell(T, w, exact, ste)


def magnetization_scan(model: CurieWeissModel, T_grid, w_grid, cfg: SamplerConfig, workers: int = 1) -> list:
    """<(M/N)^2> per (T, w), T-major: exact vNTE and sampled STE with WFE.

    The vNTE column ignores w (it is built on the linear Hamiltonian only).
    """
    if not len(T_grid) or not len(w_grid):
        raise ValidationError("grids must be nonempty")
    tasks = []
    for T in T_grid:
        for w in w_grid:
            seed = cell_seed(cfg.seed, len(tasks))
            tasks.append((model.n_spins, model.J, float(T), float(w), replace(cfg, seed=seed)))
    return map_ordered(_magnet_cell, tasks, workers)
