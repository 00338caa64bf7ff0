"""Multi-chain convergence diagnostics: split R-hat and effective sample size.

Both follow the split-chain conventions of Gelman et al. (BDA3) and the
Geyer initial-monotone-sequence truncation used by Stan.
"""
from __future__ import annotations

import numpy as np


def _split(chains: np.ndarray) -> np.ndarray:
    chains = np.atleast_2d(np.asarray(chains, dtype=float))
    n = chains.shape[1]
    half = n // 2
    if half < 2:
        return chains
    return np.concatenate([chains[:, :half], chains[:, n - half :]], axis=0)


def split_rhat(chains) -> float:
    """Potential scale reduction on split chains, shape (n_chains, n_draws)."""
    x = _split(chains)
    m, n = x.shape
    if m < 2 or n < 2:
        return float("nan")
    within = x.var(axis=1, ddof=1).mean()
    between_over_n = x.mean(axis=1).var(ddof=1)
    if within == 0.0:
        return 1.0 if between_over_n == 0.0 else float("inf")
    var_hat = (n - 1) / n * within + between_over_n
    return float(np.sqrt(var_hat / within))


def _autocovariance(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    centered = x - x.mean(axis=-1, keepdims=True)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, n=size, axis=-1)
    return np.fft.irfft(f * np.conj(f), n=size, axis=-1)[..., :n] / n


def effective_sample_size(chains) -> float:
    """Bulk ESS of the mean for draws of shape (n_chains, n_draws)."""
    x = _split(chains)
    m, n = x.shape
    total = m * n
    if n < 4:
        return float(total)
    acov = _autocovariance(x)
    chain_var = acov[:, 0] * n / (n - 1)
    mean_var = chain_var.mean()
    var_plus = mean_var * (n - 1) / n
    if m > 1:
        var_plus += x.mean(axis=1).var(ddof=1)
    if var_plus <= 0.0:
        return float(total)

    rho = 1.0 - (mean_var - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # Geyer: positive pair sums, made monotone
    pairs = rho[: 2 * (n // 2)].reshape(-1, 2).sum(axis=1)
    stop = np.flatnonzero(pairs <= 0)
    pairs = pairs[: stop[0]] if stop.size else pairs
    pairs = np.minimum.accumulate(pairs)
    tau = -1.0 + 2.0 * pairs.sum()
    tau = max(tau, 1.0 / np.log10(total))
    return float(total / tau)
