"""Von Neumann thermal ensemble: Gibbs-weighted traces over eigenstates.

Boltzmann's constant is 1, so temperatures are in energy units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ValidationError
from .hilbert import EigenSystem, HermitianOperator, eigendecompose


@dataclass(frozen=True)
class ThermalParams:
    """Temperature T > 0; T = inf is the beta = 0 (uniform weight) limit."""

    T: float

    def __post_init__(self):
        T = float(self.T)
        if math.isnan(T) or T <= 0.0:
            raise ValidationError(f"temperature must be positive, got {self.T!r}")
        object.__setattr__(self, "T", T)

    @classmethod
    def from_beta(cls, beta: float) -> "ThermalParams":
        if beta < 0:
            raise ValidationError(f"beta must be nonnegative, got {beta!r}")
        return cls(math.inf if beta == 0 else 1.0 / beta)

    @property
    def beta(self) -> float:
        return 0.0 if math.isinf(self.T) else 1.0 / self.T


@dataclass(frozen=True)
class PartitionFunction:
    """Z stored as scaled * exp(-beta * shift), shift being the ground energy."""

    scaled: float
    shift: float
    beta: float

    @property
    def log_z(self) -> float:
        return math.log(self.scaled) - self.beta * self.shift

    @property
    def value(self) -> float:
        return self.scaled * math.exp(-self.beta * self.shift)


def gibbs_weights(eigenvalues, params: ThermalParams) -> tuple[np.ndarray, float]:
    """Normalized Boltzmann weights and the unnormalized (shifted) sum."""
    lam = np.asarray(eigenvalues, dtype=float)
    if params.beta == 0.0:
        w = np.ones_like(lam)
    else:
        w = np.exp(-params.beta * (lam - lam.min()))
    total = float(w.sum())
    return w / total, total


def _eigensystem(H) -> EigenSystem:
    return H if isinstance(H, EigenSystem) else eigendecompose(H)


def vnte_partition(H, params: ThermalParams) -> PartitionFunction:
    es = _eigensystem(H)
    _, total = gibbs_weights(es.eigenvalues, params)
    return PartitionFunction(scaled=total, shift=float(es.eigenvalues.min()), beta=params.beta)


def vnte_expectation(H, O: HermitianOperator, params: ThermalParams) -> float:
    """sum_n <psi_n|O|psi_n> exp(-lambda_n/T) / Z.

    H may be a HermitianOperator or a precomputed EigenSystem (useful when
    sweeping T or O over a fixed Hamiltonian).
    """
    es = _eigensystem(H)
    if O.dim != len(es):
        raise ContractViolation(f"dimension mismatch: H {len(es)}, O {O.dim}")
    V = es.matrix
    diag = np.einsum("in,ij,jn->n", V.conj(), O.entries, V).real
    weights, _ = gibbs_weights(es.eigenvalues, params)
    return float(np.dot(weights, diag))
