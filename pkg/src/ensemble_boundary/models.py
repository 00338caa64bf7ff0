"""Concrete systems and the wavefunction-energy (WFE) term.

WFE(psi) = w * N**2 * Var_psi(X), where X is a collective (centre-of-mass
like) coordinate and N the number of degrees of freedom. N is a plain model
parameter and is independent of the Hilbert-space dimension.

State arguments may be a StateVector or a raw complex array of shape
(..., dim); raw arrays are evaluated batch-wise over the leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ValidationError
from .hilbert import HermitianOperator, StateVector, eigendecompose


def _states(psi, dim: int) -> np.ndarray:
    a = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
    if a.shape[-1] != dim:
        raise ContractViolation(f"dimension mismatch: expected {dim}, got {a.shape[-1]}")
    return a


def quadratic_form(A: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Re <a|A|a> over the leading axes of a."""
    return np.einsum("...i,...i->...", a.conj(), a @ A.T).real


@dataclass(frozen=True, eq=False)
class WfeSpec:
    w: float
    n_dof: int
    X: HermitianOperator

    def __post_init__(self):
        if not self.w >= 0:
            raise ValidationError(f"w must be >= 0, got {self.w!r}")
        if int(self.n_dof) != self.n_dof or self.n_dof < 1:
            raise ValidationError(f"n_dof must be a positive integer, got {self.n_dof!r}")
        object.__setattr__(self, "w", float(self.w))
        object.__setattr__(self, "n_dof", int(self.n_dof))
        object.__setattr__(self, "_X2", self.X.entries @ self.X.entries)

    @property
    def prefactor(self) -> float:
        return self.w * self.n_dof**2

    @property
    def dim(self) -> int:
        return self.X.dim


def com_dispersion(X: HermitianOperator, psi):
    """Var_psi(X) = <X^2> - <X>^2."""
    a = _states(psi, X.dim)
    mean = quadratic_form(X.entries, a)
    var = quadratic_form(X.entries @ X.entries, a) - mean**2
    return np.maximum(var, 0.0)


def wfe_energy(spec: WfeSpec, psi):
    a = _states(psi, spec.dim)
    mean = quadratic_form(spec.X.entries, a)
    var = quadratic_form(spec._X2, a) - mean**2
    return spec.prefactor * np.maximum(var, 0.0)


def wfe_gradient(spec: WfeSpec, psi) -> np.ndarray:
    """Euclidean gradient of wfe_energy in the real coordinates (x, y) of
    psi = x + iy, packed as dE/dx + i dE/dy."""
    a = _states(psi, spec.dim)
    X = spec.X.entries
    mean = quadratic_form(X, a)
    g = 2 * (a @ spec._X2.T) - 4 * mean[..., None] * (a @ X.T)
    return spec.prefactor * g


def total_energy(model, psi):
    """<psi|H|psi> + WFE(psi) for any model exposing ``H`` and ``wfe``."""
    a = _states(psi, model.H.dim)
    e = quadratic_form(model.H.entries, a) + wfe_energy(model.wfe, a)
    return float(e) if np.ndim(e) == 0 else e


def total_energy_gradient(model, psi) -> np.ndarray:
    a = _states(psi, model.H.dim)
    return 2 * (a @ model.H.entries.T) + wfe_gradient(model.wfe, a)


@dataclass(frozen=True, eq=False)
class EnantiomerModel:
    """Two forms A and B with on-site energy E, tunnelling -delta between them,
    and centre-of-mass positions +d/2 and -d/2. Basis order is (A, B)."""

    E: float
    delta: float
    d: float
    wfe: WfeSpec

    @property
    def H(self) -> HermitianOperator:
        return HermitianOperator(np.array([[self.E, -self.delta], [-self.delta, self.E]], dtype=complex))

    @property
    def X(self) -> HermitianOperator:
        return self.wfe.X

    @property
    def psi_A(self) -> StateVector:
        return StateVector.basis(2, 0)

    @property
    def psi_B(self) -> StateVector:
        return StateVector.basis(2, 1)

    @property
    def psi_0(self) -> StateVector:
        return StateVector(np.array([1, 1], dtype=complex) / np.sqrt(2))

    @property
    def psi_1(self) -> StateVector:
        return StateVector(np.array([1, -1], dtype=complex) / np.sqrt(2))

    @property
    def w(self) -> float:
        return self.wfe.w

    @property
    def n_dof(self) -> int:
        return self.wfe.n_dof

    def with_w(self, w: float) -> "EnantiomerModel":
        return build_enantiomer(self.E, self.delta, self.d, w, self.n_dof)


def build_enantiomer(E: float, delta: float, d: float, w: float = 0.0, N: int = 1) -> EnantiomerModel:
    if not delta > 0:
        raise ValidationError(f"delta must be > 0, got {delta!r}")
    if not d > 0:
        raise ValidationError(f"d must be > 0, got {d!r}")
    if not np.isfinite(E):
        raise ValidationError(f"E must be finite, got {E!r}")
    X = HermitianOperator.diagonal([d / 2, -d / 2])
    model = EnantiomerModel(E=float(E), delta=float(delta), d=float(d), wfe=WfeSpec(w, N, X))

    es = eigendecompose(model.H)
    scale = max(1.0, abs(E), delta)
    if not np.allclose(es.eigenvalues, [E - delta, E + delta], rtol=0, atol=1e-12 * scale):
        raise ContractViolation("enantiomer spectrum is not E -/+ delta")
    if abs(abs(es.eigenvectors[0].overlap(model.psi_0)) - 1) > 1e-10:
        raise ContractViolation("enantiomer ground state is not (A + B)/sqrt(2)")
    return model


@dataclass(frozen=True, eq=False)
class CurieWeissModel:
    """Permutation-symmetric sector of N spins, H = -(J/2N) M^2.

    Basis index k carries magnetization M = N - 2k. The WFE coordinate is M/N.
    """

    n_spins: int
    J: float
    wfe: WfeSpec

    @property
    def dim(self) -> int:
        return self.n_spins + 1

    @property
    def magnetization_values(self) -> np.ndarray:
        return self.n_spins - 2.0 * np.arange(self.dim)

    @property
    def M(self) -> HermitianOperator:
        return HermitianOperator.diagonal(self.magnetization_values)

    @property
    def H(self) -> HermitianOperator:
        m = self.magnetization_values
        return HermitianOperator.diagonal(-(self.J / (2 * self.n_spins)) * m**2)

    @property
    def m2(self) -> HermitianOperator:
        """(M/N)^2, the finite-size order parameter."""
        return HermitianOperator.diagonal((self.magnetization_values / self.n_spins) ** 2)

    @property
    def w(self) -> float:
        return self.wfe.w

    def with_w(self, w: float) -> "CurieWeissModel":
        return build_curie_weiss(self.n_spins, self.J, w)


def build_curie_weiss(N: int, J: float, w: float = 0.0) -> CurieWeissModel:
    if int(N) != N or N < 2:
        raise ValidationError(f"N must be an integer >= 2, got {N!r}")
    if not J > 0:
        raise ValidationError(f"J must be > 0, got {J!r}")
    N = int(N)
    X = HermitianOperator.diagonal((N - 2.0 * np.arange(N + 1)) / N)
    return CurieWeissModel(n_spins=N, J=float(J), wfe=WfeSpec(w, N, X))
