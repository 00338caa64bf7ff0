"""Dense complex linear algebra: states, Hermitian operators, eigensystems.

Everything here is small and dense. States and operators are frozen
dataclasses around numpy arrays; the arrays are marked read-only so the
objects can be shared between workers without copying.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ContractViolation

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
DEFAULT_DIM_CAP = 4096


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized complex amplitude vector psi = sum_n a_n |n>."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = _frozen(self.amplitudes)
        if a.ndim != 1 or a.size < 2:
            raise ContractViolation(f"state must be a vector of dim >= 2, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ContractViolation("state has non-finite amplitudes")
        norm2 = float(np.vdot(a, a).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ContractViolation(f"state not normalized: sum |a|^2 = {norm2!r}")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def normalized(cls, amplitudes) -> "StateVector":
        a = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(a)
        if norm == 0.0:
            raise ContractViolation("cannot normalize the zero vector")
        return cls(a / norm)

    @classmethod
    def basis(cls, dim: int, n: int) -> "StateVector":
        a = np.zeros(dim, dtype=complex)
        a[n] = 1.0
        return cls(a)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def with_phase(self, theta: float) -> "StateVector":
        return StateVector.normalized(np.exp(1j * theta) * self.amplitudes)

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    entries: np.ndarray

    def __post_init__(self):
        m = _frozen(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ContractViolation(f"operator must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ContractViolation("operator has non-finite entries")
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if np.abs(m - m.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
            raise ContractViolation("operator is not Hermitian")
        object.__setattr__(self, "entries", m)

    @classmethod
    def diagonal(cls, values) -> "HermitianOperator":
        return cls(np.diag(np.asarray(values, dtype=complex)))

    @classmethod
    def identity(cls, dim: int) -> "HermitianOperator":
        return cls(np.eye(dim, dtype=complex))

    @classmethod
    def projector(cls, phi: StateVector) -> "HermitianOperator":
        a = phi.amplitudes
        return cls(np.outer(a, a.conj()))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def __matmul__(self, other):
        if isinstance(other, HermitianOperator):
            return self.entries @ other.entries
        return self.entries @ np.asarray(other)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class EigenSystem:
    eigenvalues: np.ndarray
    eigenvectors: tuple

    @property
    def matrix(self) -> np.ndarray:
        """Eigenvectors as columns."""
        return np.column_stack([v.amplitudes for v in self.eigenvectors])

    def __len__(self):
        return len(self.eigenvalues)


def _as_state_array(psi) -> np.ndarray:
    if isinstance(psi, StateVector):
        return psi.amplitudes
    return np.asarray(psi, dtype=complex)


def expectation(O: HermitianOperator, psi) -> float:
    """<psi|O|psi> as a real number.

    The imaginary part of the quadratic form must vanish up to rounding; a
    larger residue means O or psi is malformed and raises.
    """
    a = _as_state_array(psi)
    if a.ndim != 1 or a.size != O.dim:
        raise ContractViolation(f"dimension mismatch: operator {O.dim}, state {a.shape}")
    value = complex(np.vdot(a, O.entries @ a))
    scale = max(1.0, float(np.abs(O.entries).max()))
    if abs(value.imag) > 1e-10 * scale:
        raise ContractViolation(f"quadratic form has imaginary residue {value.imag!r}")
    return value.real


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # first component of (near-)maximal magnitude made real-positive
    mags = np.abs(v)
    k = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
    return v * (np.conj(v[k]) / mags[k])


def _degenerate_clusters(values: np.ndarray, tol: float):
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > tol:
            yield start, i
            start = i


def eigendecompose(H: HermitianOperator, dim_cap: int = DEFAULT_DIM_CAP) -> EigenSystem:
    """Ascending eigenvalues and deterministically phased eigenvectors of H.

    Each eigenvector is rotated so its largest-magnitude component is real and
    positive. Inside a degenerate cluster the vectors are ordered
    lexicographically by (real, imag) components.
    """
    if H.dim > dim_cap:
        raise CapacityError(f"dimension {H.dim} exceeds cap {dim_cap}")
    values, vectors = np.linalg.eigh(H.entries)
    vectors = np.column_stack([_fix_phase(vectors[:, n]) for n in range(H.dim)])

    scale = max(1.0, float(np.abs(values).max()))
    for lo, hi in _degenerate_clusters(values, 1e-10 * scale):
        if hi - lo > 1:
            block = vectors[:, lo:hi]
            keys = [tuple(np.round(np.concatenate([c.real, c.imag]), 12)) for c in block.T]
            order = sorted(range(hi - lo), key=lambda j: keys[j])
            vectors[:, lo:hi] = block[:, order]

    residual = np.linalg.norm(H.entries @ vectors - vectors * values, axis=0)
    if residual.max() > 1e-10 * scale:
        raise ContractViolation(f"eigen residual {residual.max():.3g} above tolerance")
    states = tuple(StateVector.normalized(vectors[:, n]) for n in range(H.dim))
    return EigenSystem(eigenvalues=np.array(values, dtype=float), eigenvectors=states)


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> HermitianOperator:
    """GUE-like random Hermitian matrix, handy for tests and scripts."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return HermitianOperator(scale * (a + a.conj().T) / 2)


def sigma_x() -> HermitianOperator:
    return HermitianOperator(np.array([[0, 1], [1, 0]], dtype=complex))


def sigma_z() -> HermitianOperator:
    return HermitianOperator(np.array([[1, 0], [0, -1]], dtype=complex))
