import numpy as np
import pytest
from hypothesis import given, strategies as st

from ensemble_boundary.errors import CapacityError, ContractViolation
from ensemble_boundary.hilbert import (
    HermitianOperator,
    StateVector,
    eigendecompose,
    expectation,
    random_hermitian,
    sigma_x,
    sigma_z,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=2, max_value=12)


def random_state(dim, rng):
    return StateVector.normalized(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


class TestStateVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(ContractViolation):
            StateVector(np.array([1.0, 1.0]))

    def test_rejects_dim_one(self):
        with pytest.raises(ContractViolation):
            StateVector(np.array([1.0]))

    @given(seeds, dims)
    def test_normalized_constructor(self, seed, dim):
        psi = random_state(dim, np.random.default_rng(seed))
        assert abs(np.sum(np.abs(psi.amplitudes) ** 2) - 1) < 1e-12
        assert psi.dim == dim

    def test_immutable(self):
        psi = StateVector.basis(3, 1)
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 1.0


class TestHermitianOperator:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ContractViolation):
            HermitianOperator(np.array([[0, 1], [0, 0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ContractViolation):
            HermitianOperator(np.zeros((2, 3)))


class TestExpectation:
    @pytest.mark.parametrize("dim", [2, 3, 7])
    def test_identity_gives_one(self, dim, rng):
        assert expectation(HermitianOperator.identity(dim), random_state(dim, rng)) == pytest.approx(1.0, abs=1e-14)

    def test_sigma_z_on_balanced_state(self):
        psi = StateVector(np.array([1, 1]) / np.sqrt(2))
        assert expectation(sigma_z(), psi) == pytest.approx(0.0, abs=1e-15)

    def test_sigma_x_on_balanced_state(self):
        # <psi|sigma_x|psi> = 2 Re(a* b) = 2 * 1/2
        psi = StateVector(np.array([1, 1]) / np.sqrt(2))
        assert expectation(sigma_x(), psi) == pytest.approx(1.0, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            expectation(sigma_x(), StateVector.basis(3, 0))

    @given(seeds, dims, st.floats(0, 2 * np.pi))
    def test_global_phase_invariance(self, seed, dim, theta):
        rng = np.random.default_rng(seed)
        O, psi = random_hermitian(dim, rng), random_state(dim, rng)
        assert expectation(O, psi.with_phase(theta)) == pytest.approx(expectation(O, psi), abs=1e-12)


class TestEigendecompose:
    def test_diagonal(self):
        es = eigendecompose(HermitianOperator.diagonal([3, 1]))
        np.testing.assert_allclose(es.eigenvalues, [1, 3])

    def test_two_level_tunnelling_pair(self):
        es = eigendecompose(HermitianOperator(np.array([[0, -1], [-1, 0]])))
        np.testing.assert_allclose(es.eigenvalues, [-1, 1], atol=1e-14)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(es.eigenvectors[0].amplitudes, [s, s], atol=1e-14)
        # largest component made real-positive; first index wins the tie
        np.testing.assert_allclose(es.eigenvectors[1].amplitudes, [s, -s], atol=1e-14)

    def test_reconstruction_8x8(self, rng):
        H = random_hermitian(8, rng)
        es = eigendecompose(H)
        V = es.matrix
        rebuilt = V @ np.diag(es.eigenvalues) @ V.conj().T
        assert np.linalg.norm(rebuilt - H.entries) < 1e-10

    @given(seeds, dims)
    def test_eigen_invariants(self, seed, dim):
        H = random_hermitian(dim, np.random.default_rng(seed))
        es = eigendecompose(H)
        assert np.all(np.diff(es.eigenvalues) >= 0)
        V = es.matrix
        assert np.abs(V.conj().T @ V - np.eye(dim)).max() < 1e-10
        for lam, v in zip(es.eigenvalues, es.eigenvectors):
            assert np.linalg.norm(H.entries @ v.amplitudes - lam * v.amplitudes) < 1e-10
            assert expectation(H, v) == pytest.approx(lam, abs=1e-10)

    @given(seeds, dims)
    def test_trace_identity(self, seed, dim):
        rng = np.random.default_rng(seed)
        es = eigendecompose(random_hermitian(dim, rng))
        O = random_hermitian(dim, rng)
        assert sum(expectation(O, v) for v in es.eigenvectors) == pytest.approx(O.trace(), abs=1e-9)

    def test_phase_convention(self, rng):
        for v in eigendecompose(random_hermitian(6, rng)).eigenvectors:
            k = np.argmax(np.abs(v.amplitudes))
            assert abs(v.amplitudes[k].imag) < 1e-12 and v.amplitudes[k].real > 0

    def test_degenerate_ordering_is_deterministic(self):
        H = HermitianOperator.diagonal([0, 0, 1])
        first = eigendecompose(H)
        second = eigendecompose(HermitianOperator(H.entries.copy()))
        for a, b in zip(first.eigenvectors, second.eigenvectors):
            np.testing.assert_array_equal(a.amplitudes, b.amplitudes)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            eigendecompose(HermitianOperator.identity(5), dim_cap=4)
