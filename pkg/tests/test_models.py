import numpy as np
import pytest
from hypothesis import given, strategies as st

from ensemble_boundary.errors import ContractViolation, ValidationError
from ensemble_boundary.hilbert import HermitianOperator, StateVector, eigendecompose, expectation, random_hermitian
from ensemble_boundary.models import (
    WfeSpec,
    build_curie_weiss,
    build_enantiomer,
    total_energy,
    total_energy_gradient,
    wfe_energy,
)

seeds = st.integers(0, 2**32 - 1)


def random_state(dim, rng):
    return StateVector.normalized(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


class TestWfe:
    def test_zero_on_com_eigenstate(self):
        m = build_enantiomer(0, 1, 1, w=0.7, N=5)
        assert wfe_energy(m.wfe, m.psi_A) == 0.0

    def test_symmetric_superposition(self):
        w, N, d = 0.3, 7, 2.5
        m = build_enantiomer(0, 1, d, w, N)
        assert wfe_energy(m.wfe, m.psi_0) == pytest.approx(w * N**2 * d**2 / 4, rel=1e-14)

    def test_two_point_variance(self):
        # p(1 - p) d^2 with p = 0.8
        m = build_enantiomer(0, 1, 1, w=1, N=1)
        psi = StateVector(np.array([np.sqrt(0.8), np.sqrt(0.2)]))
        assert wfe_energy(m.wfe, psi) == pytest.approx(0.16, abs=1e-14)

    def test_dimension_mismatch(self):
        m = build_enantiomer(0, 1, 1, 1, 1)
        with pytest.raises(ContractViolation):
            wfe_energy(m.wfe, StateVector.basis(3, 0))

    @given(seeds, st.integers(2, 9), st.floats(0, 5))
    def test_nonnegative_and_zero_only_on_eigenvectors(self, seed, dim, w):
        rng = np.random.default_rng(seed)
        spec = WfeSpec(w, 3, random_hermitian(dim, rng))
        assert wfe_energy(spec, random_state(dim, rng)) >= 0
        for v in eigendecompose(spec.X).eigenvectors:
            assert abs(wfe_energy(spec, v)) < 1e-10 * max(1.0, spec.prefactor)

    def test_validation(self):
        X = HermitianOperator.diagonal([1, -1])
        with pytest.raises(ValidationError):
            WfeSpec(-0.1, 1, X)
        with pytest.raises(ValidationError):
            WfeSpec(0.1, 0, X)


class TestEnantiomer:
    @pytest.mark.parametrize("E, delta, expected", [(0, 1, [-1, 1]), (5, 2, [3, 7])])
    def test_spectrum(self, E, delta, expected):
        m = build_enantiomer(E, delta, 1, 0, 1)
        np.testing.assert_allclose(eigendecompose(m.H).eigenvalues, expected, atol=1e-14)

    @given(st.floats(-10, 10), st.floats(0.01, 10), st.floats(0.01, 10))
    def test_energy_ordering(self, E, delta, d):
        m = build_enantiomer(E, delta, d)
        e_A, e_B, e_0 = (expectation(m.H, s) for s in (m.psi_A, m.psi_B, m.psi_0))
        assert e_A == pytest.approx(e_B, abs=1e-12)
        assert e_A - e_0 == pytest.approx(delta, abs=1e-12 * max(1, abs(E)))
        assert e_0 == pytest.approx(E - delta, abs=1e-12 * max(1, abs(E)))

    def test_basis_change(self):
        m = build_enantiomer(0, 1, 1)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(m.psi_A.amplitudes, s * (m.psi_0.amplitudes + m.psi_1.amplitudes), atol=1e-15)
        np.testing.assert_allclose(m.psi_B.amplitudes, s * (m.psi_0.amplitudes - m.psi_1.amplitudes), atol=1e-15)

    def test_total_energy_examples(self):
        E, delta, d, w, N = 0.4, 1.3, 2.0, 0.05, 4
        m = build_enantiomer(E, delta, d, w, N)
        assert total_energy(m, m.psi_A) == pytest.approx(E, abs=1e-15)
        assert total_energy(m, m.psi_0) == pytest.approx(E - delta + w * N**2 * d**2 / 4, abs=1e-14)

    def test_w_zero_reduces_to_expectation(self, rng):
        m = build_enantiomer(0.2, 0.9, 1.5, 0.0, 3)
        psi = random_state(2, rng)
        assert total_energy(m, psi) == expectation(m.H, psi)

    @pytest.mark.parametrize("kwargs", [dict(delta=0), dict(delta=-1), dict(d=0), dict(w=-1), dict(N=0)])
    def test_validation(self, kwargs):
        args = dict(E=0, delta=1, d=1, w=0, N=1) | kwargs
        with pytest.raises(ValidationError):
            build_enantiomer(**args)


class TestCurieWeiss:
    def test_n2_hamiltonian(self):
        m = build_curie_weiss(2, 1.0)
        np.testing.assert_allclose(np.diag(m.H.entries).real, [-1, 0, -1])
        np.testing.assert_allclose(m.magnetization_values, [2, 0, -2])

    @pytest.mark.parametrize("N", [2, 3, 8, 13])
    def test_magnetization_spectrum(self, N):
        m = build_curie_weiss(N, 0.7)
        assert m.dim == N + 1
        assert m.M.trace() == 0
        np.testing.assert_array_equal(np.sort(m.magnetization_values), np.arange(-N, N + 1, 2))
        assert np.allclose(m.H.entries @ m.M.entries, m.M.entries @ m.H.entries)

    def test_n3_spectrum(self):
        np.testing.assert_array_equal(build_curie_weiss(3, 1).magnetization_values, [3, 1, -1, -3])

    @pytest.mark.parametrize("N, J, w", [(1, 1, 0), (4, 0, 0), (4, 1, -1)])
    def test_validation(self, N, J, w):
        with pytest.raises(ValidationError):
            build_curie_weiss(N, J, w)


def _normalized_energy(model, coords, dim):
    psi = coords[:dim] + 1j * coords[dim:]
    return total_energy(model, psi / np.linalg.norm(psi))


@given(seeds, st.sampled_from([2, 5, 13]), st.floats(0, 3))
def test_gradient_matches_finite_differences(seed, dim, w):
    rng = np.random.default_rng(seed)

    class Model:
        H = random_hermitian(dim, rng)
        wfe = WfeSpec(w, 2, random_hermitian(dim, rng))

    psi = random_state(dim, rng).amplitudes
    g = total_energy_gradient(Model, psi)
    g_tan = g - np.vdot(psi, g).real * psi
    x0, h = np.concatenate([psi.real, psi.imag]), 1e-6
    fd = np.empty(2 * dim)
    for k in range(2 * dim):
        step = np.zeros(2 * dim)
        step[k] = h
        fd[k] = (_normalized_energy(Model, x0 + step, dim) - _normalized_energy(Model, x0 - step, dim)) / (2 * h)
    analytic = np.concatenate([g_tan.real, g_tan.imag])
    assert np.linalg.norm(fd - analytic) <= 1e-6 * max(np.linalg.norm(analytic), 1e-3)


@given(seeds, st.floats(0, 2 * np.pi))
def test_total_energy_phase_invariant(seed, theta):
    rng = np.random.default_rng(seed)
    m = build_curie_weiss(6, 1.0, 0.2)
    psi = random_state(7, rng)
    assert total_energy(m, psi.with_phase(theta)) == pytest.approx(total_energy(m, psi), abs=1e-10)
