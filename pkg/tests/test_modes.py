import math

import numpy as np
import pytest

from ionchain.constants import CODATA2018
from ionchain.equilibrium import TrapChainConfig, solve_equilibrium
from ionchain.modes import (JacobiConvergenceError, ModeSpectrum,
                            build_coupling_matrix, coupling_constants,
                            diagonalize, jacobi_eigh, mode_frequencies,
                            mode_spectrum, rms_displacement)

ATOMIC_MASS_KG = 1.66053906660e-27
CA40_MASS_KG = 39.9625908 * ATOMIC_MASS_KG


def characteristic_polynomial_eigenvalues(matrix):
    """Independent eigenvalue oracle: Faddeev-LeVerrier coefficients of the
    characteristic polynomial, then polynomial root finding."""
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    coeffs = [1.0]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-(a @ m).trace() / k)
    roots = np.roots(coeffs)
    assert np.max(np.abs(roots.imag)) < 1e-10
    return np.sort(roots.real)


class TestCouplingMatrix:
    def test_single_ion(self):
        assert build_coupling_matrix([0.0]).tolist() == [[1.0]]

    def test_two_ions_exact(self):
        # the pair sits at +-(1/2)^(2/3), so the cube of the gap is exactly 2
        a = build_coupling_matrix(solve_equilibrium(2))
        assert np.max(np.abs(a - [[2.0, -1.0], [-1.0, 2.0]])) < 1e-13

    def test_three_ions_hand_substitution(self):
        # gap cubed is 5/4: diagonal 1 + 2(4/5 + 1/10), off-diagonals
        # -8/5 (adjacent) and -1/5 (outer pair)
        a = build_coupling_matrix(solve_equilibrium(3))
        expected = np.array([[2.8, -1.6, -0.2],
                             [-1.6, 4.2, -1.6],
                             [-0.2, -1.6, 2.8]])
        assert np.max(np.abs(a - expected)) < 1e-13

    @pytest.mark.parametrize("n", [2, 5, 12])
    def test_symmetry_exact_and_signs(self, n):
        a = build_coupling_matrix(solve_equilibrium(n))
        assert np.array_equal(a, a.T)
        assert np.all(np.diag(a) >= 1.0)
        off = a[~np.eye(n, dtype=bool)]
        assert np.all(off < 0.0)

    def test_duplicate_positions_rejected(self):
        with pytest.raises(ValueError):
            build_coupling_matrix([0.0, 0.0, 1.0])


class TestJacobiEigensolver:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            jacobi_eigh(np.ones((2, 3)))

    def test_sweep_cap_error(self):
        a = build_coupling_matrix(solve_equilibrium(6))
        with pytest.raises(JacobiConvergenceError):
            jacobi_eigh(a, sweep_cap=0)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_against_characteristic_polynomial(self, n):
        a = build_coupling_matrix(solve_equilibrium(n))
        eigvals, _ = jacobi_eigh(a)
        oracle = characteristic_polynomial_eigenvalues(a)
        assert np.max(np.abs(eigvals - oracle)) < 1e-10

    @pytest.mark.parametrize("n", [2, 6, 13, 20])
    def test_reconstruction(self, n):
        a = build_coupling_matrix(solve_equilibrium(n))
        eigvals, vecs = jacobi_eigh(a)
        rebuilt = vecs.T @ np.diag(eigvals) @ vecs
        assert np.max(np.abs(a - rebuilt)) <= 1e-11


class TestModeSpectrum:
    def test_two_ions_analytic(self):
        s = mode_spectrum(solve_equilibrium(2))
        assert np.max(np.abs(s.eigenvalues - [1.0, 3.0])) < 1e-12
        r = 1.0 / math.sqrt(2.0)
        assert np.max(np.abs(s.vectors[0] - [r, r])) < 1e-12
        assert np.max(np.abs(s.vectors[1] - [-r, r])) < 1e-12

    def test_three_ions_analytic(self):
        s = mode_spectrum(solve_equilibrium(3))
        assert abs(s.eigenvalues[2] - 29.0 / 5.0) < 1e-10
        expected = np.array([1.0, -2.0, 1.0]) / math.sqrt(6.0)
        assert np.max(np.abs(s.vectors[2] - expected)) < 1e-10

    def test_single_ion(self):
        s = mode_spectrum([0.0])
        assert s.eigenvalues.tolist() == [1.0]
        assert s.vectors.tolist() == [[1.0]]
        assert s.couplings.tolist() == [[1.0]]

    @pytest.mark.parametrize("n", range(2, 21))
    def test_structure_invariants(self, n):
        u = solve_equilibrium(n)
        s = mode_spectrum(u)
        assert abs(s.eigenvalues[0] - 1.0) <= 1e-10
        assert abs(s.eigenvalues[1] - 3.0) <= 1e-10
        assert np.all(s.eigenvalues > 0.0)
        assert np.all(np.diff(s.eigenvalues) > 1e-8)  # no near degeneracies
        gram = s.vectors @ s.vectors.T
        assert np.max(np.abs(gram - np.eye(n))) <= 1e-12
        assert np.max(np.abs(s.vectors[1:].sum(axis=1))) <= 1e-10
        # in-phase mode is uniform, stretch mode follows the positions
        assert np.max(np.abs(s.vectors[0] - 1.0 / math.sqrt(n))) <= 1e-10
        stretch = u / np.linalg.norm(u)
        assert np.max(np.abs(s.vectors[1] - stretch)) <= 1e-10

    def test_sign_convention_last_component_positive(self):
        for n in (2, 5, 10):
            s = mode_spectrum(solve_equilibrium(n))
            for row in s.vectors:
                significant = row[np.abs(row) > 1e-12]
                assert significant[-1] > 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            ModeSpectrum(np.array([1.0, 0.5]), np.eye(2))  # not ascending
        with pytest.raises(ValueError):
            ModeSpectrum(np.array([-1.0, 2.0]), np.eye(2))  # not positive
        with pytest.raises(ValueError):
            ModeSpectrum(np.array([1.0]), np.eye(2))  # shape mismatch

    def test_degeneracy_flagged_not_reordered(self):
        with pytest.warns(UserWarning, match="near-degenerate"):
            s = diagonalize(np.eye(3))
        assert s.eigenvalues.tolist() == [1.0, 1.0, 1.0]

    def test_chain_spectra_do_not_warn(self, recwarn):
        mode_spectrum(solve_equilibrium(12))
        assert not [w for w in recwarn if "near-degenerate" in str(w.message)]

    def test_accessors_one_based(self):
        s = mode_spectrum(solve_equilibrium(3))
        assert s.eigenvalue(1) == s.eigenvalues[0]
        assert s.coupling(1, 2) == s.couplings[0, 1]
        with pytest.raises(ValueError):
            s.eigenvalue(0)
        with pytest.raises(ValueError):
            s.coupling(1, 4)


class TestCouplingConstants:
    @pytest.mark.parametrize("n", [1, 2, 3, 7, 15])
    def test_in_phase_row_is_unity(self, n):
        s = mode_spectrum(solve_equilibrium(n))
        assert np.max(np.abs(s.couplings[0] - 1.0)) < 1e-9

    def test_two_ion_stretch_values(self):
        s = mode_spectrum(solve_equilibrium(2))
        expected = 3.0 ** (-0.25)
        assert s.couplings[1, 0] == pytest.approx(-expected, rel=1e-12)
        assert s.couplings[1, 1] == pytest.approx(expected, rel=1e-12)

    def test_three_ion_stretch_proportional_to_positions(self):
        u = solve_equilibrium(3)
        s = mode_spectrum(u)
        expected = math.sqrt(3.0) / 3.0**0.25 * u / np.linalg.norm(u)
        assert np.max(np.abs(s.couplings[1] - expected)) < 1e-12

    def test_definition(self):
        s = mode_spectrum(solve_equilibrium(5))
        direct = coupling_constants(s.vectors, s.eigenvalues)
        rebuilt = math.sqrt(5) * s.vectors / s.eigenvalues[:, None] ** 0.25
        assert np.array_equal(direct, rebuilt)


class TestModeFrequencies:
    def test_two_ion_ladder(self):
        freqs = mode_frequencies(np.array([1.0, 3.0]), 1.0)
        assert freqs[0] == 1.0
        assert freqs[1] == pytest.approx(math.sqrt(3.0), rel=1e-15)

    def test_rejects_nonpositive_frequency(self):
        with pytest.raises(ValueError):
            mode_frequencies(np.array([1.0]), 0.0)

    def test_ten_ion_ladder_follows_eigenvalues(self):
        nu = 2 * math.pi * 500e3
        s = mode_spectrum(solve_equilibrium(10))
        freqs = s.frequencies(nu)
        assert np.allclose(freqs, np.sqrt(s.eigenvalues) * nu, rtol=1e-15)
        assert freqs[0] == pytest.approx(nu, rel=1e-15)
        assert freqs[1] == pytest.approx(math.sqrt(3) * nu, rel=1e-15)


class TestRmsDisplacement:
    nu = 2 * math.pi * 500e3

    def test_single_ion_ground_state(self):
        s = mode_spectrum([0.0])
        width = rms_displacement(s, CA40_MASS_KG, self.nu)
        expected = math.sqrt(CODATA2018.reduced_planck
                             / (2 * CA40_MASS_KG * self.nu))
        assert width[0] == pytest.approx(expected, rel=1e-12)

    def test_two_ion_ground_state(self):
        s = mode_spectrum(solve_equilibrium(2))
        width = rms_displacement(s, CA40_MASS_KG, self.nu)
        expected = math.sqrt(CODATA2018.reduced_planck
                             / (4 * CA40_MASS_KG * self.nu)
                             * (1.0 + 1.0 / math.sqrt(3.0)))
        assert width[0] == pytest.approx(expected, rel=1e-12)
        assert width[1] == pytest.approx(expected, rel=1e-12)

    def test_one_phonon_triples_mode_weight(self):
        s = mode_spectrum(solve_equilibrium(2))
        hot = rms_displacement(s, CA40_MASS_KG, self.nu, occupations=[1, 0])
        k = CODATA2018.reduced_planck / (2 * CA40_MASS_KG * self.nu * 2)
        expected = np.sqrt(k * (3.0 * s.couplings[0]**2 + s.couplings[1]**2))
        assert np.allclose(hot, expected, rtol=1e-13)

    def test_validation(self):
        s = mode_spectrum(solve_equilibrium(2))
        with pytest.raises(ValueError):
            rms_displacement(s, CA40_MASS_KG, self.nu, occupations=[1])
        with pytest.raises(ValueError):
            rms_displacement(s, CA40_MASS_KG, self.nu, occupations=[-1, 0])
        with pytest.raises(ValueError):
            rms_displacement(s, -1.0, self.nu)
