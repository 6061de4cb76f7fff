import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ionchain.constants import CODATA2018
from ionchain.equilibrium import (ChainEquilibrium, EquilibriumConvergenceError,
                                  TrapChainConfig, chain_equilibrium,
                                  fit_min_spacing_law, force_balance_residual,
                                  initial_guess, length_scale,
                                  min_spacing_meters, minimum_spacing,
                                  solve_equilibrium)

ATOMIC_MASS_KG = 1.66053906660e-27
CA40_MASS_KG = 39.9625908 * ATOMIC_MASS_KG

# closed forms for the two analytically solvable chains
U2 = (0.5) ** (2.0 / 3.0)
U3 = (1.25) ** (1.0 / 3.0)


def ca_config(n_ions=1, freq=2 * math.pi * 500e3):
    return TrapChainConfig(ion_count=n_ions, trap_angular_freq=freq,
                           ion_mass=CA40_MASS_KG, ionization_degree=1)


class TestLengthScale:
    def test_perfect_cube(self):
        # engineer nu so that the cubed scale is exactly 8 m^3
        k = CODATA2018
        mass = 1e-25
        freq = math.sqrt(k.electron_charge**2
                         / (4.0 * math.pi * k.vacuum_permittivity * mass * 8.0))
        cfg = TrapChainConfig(1, freq, mass, 1)
        assert length_scale(cfg) == pytest.approx(2.0, abs=1e-14)

    def test_frequency_scaling(self):
        cfg1 = ca_config(freq=2 * math.pi * 500e3)
        cfg2 = ca_config(freq=2 * math.pi * 1000e3)
        ratio = length_scale(cfg2) / length_scale(cfg1)
        assert ratio == pytest.approx(2.0 ** (-2.0 / 3.0), rel=1e-14)

    def test_calcium_value(self):
        # frozen from an independent hand evaluation of the formula
        assert length_scale(ca_config()) == pytest.approx(
            7.062415070413608e-06, rel=1e-12)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrapChainConfig(0, 1.0, 1.0, 1)
        with pytest.raises(ValueError):
            TrapChainConfig(2, -1.0, 1.0, 1)
        with pytest.raises(ValueError):
            TrapChainConfig(2, 1.0, 0.0, 1)
        with pytest.raises(ValueError):
            TrapChainConfig(2, 1.0, 1.0, 0)


class TestSolveEquilibrium:
    def test_single_ion_at_center(self):
        assert solve_equilibrium(1).tolist() == [0.0]

    def test_two_ions_closed_form(self):
        u = solve_equilibrium(2)
        assert abs(u[0] + U2) < 1e-12
        assert abs(u[1] - U2) < 1e-12

    def test_three_ions_closed_form(self):
        u = solve_equilibrium(3)
        assert abs(u[0] + U3) < 1e-12
        assert abs(u[1]) < 1e-12
        assert abs(u[2] - U3) < 1e-12

    @pytest.mark.parametrize("n", range(1, 31))
    def test_residual_and_antisymmetry(self, n):
        u = solve_equilibrium(n)
        assert np.max(np.abs(force_balance_residual(u))) <= 1e-12
        assert np.max(np.abs(u + u[::-1])) <= 1e-12
        assert np.all(np.diff(u) > 0.0)

    @pytest.mark.parametrize("n", [2, 3, 5, 9, 16, 25, 30])
    def test_seed_independence(self, n):
        u_default = solve_equilibrium(n)
        u_perturbed = solve_equilibrium(n, start=initial_guess(n, perturbed=True))
        assert np.max(np.abs(u_default - u_perturbed)) <= 1e-10

    @pytest.mark.parametrize("n", [3, 6, 11, 20])
    def test_gap_sequence_unimodal_with_center_minimum(self, n):
        gaps = np.diff(solve_equilibrium(n))
        i = int(np.argmin(gaps))
        # gaps shrink toward the chain center and grow back out
        assert np.all(np.diff(gaps[:i + 1]) <= 1e-12)
        assert np.all(np.diff(gaps[i:]) >= -1e-12)
        assert i == (len(gaps) - 1) // 2

    def test_min_gap_monotone_in_chain_size(self):
        values = [minimum_spacing(solve_equilibrium(n)).value
                  for n in range(2, 31)]
        assert np.all(np.diff(values) < 0.0)

    def test_convergence_error_carries_residual(self):
        with pytest.raises(EquilibriumConvergenceError) as err:
            solve_equilibrium(10, iteration_cap=1)
        assert err.value.residual_norm > 0.0
        assert err.value.iterations >= 1

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            solve_equilibrium(0)
        with pytest.raises(ValueError):
            solve_equilibrium(3, tolerance=0.0)
        with pytest.raises(ValueError):
            solve_equilibrium(3, start=np.array([1.0, 0.5, 2.0]))


def _descend_once(u, i):
    """Exact 1-d minimization of the chain potential along coordinate i.

    The slot potential x^2/2 + sum 1/|x - u_j| is strictly convex between
    the neighboring ions, so safeguarded Newton on its derivative finds
    the exact coordinate minimum.
    """
    others = np.delete(u, i)
    x = u[i]
    below = others[others < x]
    above = others[others > x]
    lo = below.max() if below.size else -np.inf
    hi = above.min() if above.size else np.inf
    for _ in range(200):
        d = x - others
        gradient = x - np.sum(np.sign(d) / d**2)
        curvature = 1.0 + np.sum(2.0 / np.abs(d) ** 3)
        x_new = x - gradient / curvature
        if not lo < x_new < hi:
            edge = lo if gradient > 0 else hi
            x_new = 0.5 * (x + edge) if np.isfinite(edge) else x - np.sign(gradient) * 0.1
        if abs(x_new - x) < 1e-16 * (1.0 + abs(x)):
            return x_new
        x = x_new
    return x


def minimize_potential_by_coordinate_descent(start, sweeps=4000, tol=1e-14):
    """Independent equilibrium oracle: cyclic coordinate descent on the
    dimensionless chain potential itself (no force-balance residual)."""
    u = np.array(start, dtype=float)
    for _ in range(sweeps):
        biggest = 0.0
        for i in range(len(u)):
            x_new = _descend_once(u, i)
            biggest = max(biggest, abs(x_new - u[i]))
            u[i] = x_new
        if biggest < tol:
            break
    return np.sort(u)


class TestPotentialMinimizationOracle:
    # frozen output of the coordinate-descent oracle for five ions
    U5_ORACLE = np.array([-1.7429032118739, -0.82210075656808, 0.0,
                          0.82210075656808, 1.7429032118739])

    def test_five_ions_match_oracle(self):
        u = solve_equilibrium(5)
        assert np.max(np.abs(u - self.U5_ORACLE)) < 1e-10
        rng = np.random.default_rng(12345)
        for _ in range(2):
            start = (rng.permutation(np.linspace(-2.0, 2.0, 5))
                     + rng.uniform(-0.2, 0.2, 5))
            oracle = minimize_potential_by_coordinate_descent(start)
            assert np.max(np.abs(u - oracle)) < 1e-10


class TestMinimumSpacing:
    def test_two_ions(self):
        ms = minimum_spacing(solve_equilibrium(2))
        assert ms.value == pytest.approx(2 * U2, abs=1e-12)
        assert ms.pair_index == 1

    def test_three_ions(self):
        ms = minimum_spacing(solve_equilibrium(3))
        assert ms.value == pytest.approx(U3, abs=1e-12)

    def test_ten_ions_frozen(self):
        ms = minimum_spacing(solve_equilibrium(10))
        assert ms.value == pytest.approx(0.5642073114283389, rel=1e-12)
        assert ms.pair_index == 5  # central pair

    def test_needs_two_ions(self):
        with pytest.raises(ValueError):
            minimum_spacing(np.array([0.0]))

    def test_needs_sorted(self):
        with pytest.raises(ValueError):
            minimum_spacing(np.array([1.0, 0.0]))


class TestSpacingFit:
    def test_default_range_frozen_regression(self):
        fit = fit_min_spacing_law(2, 10)
        assert fit.prefactor == pytest.approx(1.8363166325719296, rel=1e-9)
        assert fit.exponent == pytest.approx(0.5077438022067698, rel=1e-9)

    def test_extended_range_recorded(self):
        fit = fit_min_spacing_law(2, 20)
        assert fit.prefactor == pytest.approx(1.892576834486469, rel=1e-9)
        assert fit.exponent == pytest.approx(0.52797838839413, rel=1e-9)

    def test_wide_range_reproduces_quoted_constants(self):
        # the quotable power-law constants come from a wide fit range;
        # five to thirty ions lands on them within two percent
        fit = fit_min_spacing_law(5, 30, tolerance=1e-12)
        assert fit.prefactor == pytest.approx(2.018, rel=0.02)
        assert fit.exponent == pytest.approx(0.559, rel=0.02)

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            fit_min_spacing_law(2, 3)
        with pytest.raises(ValueError):
            fit_min_spacing_law(1, 10)

    @given(prefactor=st.floats(0.5, 5.0), exponent=st.floats(0.1, 1.0))
    @settings(max_examples=25, deadline=None)
    def test_fit_recovers_synthetic_power_law(self, prefactor, exponent):
        sizes = np.arange(2, 11)
        values = prefactor / sizes**exponent
        slope, intercept = np.polyfit(np.log(sizes), np.log(values), 1)
        assert math.exp(intercept) == pytest.approx(prefactor, abs=1e-12)
        assert -slope == pytest.approx(exponent, abs=1e-12)


class TestPhysicalSpacing:
    def test_unit_length_scale(self):
        # engineer a config whose length scale is exactly 1 m
        k = CODATA2018
        mass = 1e-25
        freq = math.sqrt(k.electron_charge**2
                         / (4.0 * math.pi * k.vacuum_permittivity * mass))
        cfg = TrapChainConfig(2, freq, mass, 1)
        assert length_scale(cfg) == pytest.approx(1.0, abs=1e-13)
        assert min_spacing_meters(cfg) == pytest.approx(2 * U2, rel=1e-12)

    def test_consistency_with_dimensionless_gap(self):
        cfg = ca_config(n_ions=7)
        ratio = min_spacing_meters(cfg) / length_scale(cfg)
        assert ratio == pytest.approx(
            minimum_spacing(solve_equilibrium(7)).value, rel=1e-13)

    def test_calcium_ten_ion_value(self):
        cfg = ca_config(n_ions=10)
        assert min_spacing_meters(cfg) == pytest.approx(
            3.984666219069045e-06, rel=1e-11)

    def test_single_ion_rejected(self):
        with pytest.raises(ValueError):
            min_spacing_meters(ca_config(n_ions=1))


class TestChainEquilibrium:
    def test_positions_in_meters(self):
        eq = chain_equilibrium(ca_config(n_ions=3))
        assert eq.n_ions == 3
        assert np.allclose(eq.positions_meters,
                           eq.positions * eq.length_scale, rtol=0, atol=0)

    def test_validation(self):
        with pytest.raises(ValueError):
            ChainEquilibrium(1.0, np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            ChainEquilibrium(-1.0, np.array([0.0, 1.0]))
