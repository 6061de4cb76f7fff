"""Equilibrium structure of a linear chain of trapped ions.

N ions in a harmonic axial well repel each other through the Coulomb
force.  In units of the natural length scale the equilibrium positions
satisfy N coupled force-balance equations

    u_m - sum_{n<m} 1/(u_m - u_n)^2 + sum_{n>m} 1/(u_m - u_n)^2 = 0

solved here by a damped Newton iteration whose Jacobian is the mode
coupling matrix (see :mod:`ionchain.modes`).
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constants import CODATA2018, PhysicalConstants
from .modes import build_coupling_matrix

DEFAULT_TOLERANCE = 1e-13
NEWTON_ITERATION_CAP = 200

# Empirical scaling of the central gap with ion number, u_min ~ C/N^p.
# Used only to seed the solver and as the reference for the fit test.
MIN_SPACING_PREFACTOR = 2.018
MIN_SPACING_EXPONENT = 0.559


class EquilibriumConvergenceError(RuntimeError):
    """Newton iteration failed; carries the last residual norm reached."""

    def __init__(self, iterations: int, residual_norm: float):
        self.iterations = iterations
        self.residual_norm = residual_norm
        super().__init__(
            f"no convergence after {iterations} iterations, "
            f"residual inf-norm {residual_norm:.3e}"
        )


@dataclass(frozen=True)
class TrapChainConfig:
    """Physical definition of the ion chain problem.

    ``trap_angular_freq`` is the axial confinement angular frequency in
    rad/s (note: angular, not cyclic), ``ion_mass`` in kg.
    """

    ion_count: int
    trap_angular_freq: float
    ion_mass: float
    ionization_degree: int = 1
    constants: PhysicalConstants = CODATA2018

    def __post_init__(self):
        if not (isinstance(self.ion_count, int) and self.ion_count >= 1):
            raise ValueError("ion_count must be an integer >= 1")
        if not self.trap_angular_freq > 0.0:
            raise ValueError("trap_angular_freq must be positive")
        if not self.ion_mass > 0.0:
            raise ValueError("ion_mass must be positive")
        if not (isinstance(self.ionization_degree, int)
                and self.ionization_degree >= 1):
            raise ValueError("ionization_degree must be an integer >= 1")


def length_scale(cfg: TrapChainConfig) -> float:
    """Natural length unit of the chain, in meters.

    Cube root of Z^2 e^2 / (4 pi eps0 M nu^2); dimensionless positions
    are multiplied by this to get meters.
    """
    k = cfg.constants
    cubed = ((cfg.ionization_degree * k.electron_charge) ** 2
             / (4.0 * np.pi * k.vacuum_permittivity
                * cfg.ion_mass * cfg.trap_angular_freq ** 2))
    return cubed ** (1.0 / 3.0)


def force_balance_residual(positions) -> np.ndarray:
    """Left-hand side of the dimensionless force-balance equations."""
    u = np.asarray(positions, dtype=float)
    n = u.size
    if n == 1:
        return u.copy()
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    inv2 = 1.0 / diff**2
    # ions with lower index push up (-), higher index push down (+)
    sign = np.sign(np.arange(n)[:, None] - np.arange(n)[None, :])
    return u - (sign * inv2).sum(axis=1)


def initial_guess(n_ions: int, perturbed: bool = False) -> np.ndarray:
    """Uniformly spaced seed positions for the Newton solver.

    The full extent is N times the empirical central gap C/N^p.  With
    ``perturbed`` every coordinate is scaled by (1 +/- 1%), alternating
    with ion index; this is the documented second initialization used to
    demonstrate that the solution does not depend on the seed.
    """
    half = 0.5 * n_ions * MIN_SPACING_PREFACTOR / n_ions**MIN_SPACING_EXPONENT
    u = np.linspace(-half, half, n_ions)
    if perturbed:
        u = u * (1.0 + 0.01 * (-1.0) ** np.arange(n_ions))
        u.sort()
    return u


def solve_equilibrium(n_ions: int,
                      tolerance: float = DEFAULT_TOLERANCE,
                      start=None,
                      iteration_cap: int = NEWTON_ITERATION_CAP) -> np.ndarray:
    """Dimensionless equilibrium positions of ``n_ions`` ions, ascending.

    Damped Newton iteration on the force-balance equations with the mode
    coupling matrix as analytic Jacobian.  Stops when the residual
    inf-norm is at most ``tolerance``; raises
    :class:`EquilibriumConvergenceError` if the iteration cap is hit.
    ``start`` overrides the default uniform seed (any 1-d array of
    ``n_ions`` strictly increasing values).
    """
    if not (isinstance(n_ions, int) and n_ions >= 1):
        raise ValueError("n_ions must be an integer >= 1")
    if not tolerance > 0.0:
        raise ValueError("tolerance must be positive")
    if n_ions == 1:
        return np.zeros(1)
    u = initial_guess(n_ions) if start is None else np.array(start, dtype=float)
    if u.shape != (n_ions,) or np.any(np.diff(u) <= 0.0):
        raise ValueError("start must be strictly increasing with one entry per ion")
    res = force_balance_residual(u)
    res_norm = float(np.max(np.abs(res)))
    for iteration in range(iteration_cap):
        if res_norm <= tolerance:
            return u
        step = np.linalg.solve(build_coupling_matrix(u), res)
        damping = 1.0
        for _ in range(60):
            trial = u - damping * step
            ok = np.all(np.diff(trial) > 0.0)
            if ok:
                trial_res = force_balance_residual(trial)
                trial_norm = float(np.max(np.abs(trial_res)))
                if np.isfinite(trial_norm) and trial_norm < res_norm:
                    break
            damping *= 0.5
        else:
            raise EquilibriumConvergenceError(iteration + 1, res_norm)
        u, res, res_norm = trial, trial_res, trial_norm
    if res_norm <= tolerance:
        return u
    raise EquilibriumConvergenceError(iteration_cap, res_norm)


@dataclass(frozen=True)
class ChainEquilibrium:
    """Solved chain: length unit in meters plus dimensionless positions."""

    length_scale: float
    positions: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.positions, dtype=float)
        if u.ndim != 1 or u.size < 1:
            raise ValueError("positions must be a non-empty 1-d sequence")
        if np.any(np.diff(u) <= 0.0):
            raise ValueError("positions must be strictly increasing")
        if not self.length_scale > 0.0:
            raise ValueError("length_scale must be positive")
        object.__setattr__(self, "positions", u)

    @property
    def n_ions(self) -> int:
        return self.positions.size

    @property
    def positions_meters(self) -> np.ndarray:
        return self.positions * self.length_scale


def chain_equilibrium(cfg: TrapChainConfig,
                      tolerance: float = DEFAULT_TOLERANCE) -> ChainEquilibrium:
    """Solve the chain defined by ``cfg`` and attach its length scale."""
    return ChainEquilibrium(length_scale(cfg),
                            solve_equilibrium(cfg.ion_count, tolerance))


class MinimumSpacing(NamedTuple):
    value: float       # smallest adjacent gap, dimensionless
    pair_index: int    # 1-based index of the lower ion of that pair


def minimum_spacing(positions) -> MinimumSpacing:
    """Smallest gap between adjacent ions and where it occurs.

    The gap between ions m and m+1 is reported with ``pair_index = m``
    (1-based).  On ties the lowest index wins.  Needs at least two ions.
    """
    u = np.asarray(positions, dtype=float)
    if u.size < 2:
        raise ValueError("need at least two ions to have a spacing")
    if np.any(np.diff(u) <= 0.0):
        raise ValueError("positions must be strictly increasing")
    gaps = np.diff(u)
    i = int(np.argmin(gaps))
    return MinimumSpacing(float(gaps[i]), i + 1)


class SpacingFit(NamedTuple):
    prefactor: float
    exponent: float


def fit_min_spacing_law(n_min: int = 2, n_max: int = 10,
                        tolerance: float = DEFAULT_TOLERANCE) -> SpacingFit:
    """Power-law fit u_min(N) ~ C / N^p over an inclusive range of N.

    Straight least squares of log(u_min) against log(N).  At least three
    chain sizes are required for a meaningful fit.
    """
    if n_min < 2:
        raise ValueError("n_min must be at least 2 (a single ion has no spacing)")
    if n_max - n_min + 1 < 3:
        raise ValueError("need at least 3 chain sizes to fit")
    sizes = np.arange(n_min, n_max + 1)
    gaps = [minimum_spacing(solve_equilibrium(int(n), tolerance)).value
            for n in sizes]
    slope, intercept = np.polyfit(np.log(sizes), np.log(gaps), 1)
    return SpacingFit(float(np.exp(intercept)), float(-slope))


def min_spacing_meters(cfg: TrapChainConfig,
                       tolerance: float = DEFAULT_TOLERANCE) -> float:
    """Smallest adjacent ion separation in meters, from the solved chain."""
    if cfg.ion_count < 2:
        raise ValueError("need at least two ions to have a spacing")
    u = solve_equilibrium(cfg.ion_count, tolerance)
    return length_scale(cfg) * minimum_spacing(u).value
