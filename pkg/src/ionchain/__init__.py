"""Statics, normal modes, laser couplings and sideband dynamics of a
linear chain of cold trapped ions."""

__version__ = "0.1.0"

from .angular import (HalfInteger, RankTwoTensor, SphericalBasisVector,
                      rank2_tensor, rank2_tensor_from_coupling,
                      spherical_basis, wigner_3j)
from .catalog import (CatalogError, IonSpecies, TransitionRecord,
                      builtin_catalog_path, dump_catalog, load_catalog,
                      to_transition_spec)
from .constants import CODATA2018, PhysicalConstants
from .dynamics import (EnvelopeReport, IntegrationError, SimulationConfig,
                       SimulationResult, check_envelopes,
                       max_extraneous_population, simulate)
from .equilibrium import (ChainEquilibrium, EquilibriumConvergenceError,
                          MinimumSpacing, SpacingFit, TrapChainConfig,
                          chain_equilibrium, fit_min_spacing_law,
                          force_balance_residual, initial_guess, length_scale,
                          min_spacing_meters, minimum_spacing,
                          solve_equilibrium)
from .modes import (JacobiConvergenceError, ModeSpectrum,
                    build_coupling_matrix, coupling_constants, diagonalize,
                    jacobi_eigh, mode_frequencies, mode_spectrum,
                    rms_displacement)
from .transitions import (HamiltonianCoefficients, LaserGeometry, Multipole,
                          Placement, TransitionSpec, dipole_sigma,
                          geometric_factor, hamiltonian_coefficients,
                          lamb_dicke, quadrupole_sigma, rabi_frequency)
from .validity import (ExcitationBound, ValidityReport, check_validity,
                       extraneous_excitation_bound, extraneous_mode_sum)

__all__ = [name for name in dir() if not name.startswith("_")]
