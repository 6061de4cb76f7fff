"""Bounds on unwanted excitation of the non-center-of-mass chain modes.

When the laser is tuned to the red sideband of the center-of-mass mode,
the other ("extraneous") modes are driven off-resonantly.  Their total
excitation probability, averaged over which ion is addressed, is bounded
by a closed-form expression involving a slowly varying spectral sum over
the mode eigenvalues.  Keeping that bound small is the sufficiency
condition for treating the chain as a single-mode system.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

from .equilibrium import solve_equilibrium
from .modes import mode_spectrum


@lru_cache(maxsize=None)
def extraneous_mode_sum(n_ions: int) -> float:
    """Spectral sum over modes p >= 2 of (mu+1) / ((mu-1)^2 sqrt(mu)).

    Computed from the solved chain for ``n_ions`` ions.  Grows slowly
    with the ion number and plateaus near 0.82 from about ten ions on.
    Cached per chain size; safe for concurrent callers.
    """
    if not (isinstance(n_ions, int) and n_ions >= 2):
        raise ValueError("need at least two ions to have extraneous modes")
    eig = mode_spectrum(solve_equilibrium(n_ions)).eigenvalues
    return float(sum((mu + 1.0) / ((mu - 1.0) ** 2 * math.sqrt(mu))
                     for mu in eig[1:]))


class ExcitationBound(NamedTuple):
    exact: float    # 2 (2 rabi eta / (sqrt(N) nu))^2 * mode sum
    rounded: float  # (2.6 rabi eta / (sqrt(N) nu))^2, the quotable form


def extraneous_excitation_bound(rabi: float, lamb_dicke: float,
                                trap_angular_freq: float,
                                n_ions: int) -> ExcitationBound:
    """Upper bound on the ion-averaged extraneous-mode excitation.

    Returns both the exact form built from the spectral sum and the
    rounded single-coefficient form (sqrt(8 * 0.82) rounds to 2.6).
    Scales exactly quadratically in the Rabi frequency and the
    Lamb-Dicke parameter, and inversely with N nu^2.
    """
    if not trap_angular_freq > 0.0:
        raise ValueError("trap_angular_freq must be positive")
    drive = rabi * lamb_dicke / (math.sqrt(n_ions) * trap_angular_freq)
    exact = 2.0 * (2.0 * drive) ** 2 * extraneous_mode_sum(n_ions)
    rounded = (2.6 * drive) ** 2
    return ExcitationBound(exact, rounded)


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of the single-mode sufficiency check, with inputs echoed."""

    mode_sum: float
    bound_exact: float
    bound_rounded: float
    condition_satisfied: bool
    threshold: float
    rabi: float
    lamb_dicke: float
    trap_angular_freq: float
    n_ions: int


def check_validity(rabi: float, lamb_dicke: float, trap_angular_freq: float,
                   n_ions: int, threshold: float = 0.01) -> ValidityReport:
    """Evaluate the single-mode sufficiency condition.

    The published condition states that the rounded bound must be much
    smaller than one; "much smaller" is operationalized by ``threshold``
    (default 0.01).  The report carries both bound forms; the condition
    is evaluated on the rounded one.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    bound = extraneous_excitation_bound(rabi, lamb_dicke,
                                        trap_angular_freq, n_ions)
    return ValidityReport(
        mode_sum=extraneous_mode_sum(n_ions),
        bound_exact=bound.exact,
        bound_rounded=bound.rounded,
        condition_satisfied=bound.rounded <= threshold,
        threshold=threshold,
        rabi=rabi,
        lamb_dicke=lamb_dicke,
        trap_angular_freq=trap_angular_freq,
        n_ions=n_ions,
    )
