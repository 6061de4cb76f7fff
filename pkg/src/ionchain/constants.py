"""Physical constants (CODATA 2018), hard-coded so results are pinned."""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants in SI units.

    Values are CODATA 2018; they are hard-coded rather than imported so
    that computed numbers do not drift with library upgrades.
    """

    electron_charge: float = 1.602176634e-19      # C (exact)
    vacuum_permittivity: float = 8.8541878128e-12  # F/m
    reduced_planck: float = 1.054571817e-34        # J s
    speed_of_light: float = 299792458.0            # m/s (exact)
    fine_structure: float = 7.2973525693e-3        # dimensionless

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0.0:
                raise ValueError(f"constant {name} must be positive")


CODATA2018 = PhysicalConstants()
