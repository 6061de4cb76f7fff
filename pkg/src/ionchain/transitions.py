"""Laser-ion coupling strengths for dipole and quadrupole transitions.

Converts tabulated transition data (total decay rate, wavenumber) plus a
laser field geometry into Rabi frequencies.  The angular structure is a
contraction of Wigner 3-j symbols with spherical basis vectors (dipole)
or rank-2 spherical tensors (quadrupole) against the laser polarization
and propagation direction; the result is the dimensionless geometric
factor ``sigma`` in

    rabi = (e |E| / (hbar sqrt(c alpha))) sqrt(A / k^3) sigma .

Also classifies which of the two standing-wave Hamiltonian types acts
for a given multipole order and node/antinode placement, and computes
the Lamb-Dicke parameter.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .angular import HalfInteger, rank2_tensor, spherical_basis, wigner_3j
from .constants import CODATA2018, PhysicalConstants
from .equilibrium import TrapChainConfig
from .modes import ModeSpectrum


class Multipole(enum.Enum):
    E1 = "E1"
    E2 = "E2"

    @classmethod
    def coerce(cls, value) -> "Multipole":
        if isinstance(value, cls):
            return value
        return cls(str(value).upper())


class Placement(enum.Enum):
    NODE = "node"
    ANTINODE = "antinode"

    @classmethod
    def coerce(cls, value) -> "Placement":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True)
class TransitionSpec:
    """One internal transition of the ion.

    ``einstein_A`` is the total spontaneous decay rate of the upper level
    (summed over lower sublevels, the number quoted in data tables), in
    1/s.  ``wavenumber`` is the transition wavenumber in 1/m.
    """

    multipole: Multipole
    lower_j: HalfInteger
    lower_m: HalfInteger
    upper_j: HalfInteger
    upper_m: HalfInteger
    einstein_A: float
    wavenumber: float

    def __post_init__(self):
        object.__setattr__(self, "multipole", Multipole.coerce(self.multipole))
        for name in ("lower_j", "lower_m", "upper_j", "upper_m"):
            object.__setattr__(self, name, HalfInteger.coerce(getattr(self, name)))
        for j, m, label in ((self.lower_j, self.lower_m, "lower"),
                            (self.upper_j, self.upper_m, "upper")):
            if j.doubled < 0:
                raise ValueError(f"{label} j must be non-negative")
            if abs(m.doubled) > j.doubled:
                raise ValueError(f"{label} |m_j| exceeds j")
            if (j.doubled + m.doubled) % 2 != 0:
                raise ValueError(f"{label} j and m_j have mismatched integrality")
        if not self.einstein_A > 0.0:
            raise ValueError("einstein_A must be positive")
        if not self.wavenumber > 0.0:
            raise ValueError("wavenumber must be positive")


@dataclass(frozen=True)
class LaserGeometry:
    """Standing-wave laser field seen by one ion.

    ``polarization`` (complex, unit) and ``propagation`` (real, unit)
    live in the quantization frame, whose z axis is set by the magnetic
    field; they must be transverse.  ``axis_angle`` is the angle between
    the beam and the trap axis and only enters the Lamb-Dicke projection
    (the trap axis orientation within the quantization frame is up to
    the caller to keep consistent).  ``node_index`` counts standing-wave
    periods to the reflecting mirror.
    """

    field_amplitude: float
    angular_freq: float
    axis_angle: float
    polarization: tuple
    propagation: tuple
    placement: Placement
    node_index: int = 0
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "placement", Placement.coerce(self.placement))
        eps = np.asarray(self.polarization, dtype=complex).reshape(3)
        prop = np.asarray(self.propagation, dtype=float).reshape(3)
        if not self.field_amplitude >= 0.0:
            raise ValueError("field_amplitude must be non-negative")
        if not self.angular_freq > 0.0:
            raise ValueError("angular_freq must be positive")
        if abs(np.sum(np.abs(eps) ** 2) - 1.0) > 1e-9:
            raise ValueError("polarization must be a unit vector")
        if abs(prop @ prop - 1.0) > 1e-9:
            raise ValueError("propagation must be a unit vector")
        if abs(eps @ prop) > 1e-9:
            raise ValueError("polarization must be transverse to propagation")
        if not isinstance(self.node_index, int):
            raise ValueError("node_index must be an integer")
        object.__setattr__(self, "polarization", tuple(complex(x) for x in eps))
        object.__setattr__(self, "propagation", tuple(float(x) for x in prop))

    @property
    def wavenumber(self) -> float:
        return self.angular_freq / CODATA2018.speed_of_light


def dipole_sigma(lower_j, lower_m, upper_j, upper_m, polarization) -> float:
    """Geometric factor for an electric-dipole transition.

    sqrt(3 (2j'+1) / 4) |sum_q 3j(j 1 j'; -m q m') (c^(q) . eps)| with the
    plain (unconjugated) dot product against the polarization.
    """
    j = HalfInteger.coerce(lower_j)
    m = HalfInteger.coerce(lower_m)
    jp = HalfInteger.coerce(upper_j)
    mp = HalfInteger.coerce(upper_m)
    eps = np.asarray(polarization, dtype=complex).reshape(3)
    amp = 0.0 + 0.0j
    for q in (-1, 0, 1):
        three_j = wigner_3j(j, 1, jp, -m.value, q, mp.value)
        if three_j != 0.0:
            amp += three_j * (spherical_basis(q).components @ eps)
    return math.sqrt(3.0 * (jp.doubled + 1) / 4.0) * abs(amp)


def quadrupole_sigma(lower_j, lower_m, upper_j, upper_m,
                     polarization, propagation) -> float:
    """Geometric factor for an electric-quadrupole transition.

    sqrt(15 (2j'+1) / 4) |sum_q 3j(j 2 j'; -m q m') eps_i c^(q)_ij n_j|.
    """
    j = HalfInteger.coerce(lower_j)
    m = HalfInteger.coerce(lower_m)
    jp = HalfInteger.coerce(upper_j)
    mp = HalfInteger.coerce(upper_m)
    eps = np.asarray(polarization, dtype=complex).reshape(3)
    prop = np.asarray(propagation, dtype=complex).reshape(3)
    amp = 0.0 + 0.0j
    for q in (-2, -1, 0, 1, 2):
        three_j = wigner_3j(j, 2, jp, -m.value, q, mp.value)
        if three_j != 0.0:
            amp += three_j * (eps @ rank2_tensor(q).components @ prop)
    return math.sqrt(15.0 * (jp.doubled + 1) / 4.0) * abs(amp)


def geometric_factor(spec: TransitionSpec, geom: LaserGeometry) -> float:
    """Dimensionless geometric factor of the Rabi frequency, >= 0."""
    if spec.multipole is Multipole.E1:
        return dipole_sigma(spec.lower_j, spec.lower_m,
                            spec.upper_j, spec.upper_m, geom.polarization)
    return quadrupole_sigma(spec.lower_j, spec.lower_m,
                            spec.upper_j, spec.upper_m,
                            geom.polarization, geom.propagation)


def rabi_frequency(spec: TransitionSpec, geom: LaserGeometry,
                   constants: PhysicalConstants = CODATA2018) -> float:
    """On-resonance Rabi frequency in rad/s.

    (e |E| / (hbar sqrt(c alpha))) sqrt(A / k^3) sigma: linear in the
    field amplitude and in the geometric factor.
    """
    k = constants
    sigma = geometric_factor(spec, geom)
    return (k.electron_charge * geom.field_amplitude
            / (k.reduced_planck * math.sqrt(k.speed_of_light * k.fine_structure))
            * math.sqrt(spec.einstein_A / spec.wavenumber**3) * sigma)


def lamb_dicke(cfg: TrapChainConfig, geom: LaserGeometry,
               constants: PhysicalConstants = None) -> float:
    """Lamb-Dicke parameter sqrt(hbar k^2 cos^2(theta) / (2 M nu)).

    Ratio of the single-ion ground-state wavepacket size to the laser
    wavelength projected on the trap axis.
    """
    k = constants if constants is not None else cfg.constants
    wavenumber = geom.angular_freq / k.speed_of_light
    return math.sqrt(k.reduced_planck * wavenumber**2
                     * math.cos(geom.axis_angle) ** 2
                     / (2.0 * cfg.ion_mass * cfg.trap_angular_freq))


@dataclass(frozen=True)
class HamiltonianCoefficients:
    """Coefficient set of the effective two-level standing-wave Hamiltonian.

    ``kind`` 'V' drives only the internal state; 'U' couples the motion,
    carrying one (coupling, mode_angular_freq) pair per chain mode, with
    coupling = lamb_dicke * s(p, m) / sqrt(N).  The bare ``rabi``
    multiplies everything; ``phase`` is the full laser phase including
    the node-index contribution.
    """

    kind: str
    rabi: float
    detuning: float
    phase: float
    mode_couplings: tuple = ()

    def __post_init__(self):
        if self.kind not in ("V", "U"):
            raise ValueError("kind must be 'V' or 'U'")
        if self.kind == "V" and self.mode_couplings:
            raise ValueError("kind 'V' carries no mode couplings")


def hamiltonian_coefficients(spec: TransitionSpec, geom: LaserGeometry,
                             cfg: TrapChainConfig, spectrum: ModeSpectrum,
                             ion_index: int, detuning: float
                             ) -> HamiltonianCoefficients:
    """Classify and assemble the standing-wave Hamiltonian coefficients.

    At a node the field vanishes: a dipole transition couples through
    the gradient (kind U) while a quadrupole one sees a constant drive
    (kind V); at an antinode the roles swap.  The laser phase picks up
    - node_index * pi for E1 and + (node_index + 1/2) * pi for E2.
    ``ion_index`` is 1-based; ``detuning`` is the laser-minus-transition
    angular frequency offset, a free parameter here.
    """
    n = spectrum.n_ions
    if cfg.ion_count != n:
        raise ValueError("config and spectrum disagree on the ion count")
    if not 1 <= ion_index <= n:
        raise ValueError(f"ion index {ion_index} out of range [1, {n}]")
    rabi = rabi_frequency(spec, geom, cfg.constants)
    if spec.multipole is Multipole.E1:
        phase = geom.phase - geom.node_index * math.pi
        kind = "U" if geom.placement is Placement.NODE else "V"
    else:
        phase = geom.phase + (geom.node_index + 0.5) * math.pi
        kind = "V" if geom.placement is Placement.NODE else "U"
    if kind == "V":
        return HamiltonianCoefficients("V", rabi, detuning, phase)
    eta = lamb_dicke(cfg, geom)
    freqs = spectrum.frequencies(cfg.trap_angular_freq)
    couplings = tuple(
        (eta * spectrum.couplings[p, ion_index - 1] / math.sqrt(n), float(freqs[p]))
        for p in range(n))
    return HamiltonianCoefficients("U", rabi, detuning, phase, couplings)
