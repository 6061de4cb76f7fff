"""Normal modes of the axial motion of a linear ion chain.

The small oscillations of the ions about their equilibrium positions are
governed by a real symmetric coupling matrix built from the inverse-cube
distances between ions.  Diagonalizing it gives the mode eigenvalues
(squared frequencies in units of the trap frequency), the orthonormal
mode vectors, and the per-ion coupling constants that enter the
laser-ion interaction.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import CODATA2018, PhysicalConstants

JACOBI_OFFDIAG_THRESHOLD = 1e-14
JACOBI_SWEEP_CAP = 100


class JacobiConvergenceError(RuntimeError):
    """Cyclic Jacobi diagonalization failed to reach the off-diagonal threshold."""

    def __init__(self, sweeps: int, off_norm: float):
        self.sweeps = sweeps
        self.off_norm = off_norm
        super().__init__(
            f"Jacobi sweep cap ({sweeps}) exceeded, off-diagonal norm {off_norm:.3e}"
        )


def build_coupling_matrix(positions) -> np.ndarray:
    """Dimensionless coupling matrix of the linearized axial motion.

    ``A[m, m] = 1 + 2 sum_{p != m} 1/|u_m - u_p|^3`` and
    ``A[m, n] = -2/|u_m - u_n|^3`` off the diagonal.  This matrix is also
    the Jacobian of the equilibrium force-balance equations, which is why
    the Newton solver in :mod:`ionchain.equilibrium` reuses it.

    ``positions`` are the dimensionless equilibrium positions, strictly
    increasing.  Duplicate positions raise ``ValueError``.
    """
    u = np.asarray(positions, dtype=float)
    if u.ndim != 1 or u.size < 1:
        raise ValueError("positions must be a non-empty 1-d sequence")
    n = u.size
    if n == 1:
        return np.ones((1, 1))
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    if np.any(diff == 0.0):
        raise ValueError("duplicate ion positions (zero separation)")
    inv3 = 1.0 / np.abs(diff) ** 3
    a = -2.0 * inv3
    np.fill_diagonal(a, 1.0 + 2.0 * inv3.sum(axis=1))
    # symmetrize exactly against roundoff asymmetry in the row sums
    return np.triu(a) + np.triu(a, 1).T


def _offdiag_frobenius(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(matrix: np.ndarray,
                threshold: float = JACOBI_OFFDIAG_THRESHOLD,
                sweep_cap: int = JACOBI_SWEEP_CAP):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, vectors)`` with eigenvalues ascending and the
    eigenvector for ``eigenvalues[i]`` in ``vectors[i, :]`` (rows).  Sweeps
    run until the off-diagonal Frobenius norm drops below ``threshold``
    scaled by the matrix norm, or ``sweep_cap`` is hit.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, rtol=0.0, atol=0.0):
        raise ValueError("matrix must be symmetric")
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    scale = max(1.0, float(np.linalg.norm(a)))
    for sweep in range(sweep_cap + 1):
        if _offdiag_frobenius(a) <= threshold * scale:
            break
        if sweep == sweep_cap:
            raise JacobiConvergenceError(sweep_cap, _offdiag_frobenius(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                # smaller root of t^2 - 2 theta t - 1 = 0, for stability
                t = -np.sign(theta) if theta != 0.0 else 1.0
                t /= abs(theta) + np.sqrt(theta * theta + 1.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array(((c, s), (-s, c)))
                a[(p, q), :] = rot @ a[(p, q), :]
                a[:, (p, q)] = a[:, (p, q)] @ rot.T
                v[(p, q), :] = rot @ v[(p, q), :]
    eigvals = a.diagonal().copy()
    order = np.argsort(eigvals, kind="stable")
    return eigvals[order], v[order, :]


def _apply_sign_convention(vectors: np.ndarray, tiny: float = 1e-12) -> np.ndarray:
    """Flip each row so its last component is positive.

    If the last component is negligible, walk inward to the first
    component whose magnitude exceeds ``tiny``.
    """
    out = vectors.copy()
    n = out.shape[1]
    for i in range(out.shape[0]):
        for j in range(n - 1, -1, -1):
            if abs(out[i, j]) > tiny:
                if out[i, j] < 0.0:
                    out[i] = -out[i]
                break
    return out


@dataclass(frozen=True)
class ModeSpectrum:
    """Axial mode spectrum of an ion chain.

    ``eigenvalues[p-1]`` is the dimensionless squared frequency of mode p
    (ascending; the in-phase mode has eigenvalue 1, the stretch mode 3).
    ``vectors[p-1, m-1]`` is the orthonormal mode vector, signed so its
    last significant component is positive.  ``couplings[p-1, m-1]`` is
    the per-ion coupling constant sqrt(N) b / eigenvalue^(1/4).
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    couplings: np.ndarray = field(default=None)

    def __post_init__(self):
        eig = np.asarray(self.eigenvalues, dtype=float)
        vec = np.asarray(self.vectors, dtype=float)
        if vec.shape != (eig.size, eig.size):
            raise ValueError("vectors must be (N, N) with one row per mode")
        if np.any(eig <= 0.0):
            raise ValueError("mode eigenvalues must be positive")
        if np.any(np.diff(eig) < 0.0):
            raise ValueError("mode eigenvalues must be ascending")
        object.__setattr__(self, "eigenvalues", eig)
        object.__setattr__(self, "vectors", vec)
        if self.couplings is None:
            object.__setattr__(self, "couplings", coupling_constants(vec, eig))

    @property
    def n_ions(self) -> int:
        return self.eigenvalues.size

    def eigenvalue(self, p: int) -> float:
        """Eigenvalue of mode ``p`` (1-based, ascending)."""
        return float(self.eigenvalues[_check_index(p, self.n_ions, "mode")])

    def vector(self, p: int) -> np.ndarray:
        return self.vectors[_check_index(p, self.n_ions, "mode")]

    def coupling(self, p: int, m: int) -> float:
        """Coupling constant of mode ``p`` at ion ``m`` (both 1-based)."""
        return float(self.couplings[_check_index(p, self.n_ions, "mode"),
                                    _check_index(m, self.n_ions, "ion")])

    def frequencies(self, trap_angular_freq: float) -> np.ndarray:
        return mode_frequencies(self.eigenvalues, trap_angular_freq)


def _check_index(i: int, n: int, label: str) -> int:
    if not 1 <= i <= n:
        raise ValueError(f"{label} index {i} out of range [1, {n}]")
    return i - 1


def diagonalize(matrix: np.ndarray) -> ModeSpectrum:
    """Mode spectrum of a coupling matrix.

    Eigenvalues come out ascending (stable sort: ties keep their original
    order); eigenvectors are orthonormal rows under the
    positive-last-component sign convention.  Near-degenerate eigenvalues
    are flagged with a warning, never silently reordered; axial chain
    spectra have no degeneracies.
    """
    eigvals, vecs = jacobi_eigh(np.asarray(matrix, dtype=float))
    gaps = np.diff(eigvals)
    if gaps.size and gaps.min() <= 1e-8:
        warnings.warn(f"near-degenerate mode eigenvalues (smallest gap "
                      f"{gaps.min():.2e})", stacklevel=2)
    return ModeSpectrum(eigvals, _apply_sign_convention(vecs))


def coupling_constants(vectors: np.ndarray, eigenvalues: np.ndarray) -> np.ndarray:
    """Per-ion mode coupling constants sqrt(N) b[p, m] / eigenvalue[p]^(1/4).

    For the in-phase mode every ion has coupling 1.
    """
    vec = np.asarray(vectors, dtype=float)
    eig = np.asarray(eigenvalues, dtype=float)
    n = vec.shape[0]
    return np.sqrt(n) * vec / eig[:, None] ** 0.25


def mode_frequencies(eigenvalues, trap_angular_freq: float) -> np.ndarray:
    """Angular frequency of each mode: sqrt(eigenvalue) times the trap frequency."""
    if not trap_angular_freq > 0.0:
        raise ValueError("trap angular frequency must be positive")
    return np.sqrt(np.asarray(eigenvalues, dtype=float)) * trap_angular_freq


def mode_spectrum(positions) -> ModeSpectrum:
    """Convenience: coupling matrix plus diagonalization in one call."""
    return diagonalize(build_coupling_matrix(positions))


def rms_displacement(spectrum: ModeSpectrum, ion_mass: float,
                     trap_angular_freq: float, occupations=None,
                     constants: PhysicalConstants = CODATA2018) -> np.ndarray:
    """Root-mean-square displacement of each ion, in meters.

    For mode occupation numbers ``n_p`` (default: all zero, the motional
    ground state) the mean squared displacement of ion m is

        <q_m^2> = (hbar / (2 M nu N)) * sum_p couplings[p, m]^2 (2 n_p + 1)

    which follows from expanding the ion displacement operator over the
    normal modes.
    """
    if not (ion_mass > 0.0 and trap_angular_freq > 0.0):
        raise ValueError("mass and trap frequency must be positive")
    n = spectrum.n_ions
    if occupations is None:
        occ = np.zeros(n)
    else:
        occ = np.asarray(occupations, dtype=float)
        if occ.shape != (n,):
            raise ValueError(f"need {n} occupation numbers")
        if np.any(occ < 0.0):
            raise ValueError("occupation numbers must be non-negative")
    weight = (2.0 * occ + 1.0)[:, None]
    msq = (constants.reduced_planck / (2.0 * ion_mass * trap_angular_freq * n)
           * (spectrum.couplings**2 * weight).sum(axis=0))
    return np.sqrt(msq)
