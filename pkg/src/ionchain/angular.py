"""Angular momentum algebra: Wigner 3-j symbols and spherical tensors.

Everything here is computed in exact rational arithmetic.  A 3-j symbol
is the product of a sign and the square root of a rational number, so it
is represented internally as ``(sign, square)`` with ``square`` a
:class:`fractions.Fraction`; the same trick represents the spherical
basis vectors and the rank-2 spherical tensors as a rational-square
overall scale times a matrix of Gaussian rationals.  Floating point only
appears when values are exported.

All functions are pure; the 3-j cache is a thread-safe ``lru_cache``.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Tuple

import numpy as np


@dataclass(frozen=True, order=True)
class HalfInteger:
    """An integer or half-integer stored as its doubled value.

    Avoids float equality on quantum numbers: 3/2 is ``HalfInteger(3)``.
    """

    doubled: int

    def __post_init__(self):
        if not isinstance(self.doubled, int):
            raise TypeError("doubled must be an int")

    @classmethod
    def coerce(cls, value) -> "HalfInteger":
        """Accept a HalfInteger, int, exact float multiple of 1/2, Fraction,
        or a string like '3/2' or '-2'."""
        if isinstance(value, HalfInteger):
            return value
        if isinstance(value, str):
            value = Fraction(value)
        if isinstance(value, (int, np.integer)):
            return cls(2 * int(value))
        if isinstance(value, Fraction):
            doubled = 2 * value
            if doubled.denominator != 1:
                raise ValueError(f"{value} is not an integer or half-integer")
            return cls(int(doubled))
        if isinstance(value, float):
            doubled = 2.0 * value
            if doubled != round(doubled):
                raise ValueError(f"{value} is not an integer or half-integer")
            return cls(int(round(doubled)))
        raise TypeError(f"cannot interpret {value!r} as a half-integer")

    @property
    def value(self) -> float:
        return self.doubled / 2.0

    def __neg__(self) -> "HalfInteger":
        return HalfInteger(-self.doubled)

    def __abs__(self) -> "HalfInteger":
        return HalfInteger(abs(self.doubled))

    def is_integer(self) -> bool:
        return self.doubled % 2 == 0

    def __str__(self) -> str:
        if self.doubled % 2 == 0:
            return str(self.doubled // 2)
        return f"{self.doubled}/2"


def _factorial(n: int) -> int:
    if n < 0:
        raise ValueError("negative factorial")
    return math.factorial(n)


@lru_cache(maxsize=None)
def _wigner_3j_signed_square(tj1: int, tj2: int, tj3: int,
                             tm1: int, tm2: int, tm3: int
                             ) -> Tuple[int, Fraction]:
    """Exact 3-j symbol as (sign, square): value = sign * sqrt(square).

    Arguments are doubled angular momenta.  Selection-rule failures give
    (0, 0); inconsistent quantum numbers raise ``ValueError``.
    """
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        if tj < 0:
            raise ValueError("angular momentum j must be non-negative")
        if (tj + tm) % 2 != 0:
            raise ValueError("j and m must both be integers or both half-integers")
        if abs(tm) > tj:
            raise ValueError(f"|m| = {abs(tm)/2} exceeds j = {tj/2}")
    if (tj1 + tj2 + tj3) % 2 != 0:
        return 0, Fraction(0)
    if tm1 + tm2 + tm3 != 0:
        return 0, Fraction(0)
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2):
        return 0, Fraction(0)

    # Racah sum over the single free integer index
    t1 = (tj2 - tj3 - tm1) // 2
    t2 = (tj1 - tj3 + tm2) // 2
    t3 = (tj1 + tj2 - tj3) // 2
    t4 = (tj1 - tm1) // 2
    t5 = (tj2 + tm2) // 2
    tmin = max(0, t1, t2)
    tmax = min(t3, t4, t5)
    total = Fraction(0)
    for t in range(tmin, tmax + 1):
        denom = (_factorial(t) * _factorial(t - t1) * _factorial(t - t2)
                 * _factorial(t3 - t) * _factorial(t4 - t) * _factorial(t5 - t))
        total += Fraction((-1) ** t, denom)
    if total == 0:
        return 0, Fraction(0)

    triangle = Fraction(
        _factorial((tj1 + tj2 - tj3) // 2)
        * _factorial((tj1 - tj2 + tj3) // 2)
        * _factorial((-tj1 + tj2 + tj3) // 2),
        _factorial((tj1 + tj2 + tj3) // 2 + 1),
    )
    weights = (_factorial((tj1 + tm1) // 2) * _factorial((tj1 - tm1) // 2)
               * _factorial((tj2 + tm2) // 2) * _factorial((tj2 - tm2) // 2)
               * _factorial((tj3 + tm3) // 2) * _factorial((tj3 - tm3) // 2))
    phase = (-1) ** ((tj1 - tj2 - tm3) // 2)
    sign = phase * (1 if total > 0 else -1)
    return sign, triangle * weights * total * total


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3-j symbol, evaluated exactly and converted to float.

    Arguments may be ints, exact half-integer floats, Fractions, strings
    like '3/2', or :class:`HalfInteger`.  Selection-rule violations
    (m-sum, triangle) return 0; impossible quantum numbers (|m| > j,
    mismatched integrality) raise ``ValueError``.
    """
    args = [HalfInteger.coerce(x).doubled for x in (j1, j2, j3, m1, m2, m3)]
    sign, square = _wigner_3j_signed_square(*args)
    return sign * math.sqrt(square)


def _sqrt_exact(value: Fraction):
    """Square root of a Fraction if it is a perfect square, else None."""
    if value < 0:
        return None
    rn = math.isqrt(value.numerator)
    rd = math.isqrt(value.denominator)
    if rn * rn == value.numerator and rd * rd == value.denominator:
        return Fraction(rn, rd)
    return None


def _tuplify(rows):
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def _canonicalize(scale_squared, real, imag):
    """Unique representation: first nonzero entry (row-major, real part
    before imaginary) has magnitude 1, with the overall size moved into
    the scale.  Makes exact equality a plain field comparison."""

    def frac(entries):
        if entries and isinstance(entries[0], tuple):
            return tuple(tuple(Fraction(x) for x in row) for row in entries)
        return tuple(Fraction(x) for x in entries)

    real, imag = frac(real), frac(imag)
    g = None
    for r, i in zip_flat(real, imag):
        for x in (r, i):
            if g is None and x != 0:
                g = abs(x)
    if g is None:
        return Fraction(0), real, imag
    scale = Fraction(scale_squared) * g * g

    def div(entries):
        if entries and isinstance(entries[0], tuple):
            return tuple(tuple(x / g for x in row) for row in entries)
        return tuple(x / g for x in entries)

    return scale, div(real), div(imag)


def zip_flat(real, imag):
    if isinstance(real[0], tuple):
        for row_r, row_i in zip(real, imag):
            yield from zip(row_r, row_i)
    else:
        yield from zip(real, imag)


@dataclass(frozen=True)
class SphericalBasisVector:
    """Spherical basis vector: sqrt(scale_squared) * (real + i imag).

    ``real`` and ``imag`` hold exact rational components; ``components``
    exports the floating complex vector.  Instances are canonicalized, so
    equal vectors compare equal field-by-field.
    """

    q: int
    scale_squared: Fraction
    real: tuple
    imag: tuple

    def __post_init__(self):
        s, re, im = _canonicalize(self.scale_squared, self.real, self.imag)
        object.__setattr__(self, "scale_squared", s)
        object.__setattr__(self, "real", re)
        object.__setattr__(self, "imag", im)

    @property
    def components(self) -> np.ndarray:
        s = math.sqrt(self.scale_squared)
        return s * (np.array([float(x) for x in self.real])
                    + 1j * np.array([float(x) for x in self.imag]))

    def conjugate(self) -> "SphericalBasisVector":
        return SphericalBasisVector(self.q, self.scale_squared, self.real,
                                    tuple(-x for x in self.imag))


@dataclass(frozen=True)
class RankTwoTensor:
    """Rank-2 spherical tensor: sqrt(scale_squared) * (real + i imag), 3x3.

    Canonicalized like :class:`SphericalBasisVector`.
    """

    q: int
    scale_squared: Fraction
    real: tuple
    imag: tuple

    def __post_init__(self):
        s, re, im = _canonicalize(self.scale_squared, self.real, self.imag)
        object.__setattr__(self, "scale_squared", s)
        object.__setattr__(self, "real", re)
        object.__setattr__(self, "imag", im)

    @property
    def components(self) -> np.ndarray:
        s = math.sqrt(self.scale_squared)
        return s * (np.array([[float(x) for x in row] for row in self.real])
                    + 1j * np.array([[float(x) for x in row] for row in self.imag]))

    def conjugate(self) -> "RankTwoTensor":
        return RankTwoTensor(self.q, self.scale_squared, self.real,
                             tuple(tuple(-x for x in row) for row in self.imag))


def exact_inner(a, b) -> Tuple[Fraction, Fraction]:
    """Exact inner product sum(a * conj(b)) over all components.

    Works for basis vectors and rank-2 tensors alike.  Returns the exact
    (real, imaginary) rational pair.  Raises ``ArithmeticError`` in the
    (unreachable for these fixed objects) case where the result is a
    nonzero multiple of an irrational square root.
    """
    re_sum = Fraction(0)
    im_sum = Fraction(0)
    for (ar, ai), (br, bi) in zip(zip_flat(a.real, a.imag),
                                  zip_flat(b.real, b.imag)):
        re_sum += ar * br + ai * bi
        im_sum += ai * br - ar * bi
    if re_sum == 0 and im_sum == 0:
        return Fraction(0), Fraction(0)
    scale = _sqrt_exact(a.scale_squared * b.scale_squared)
    if scale is None:
        raise ArithmeticError("inner product is irrational")
    return scale * re_sum, scale * im_sum


_BASIS = {
    # q = +1: -(1, -i, 0)/sqrt(2)
    1: ((Fraction(1, 2)), (-1, 0, 0), (0, 1, 0)),
    0: ((Fraction(1)), (0, 0, 1), (0, 0, 0)),
    # q = -1: (1, i, 0)/sqrt(2)
    -1: ((Fraction(1, 2)), (1, 0, 0), (0, 1, 0)),
}

_TENSOR = {
    2: (Fraction(1, 6),
        ((1, 0, 0), (0, -1, 0), (0, 0, 0)),
        ((0, -1, 0), (-1, 0, 0), (0, 0, 0))),
    1: (Fraction(1, 6),
        ((0, 0, -1), (0, 0, 0), (-1, 0, 0)),
        ((0, 0, 0), (0, 0, 1), (0, 1, 0))),
    0: (Fraction(1, 9),
        ((-1, 0, 0), (0, -1, 0), (0, 0, 2)),
        ((0, 0, 0), (0, 0, 0), (0, 0, 0))),
    -1: (Fraction(1, 6),
         ((0, 0, 1), (0, 0, 0), (1, 0, 0)),
         ((0, 0, 0), (0, 0, 1), (0, 1, 0))),
    -2: (Fraction(1, 6),
         ((1, 0, 0), (0, -1, 0), (0, 0, 0)),
         ((0, 1, 0), (1, 0, 0), (0, 0, 0))),
}


def spherical_basis(q: int) -> SphericalBasisVector:
    """Normalized spherical basis vector for q in {-1, 0, 1}."""
    if q not in _BASIS:
        raise ValueError(f"spherical basis index q={q} outside -1..1")
    scale, re, im = _BASIS[q]
    return SphericalBasisVector(q, scale,
                                tuple(Fraction(x) for x in re),
                                tuple(Fraction(x) for x in im))


def rank2_tensor(q: int) -> RankTwoTensor:
    """Rank-2 spherical tensor for q in {-2..2} (tabulated exact form)."""
    if q not in _TENSOR:
        raise ValueError(f"rank-2 tensor index q={q} outside -2..2")
    scale, re, im = _TENSOR[q]
    return RankTwoTensor(q, scale, _tuplify(re), _tuplify(im))


def rank2_tensor_from_coupling(q: int) -> RankTwoTensor:
    """Rank-2 tensor built from its defining 3-j contraction of basis vectors.

    Couples two rank-1 spherical basis vectors with sqrt(10/3) (-1)^q
    times the (1 1 2) 3-j symbol, entirely in exact arithmetic.  Must
    reproduce :func:`rank2_tensor`; kept separate so tests can verify
    both constructions against each other.
    """
    if q not in _TENSOR:
        raise ValueError(f"rank-2 tensor index q={q} outside -2..2")
    # accumulated exact terms: list of (coeff_sign, coeff_square, re, im)
    terms = []
    for m1 in (-1, 0, 1):
        m2 = q - m1
        if m2 not in (-1, 0, 1):
            continue
        sign, square = _wigner_3j_signed_square(2, 2, 4, 2 * m1, 2 * m2, -2 * q)
        if sign == 0:
            continue
        v1 = spherical_basis(m1)
        v2 = spherical_basis(m2)
        re = [[Fraction(0)] * 3 for _ in range(3)]
        im = [[Fraction(0)] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                re[i][j] = v1.real[i] * v2.real[j] - v1.imag[i] * v2.imag[j]
                im[i][j] = v1.real[i] * v2.imag[j] + v1.imag[i] * v2.real[j]
        coeff_square = (Fraction(10, 3) * square
                        * v1.scale_squared * v2.scale_squared)
        coeff_sign = sign * (-1) ** q
        terms.append((coeff_sign, coeff_square, re, im))
    if not terms:
        raise ValueError(f"no coupling terms for q={q}")

    # all terms share one square-root scale up to a rational ratio
    _, ref_square, _, _ = terms[0]
    re_sum = [[Fraction(0)] * 3 for _ in range(3)]
    im_sum = [[Fraction(0)] * 3 for _ in range(3)]
    for coeff_sign, coeff_square, re, im in terms:
        ratio = _sqrt_exact(coeff_square / ref_square)
        if ratio is None:
            raise ArithmeticError(
                "coupling terms do not share a common quadratic irrationality")
        factor = coeff_sign * ratio
        for i in range(3):
            for j in range(3):
                re_sum[i][j] += factor * re[i][j]
                im_sum[i][j] += factor * im[i][j]
    return RankTwoTensor(q, ref_square, _tuplify(re_sum), _tuplify(im_sum))
