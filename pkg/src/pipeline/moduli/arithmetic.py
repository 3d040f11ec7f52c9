"""
Exact number theory helpers and certified ball arithmetic.

Complex values are python-flint ``acb`` balls: every operation propagates a
rigorous error radius, so a value together with its radius is what the rest
of the package calls a certified complex number.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt
from typing import List, Union

from flint import acb, arb, ctx, fmpz
from sympy import factorint
from sympy.ntheory import jacobi_symbol

from .errors import InvalidInputError, RecognitionError

logger = logging.getLogger(__name__)

CertifiedComplex = acb
Exact = Union[int, Fraction]


class working_precision:
    """Temporarily set flint's working precision (in bits)."""

    def __init__(self, bits: int):
        self.bits = bits
        self.saved_bits = ctx.prec

    def __enter__(self):
        self.saved_bits = ctx.prec
        ctx.prec = self.bits
        return self

    def __exit__(self, *args):
        ctx.prec = self.saved_bits


def kronecker(delta: int, n: int) -> int:
    """Kronecker symbol (delta/n), extended to n <= 0 in the usual way."""
    if n == 0:
        return 1 if abs(delta) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if delta < 0:
            result = -result
    while n % 2 == 0:
        n //= 2
        if delta % 2 == 0:
            return 0
        if delta % 8 in (3, 5):
            result = -result
    if n == 1:
        return result
    return result * int(jacobi_symbol(delta % n, n))


def is_squarefree(n: int) -> bool:
    if n == 0:
        return False
    return all(e == 1 for e in factorint(abs(n)).values())


def is_fundamental_discriminant(delta: int) -> bool:
    if delta == 1:
        return True
    if delta == 0:
        return False
    if delta % 4 == 1:
        return is_squarefree(delta)
    if delta % 4 == 0:
        m = delta // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


def sqrt_classes_mod(delta: int, modulus: int) -> List[int]:
    """All r mod modulus/2 with r^2 = delta (mod modulus); modulus must be 4N."""
    if modulus <= 0 or modulus % 4:
        raise InvalidInputError(f"modulus must be a positive multiple of 4, got {modulus}")
    half = modulus // 2
    return [r for r in range(half) if (r * r - delta) % modulus == 0]


@lru_cache(maxsize=None)
def _squares_mod(modulus: int) -> frozenset:
    return frozenset(x * x % modulus for x in range(modulus))


def is_square_mod(x: int, modulus: int) -> bool:
    return x % modulus in _squares_mod(modulus)


def is_rational_square(x: Fraction) -> bool:
    x = Fraction(x)
    if x < 0:
        return False
    return _is_int_square(x.numerator) and _is_int_square(x.denominator)


def _is_int_square(n: int) -> bool:
    return n >= 0 and isqrt(n) ** 2 == n


def gcd_all(*values: int) -> int:
    g = 0
    for v in values:
        g = gcd(g, v)
    return g


def to_acb(x) -> acb:
    """Convert an int, Fraction, arb or acb to an acb at the current precision."""
    if isinstance(x, acb):
        return x
    if isinstance(x, arb):
        return acb(x)
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return acb(fmpz(x.numerator))
        return acb(arb(fmpz(x.numerator)) / fmpz(x.denominator))
    if isinstance(x, int):
        return acb(fmpz(x))
    raise TypeError(f"cannot convert {type(x).__name__} to a ball")


def root_of_unity(phase: Fraction) -> Union[int, acb]:
    """e(phase) = exp(2 pi i phase); exact +-1 when phase is a half-integer."""
    phase = Fraction(phase) % 1
    if phase == 0:
        return 1
    if phase == Fraction(1, 2):
        return -1
    if phase == Fraction(1, 4):
        return acb(0, 1)
    if phase == Fraction(3, 4):
        return acb(0, -1)
    return (2 * acb.pi() * acb(0, 1) * to_acb(phase)).exp()


def with_error(x: acb, bound: arb) -> acb:
    """Widen x by an absolute error bound on both coordinates."""
    return x + acb(arb(0, bound), arb(0, bound))


def ball_radius(x: acb) -> float:
    """Largest radius of the two coordinates, rounded up to a float."""
    radius = max(float(x.real.rad()), float(x.imag.rad()))
    return radius * (1 + 2 ** -50)


def _recognition_bits(x: acb, max_den: int) -> int:
    """Precision at which scaling x by q <= max_den loses nothing."""
    return max(ctx.prec, x.bits() + max_den.bit_length() + 32)


def recognize_rational(x: CertifiedComplex, max_den: int) -> Fraction:
    """The unique p/q with q <= max_den inside the ball x.

    Raises RecognitionError when the radius is too large to make the answer
    unique, when the imaginary part excludes zero, or when no candidate fits.
    Candidates are formed at the precision of the ball itself.
    """
    x = acb(x)
    with working_precision(_recognition_bits(x, max_den)):
        bound = arb(1) / (4 * max_den * max_den)
        if not (x.real.rad() < bound and x.imag.rad() < bound):
            raise RecognitionError(
                f"error radius {ball_radius(x):.3g} too large for denominators up to {max_den}"
            )
        if not x.imag.contains(0):
            raise RecognitionError(f"value {x} is not real")
        for q in range(1, max_den + 1):
            candidate = (x.real * q).unique_fmpz()
            if candidate is not None:
                return Fraction(int(candidate), q)
        raise RecognitionError(f"no rational with denominator <= {max_den} in {x.real}")


def recognize_in_sqrt(x: CertifiedComplex, radicand: int, max_den: int) -> Fraction:
    """The rational c with x = c * sqrt(radicand) (principal branch)."""
    if radicand == 1:
        return recognize_rational(x, max_den)
    x = acb(x)
    with working_precision(_recognition_bits(x, max_den)):
        scaled = x / acb(radicand).sqrt()
    return recognize_rational(scaled, max_den)

