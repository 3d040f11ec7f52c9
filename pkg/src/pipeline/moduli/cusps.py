"""
Cusps of Gamma_0(N): representatives, scaling matrices, widths and lattice constants.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm
from typing import List, Tuple

from sympy import divisors
from sympy.core.intfunc import igcdex

from .errors import InvalidInputError
from .models import Cusp, UniMat

logger = logging.getLogger(__name__)


def scaling_matrix(p: int, q: int) -> UniMat:
    """A matrix of SL_2(Z) sending infinity to p/q (q == 0 means infinity)."""
    if q == 0:
        return UniMat.identity()
    x, y, g = igcdex(p, q)
    if g != 1:
        raise InvalidInputError(f"{p}/{q} is not in lowest terms")
    # x p + y q = 1, so (p, -y; q, x) has determinant one
    return UniMat(p, int(-y), q, int(x))


def beta_of(sigma: UniMat, N: int) -> Fraction:
    """Smallest beta > 0 with sigma (0, beta; 0, 0) sigma^-1 in L.

    sigma (0, 1; 0, 0) sigma^-1 = (-ps, p^2; -s^2, ps) for sigma = (p, q; s, t), and
    (x11, x12; x21, -x11) lies in L iff x11 is integral, x12 is even and 2N | x21.
    """
    p, s = sigma.a, sigma.c
    conditions = [(p * s, 1), (p * p, 2), (s * s, 2 * N)]
    beta = None
    for coefficient, modulus in conditions:
        if coefficient == 0:
            continue
        # beta * coefficient in modulus * Z
        needed = Fraction(modulus, abs(coefficient))
        beta = needed if beta is None else _rational_lcm(beta, needed)
    return beta


def _rational_lcm(x: Fraction, y: Fraction) -> Fraction:
    num = lcm(x.numerator, y.numerator)
    den = gcd(x.denominator, y.denominator)
    return Fraction(num, den)


def cusp_width(c: int, N: int) -> int:
    return N // gcd(c * c, N)


@lru_cache(maxsize=64)
def _cusp_reps(N: int) -> Tuple[Cusp, ...]:
    cusps = []
    for c in divisors(N):
        g = gcd(c, N // c)
        for residue in range(g):
            if gcd(residue, g) != 1:
                continue
            if c == N:
                p, q = 1, 0
            else:
                p = residue
                while gcd(p, c) != 1:
                    p += g
                q = c
            sigma = scaling_matrix(p, q)
            width = Fraction(cusp_width(c, N))
            beta = beta_of(sigma, N)
            cusps.append(Cusp(
                numerator=p,
                denominator=q,
                level=N,
                sigma=sigma,
                width=width,
                beta_const=beta,
                eps=width / beta,
            ))
    infinity = [cu for cu in cusps if cu.is_infinity]
    rest = sorted((cu for cu in cusps if not cu.is_infinity), key=lambda cu: (cu.denominator, cu.numerator))
    return tuple(infinity + rest)


def cusp_reps(N: int) -> List[Cusp]:
    """One cusp per Gamma_0(N)-class: infinity first, then by increasing denominator."""
    if N < 1:
        raise InvalidInputError(f"level must be positive, got {N}")
    cusps = list(_cusp_reps(N))
    logger.debug(f"level {N}: {len(cusps)} cusps")
    return cusps


def locate_cusp(g: UniMat, N: int) -> Tuple[Cusp, int]:
    """The representative cusp of g(infinity) and k with g = gamma sigma T^k, gamma in Gamma_0(N).

    Then f(g z) = f(sigma (z + k)) for every function f on Gamma_0(N).
    """
    g_inv = g.inverse()
    for cusp in _cusp_reps(N):
        width = int(cusp.width)
        for k in range(width):
            gamma = cusp.sigma @ UniMat.translation(k) @ g_inv
            if gamma.in_gamma0(N):
                return cusp, k
    raise RuntimeError(f"no cusp of level {N} matches {g.entries}")


def stabilizer_generator(cusp: Cusp) -> UniMat:
    """sigma (1, width; 0, 1) sigma^-1, the generator of the stabilizer in Gamma_0(N)."""
    return cusp.sigma @ UniMat.translation(int(cusp.width)) @ cusp.sigma.inverse()
