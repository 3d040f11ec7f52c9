"""
Positive definite binary quadratic forms and their Gamma_0(N)-classes.

Forms carry the right action Q.g(x, y) = Q(alpha x + beta y, gamma x + delta y);
the CM point of Q.g is g^-1 applied to the CM point of Q.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import gcd
from typing import List, Tuple

from sympy import factorint
from sympy.core.intfunc import igcdex

from .arithmetic import sqrt_classes_mod
from .errors import InvalidInputError
from .models import ClassRep, QForm, UniMat

logger = logging.getLogger(__name__)

_IDENTITY = UniMat.identity()


def act(Q: QForm, g: UniMat) -> QForm:
    a, b, c = Q.coeffs
    al, be, ga, de = g.entries
    return QForm(
        a * al * al + b * al * ga + c * ga * ga,
        2 * a * al * be + b * (al * de + be * ga) + 2 * c * ga * de,
        a * be * be + b * be * de + c * de * de,
    )


def reduce(Q: QForm) -> Tuple[QForm, UniMat]:
    """Gauss reduction: returns (Qr, g) with act(Q, g) == Qr and Qr reduced."""
    if not Q.is_positive_definite():
        raise InvalidInputError(f"{Q} is not positive definite")
    a, b, c = Q.coeffs
    # g is tracked as the product of the steps, multiplied on the right
    ga, gb, gc, gd = 1, 0, 0, 1
    while True:
        k = (a - b) // (2 * a)
        if k:
            c = a * k * k + b * k + c
            b = b + 2 * a * k
            gb, gd = ga * k + gb, gc * k + gd
        if a > c:
            a, b, c = c, -b, a
            ga, gb, gc, gd = gb, -ga, gd, -gc
            continue
        break
    if a == c and b < 0:
        a, b, c = c, -b, a
        ga, gb, gc, gd = gb, -ga, gd, -gc
    return QForm(a, b, c), UniMat(ga, gb, gc, gd)


def is_reduced(Q: QForm) -> bool:
    a, b, c = Q.coeffs
    if not (abs(b) <= a <= c):
        return False
    if (abs(b) == a or a == c) and b < 0:
        return False
    return True


def _check_discriminant(D: int) -> None:
    if D <= 0 or D % 4 not in (0, 3):
        raise InvalidInputError(f"-{D} is not a discriminant (need D > 0 and -D = 0, 1 mod 4)")


@lru_cache(maxsize=256)
def _sl2_class_reps(D: int) -> Tuple[QForm, ...]:
    forms = []
    a = 1
    while 3 * a * a <= D:
        for b in range(-a + 1, a + 1):
            if (b - D) % 2:
                continue
            num = b * b + D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            forms.append(QForm(a, b, c))
        a += 1
    return tuple(sorted(forms, key=lambda q: q.coeffs))


def sl2_class_reps(D: int) -> List[QForm]:
    """One reduced form per SL_2(Z)-class of discriminant -D, imprimitive ones included."""
    _check_discriminant(D)
    return list(_sl2_class_reps(D))


def _sign_normalized(matrices) -> List[UniMat]:
    seen = {}
    for g in matrices:
        n = g.normalized()
        seen[n.entries] = n
    return [seen[k] for k in sorted(seen)]


@lru_cache(maxsize=4096)
def _reduced_automorphisms(Q: QForm) -> Tuple[UniMat, ...]:
    found = []
    for al, be, ga, de in product((-1, 0, 1), repeat=4):
        if al * de - be * ga != 1:
            continue
        g = UniMat(al, be, ga, de)
        if act(Q, g) == Q:
            found.append(g)
    autos = _sign_normalized(found)
    autos.sort(key=lambda g: g != _IDENTITY)
    return tuple(autos)


def automorphisms(Q: QForm) -> List[UniMat]:
    """The PSL_2(Z)-stabilizer of Q, identity first."""
    Qr, g = reduce(Q)
    if Qr == Q and g == _IDENTITY:
        return list(_reduced_automorphisms(Q))
    g_inv = g.inverse()
    conjugated = [(g @ h @ g_inv).normalized() for h in _reduced_automorphisms(Qr)]
    conjugated.sort(key=lambda m: m != _IDENTITY)
    return conjugated


def transporter(Q1: QForm, Q2: QForm) -> List[UniMat]:
    """All g (mod +-1) with act(Q1, g) == Q2."""
    if Q1.disc != Q2.disc:
        return []
    r1, g1 = reduce(Q1)
    r2, g2 = reduce(Q2)
    if r1 != r2:
        return []
    g2_inv = g2.inverse()
    return _sign_normalized(g1 @ h @ g2_inv for h in _reduced_automorphisms(r1))


def gamma0_index(N: int) -> int:
    index = N
    for p in factorint(N):
        index = index * (p + 1) // p
    return index


def _lift_to_sl2(c: int, d: int, N: int) -> UniMat:
    """A matrix in SL_2(Z) whose bottom row is congruent to (c, d) mod N."""
    if c == 0:
        c = N
    while gcd(c, d) != 1:
        d += N
    x, y, _ = igcdex(d, c)
    return UniMat(int(x), int(-y), c, d)


@lru_cache(maxsize=64)
def _gamma0_coset_reps(N: int) -> Tuple[UniMat, ...]:
    if N == 1:
        return (_IDENTITY,)
    units = [u for u in range(1, N) if gcd(u, N) == 1]
    points = set()
    for c in range(N):
        for d in range(N):
            if gcd(gcd(c, d), N) != 1:
                continue
            points.add(min(((u * c) % N, (u * d) % N) for u in units))
    reps = []
    for c, d in sorted(points):
        if c == 0:
            reps.append(_IDENTITY)
        else:
            reps.append(_lift_to_sl2(c, d, N))
    return tuple(reps)


def gamma0_coset_reps(N: int) -> List[UniMat]:
    """One representative per right coset Gamma_0(N) g of SL_2(Z)."""
    if N < 1:
        raise InvalidInputError(f"level must be positive, got {N}")
    reps = list(_gamma0_coset_reps(N))
    if len(reps) != gamma0_index(N):
        raise RuntimeError(f"found {len(reps)} cosets for level {N}, expected {gamma0_index(N)}")
    return reps


def gamma0_transporter(Q1: QForm, Q2: QForm, N: int) -> List[UniMat]:
    return [g for g in transporter(Q1, Q2) if g.in_gamma0(N)]


@lru_cache(maxsize=1024)
def _gamma0_class_reps(D: int, N: int) -> Tuple[ClassRep, ...]:
    cosets = [g.inverse() for g in _gamma0_coset_reps(N)]
    reps = []
    for Q in _sl2_class_reps(D):
        candidates = sorted({act(Q, g) for g in cosets if act(Q, g).a % N == 0}, key=lambda q: q.coeffs)
        orbits: List[List[QForm]] = []
        for cand in candidates:
            for orbit in orbits:
                if gamma0_transporter(orbit[0], cand, N):
                    orbit.append(cand)
                    break
            else:
                orbits.append([cand])
        for orbit in orbits:
            form = min(orbit, key=lambda q: q.coeffs)
            stab = len(gamma0_transporter(form, form, N))
            reps.append(ClassRep(form=form, stab_order=stab))
    return tuple(sorted(reps, key=lambda rep: rep.form.coeffs))


def gamma0_class_reps(D: int, N: int) -> List[ClassRep]:
    """One representative per Gamma_0(N)-orbit on forms of discriminant -D with N | a."""
    _check_discriminant(D)
    if N < 1:
        raise InvalidInputError(f"level must be positive, got {N}")
    if not sqrt_classes_mod(-D, 4 * N):
        logger.warning(f"-{D} is not a square mod {4 * N}: no forms with {N} | a")
        return []
    reps = list(_gamma0_class_reps(D, N))
    logger.debug(f"D={D} N={N}: {len(reps)} classes")
    return reps


def hurwitz_count(D: int, N: int) -> Fraction:
    return sum((Fraction(1, rep.stab_order) for rep in gamma0_class_reps(D, N)), Fraction(0))

