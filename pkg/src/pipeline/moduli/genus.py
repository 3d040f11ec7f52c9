"""
Generalized genus character chi_Delta on forms [Na, b, c] and on lattice vectors.
"""

import logging
from typing import Iterator, List, Optional, Tuple

from sympy import divisors

from .arithmetic import gcd_all, is_square_mod, kronecker
from .errors import CharacterSearchError, InvalidInputError
from .models import GenusCharSpec, LatticeVec, QForm

logger = logging.getLogger(__name__)


def default_budget(spec: GenusCharSpec) -> int:
    return 10 * (abs(spec.delta) + 1)


def _shell(B: int) -> Iterator[Tuple[int, int]]:
    """Integer points with max(|x|, |y|) == B."""
    if B == 0:
        yield (0, 0)
        return
    for x in range(-B, B + 1):
        yield (x, B)
        yield (x, -B)
    for y in range(-B + 1, B):
        yield (B, y)
        yield (-B, y)


def in_support(spec: GenusCharSpec, Q: QForm) -> bool:
    """Delta | disc, disc/Delta a square mod 4N, and gcd(a/N, b, c, Delta) == 1."""
    N, delta = spec.level, spec.delta
    if Q.a % N:
        raise InvalidInputError(f"{Q} does not have {N} | a")
    disc = Q.disc
    if disc % delta:
        return False
    if not is_square_mod(disc // delta, 4 * N):
        return False
    return gcd_all(Q.a // N, Q.b, Q.c, delta) == 1


def representations(spec: GenusCharSpec, Q: QForm, budget: Optional[int] = None) -> Iterator[Tuple[int, int, int]]:
    """Admissible n > 0 prime to Delta represented by some [N1 a', b, N2 c], in search order.

    Yields (n, N1, N2); stops silently once the shell bound passes the budget.
    """
    N, delta = spec.level, spec.delta
    budget = default_budget(spec) if budget is None else budget
    a1 = Q.a // N
    pairs = [(N1, N // N1) for N1 in divisors(N)]
    for B in range(1, budget + 1):
        for x, y in _shell(B):
            for N1, N2 in pairs:
                n = N1 * a1 * x * x + Q.b * x * y + N2 * Q.c * y * y
                if n > 0 and gcd_all(n, delta) == 1:
                    yield n, N1, N2


def chi(spec: GenusCharSpec, Q: QForm, budget: Optional[int] = None) -> int:
    if not in_support(spec, Q):
        return 0
    if spec.is_trivial:
        return 1
    for n, _, _ in representations(spec, Q, budget):
        return kronecker(spec.delta, n)
    raise CharacterSearchError(
        f"no n prime to {spec.delta} represented by {Q} within shell bound "
        f"{default_budget(spec) if budget is None else budget}"
    )


def character_samples(spec: GenusCharSpec, Q: QForm, count: int = 10, budget: Optional[int] = None) -> List[int]:
    """(Delta/n) for the first `count` distinct admissible n; all equal when chi is well defined."""
    seen = {}
    for n, _, _ in representations(spec, Q, budget):
        if n not in seen:
            seen[n] = kronecker(spec.delta, n)
            if len(seen) == count:
                break
    return list(seen.values())


def chi_lattice(spec: GenusCharSpec, X: LatticeVec, budget: Optional[int] = None) -> int:
    """chi of the form [Na, b, c] attached to X; zero on the zero vector."""
    if X.is_zero():
        return 0
    N = spec.level
    return chi(spec, QForm(N * X.a, X.b, X.c), budget)
