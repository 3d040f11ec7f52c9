"""
Truncated Laurent series in q.

A QSeries is known modulo O(q^prec). Coefficients are ints/Fractions for exact
series, or flint balls for expansions at cusps whose coefficients live in a
cyclotomic field.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from math import isqrt, lcm
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Tuple

from flint import acb, arb
from sympy import divisor_sigma

from .arithmetic import kronecker
from .errors import InvalidInputError
from .models import SeriesDocument

logger = logging.getLogger(__name__)


def _is_zero(x) -> bool:
    return x == 0


def _reciprocal(x):
    if isinstance(x, int):
        return x if x in (1, -1) else Fraction(1, x)
    if isinstance(x, (acb, arb)):
        if x.contains(0):
            raise InvalidInputError(f"leading coefficient {x} is not certified nonzero")
        return 1 / x
    return 1 / x


class QSeries:
    """sum_{n < prec} coeffs[n] q^n + O(q^prec)."""

    __slots__ = ("coeffs", "prec")

    def __init__(self, coeffs: Optional[Mapping[int, object]] = None, prec: int = 0):
        self.prec = prec
        self.coeffs: Dict[int, object] = {
            n: c for n, c in (coeffs or {}).items() if n < prec and not _is_zero(c)
        }

    @classmethod
    def from_dense(cls, values: List[object], prec: Optional[int] = None, start: int = 0) -> "QSeries":
        prec = start + len(values) if prec is None else prec
        return cls({start + i: v for i, v in enumerate(values)}, prec)

    @classmethod
    def monomial(cls, n: int, prec: int, coefficient=1) -> "QSeries":
        return cls({n: coefficient}, prec)

    def __getitem__(self, n: int):
        if n >= self.prec:
            raise IndexError(f"coefficient of q^{n} is not known (prec {self.prec})")
        return self.coeffs.get(n, 0)

    def items(self) -> Iterator[Tuple[int, object]]:
        return iter(sorted(self.coeffs.items()))

    def valuation(self) -> int:
        """Lowest exponent with a nonzero coefficient, or prec for O(q^prec)."""
        return min(self.coeffs) if self.coeffs else self.prec

    def is_zero(self) -> bool:
        return not self.coeffs

    def truncate(self, prec: int) -> "QSeries":
        return QSeries(self.coeffs, min(prec, self.prec))

    def map(self, fn: Callable[[object], object]) -> "QSeries":
        return QSeries({n: fn(c) for n, c in self.coeffs.items()}, self.prec)

    def shift(self, k: int) -> "QSeries":
        """Multiply by q^k."""
        return QSeries({n + k: c for n, c in self.coeffs.items()}, self.prec + k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QSeries):
            return NotImplemented
        return self.prec == other.prec and self.coeffs == other.coeffs

    def __repr__(self) -> str:
        terms = " + ".join(f"({c})q^{n}" for n, c in self.items())
        return f"QSeries({terms or '0'} + O(q^{self.prec}))"

    def __neg__(self) -> "QSeries":
        return self.map(lambda c: -c)

    def __add__(self, other) -> "QSeries":
        if not isinstance(other, QSeries):
            other = QSeries({0: other}, self.prec)
        prec = min(self.prec, other.prec)
        coeffs = dict(self.coeffs)
        for n, c in other.coeffs.items():
            coeffs[n] = coeffs[n] + c if n in coeffs else c
        return QSeries(coeffs, prec)

    __radd__ = __add__

    def __sub__(self, other) -> "QSeries":
        if not isinstance(other, QSeries):
            other = QSeries({0: other}, self.prec)
        return self + (-other)

    def __rsub__(self, other) -> "QSeries":
        return (-self) + other

    def __mul__(self, other) -> "QSeries":
        if not isinstance(other, QSeries):
            return self.map(lambda c: c * other)
        va, vb = self.valuation(), other.valuation()
        prec = min(va + other.prec, vb + self.prec)
        coeffs: Dict[int, object] = {}
        for n, c in self.coeffs.items():
            for m, d in other.coeffs.items():
                k = n + m
                if k >= prec:
                    continue
                coeffs[k] = coeffs[k] + c * d if k in coeffs else c * d
        return QSeries(coeffs, prec)

    def __rmul__(self, other) -> "QSeries":
        return self.map(lambda c: other * c)

    def invert(self) -> "QSeries":
        """Multiplicative inverse; the lowest coefficient must be nonzero."""
        if not self.coeffs:
            raise InvalidInputError("cannot invert a series with no known nonzero coefficient")
        v = self.valuation()
        inv_lead = _reciprocal(self.coeffs[v])
        length = self.prec - v
        tail = sorted((n - v, c) for n, c in self.coeffs.items() if n > v)
        b = [inv_lead]
        for k in range(1, length):
            total = 0
            for i, c in tail:
                if i > k:
                    break
                if not _is_zero(b[k - i]):
                    total = total + c * b[k - i]
            b.append(-total * inv_lead if not _is_zero(total) else 0)
        return QSeries({i - v: c for i, c in enumerate(b)}, self.prec - 2 * v)

    def __pow__(self, k: int) -> "QSeries":
        if k < 0:
            return self.invert() ** (-k)
        result = QSeries({0: 1}, self.prec - self.valuation()) if k == 0 else None
        base = self
        while k:
            if k & 1:
                result = base if result is None else result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def is_integral(self) -> bool:
        return all(isinstance(c, int) or (isinstance(c, Fraction) and c.denominator == 1)
                   for c in self.coeffs.values())

    def to_document(self) -> Dict[str, object]:
        for c in self.coeffs.values():
            if not isinstance(c, (int, Fraction)):
                raise InvalidInputError("only series with rational coefficients serialize to JSON")
        return SeriesDocument(prec=self.prec, terms=[(n, Fraction(c)) for n, c in self.items()]).model_dump(mode="json")

    @classmethod
    def from_document(cls, document: Mapping[str, object]) -> "QSeries":
        parsed = SeriesDocument.model_validate(document)
        return cls({n: _normalize(c) for n, c in parsed.terms}, parsed.prec)


def _normalize(c: Fraction):
    return c.numerator if c.denominator == 1 else c


def U(m: int, s: QSeries) -> QSeries:
    """a(n) -> a(mn)."""
    if m < 1:
        raise InvalidInputError(f"U needs a positive index, got {m}")
    return QSeries({n // m: c for n, c in s.coeffs.items() if n % m == 0}, s.prec // m)


def V(m: int, s: QSeries) -> QSeries:
    """q -> q^m."""
    if m < 1:
        raise InvalidInputError(f"V needs a positive index, got {m}")
    return QSeries({m * n: c for n, c in s.coeffs.items()}, m * s.prec)


def sieve(t: int, s: QSeries, value: int) -> QSeries:
    """Keep the coefficients a(n) with (n/t) == value."""
    if t < 1 or t % 2 == 0:
        raise InvalidInputError(f"sieve needs an odd positive modulus, got {t}")
    return QSeries({n: c for n, c in s.coeffs.items() if kronecker(n, t) == value}, s.prec)


def sieve_minus(t: int, s: QSeries) -> QSeries:
    if t == 1:
        logger.warning("sieve with t = 1 keeps nothing: (n/1) = 1 for every n")
    return sieve(t, s, -1)


def reduce_mod(s: QSeries, M: int) -> QSeries:
    """Coefficientwise reduction into [0, M)."""
    if M < 1:
        raise InvalidInputError(f"modulus must be positive, got {M}")
    if not s.is_integral():
        raise InvalidInputError("reduce_mod needs integral coefficients")
    return QSeries({n: int(c) % M for n, c in s.coeffs.items()}, s.prec)


def clear_lcm(s: QSeries, up_to: Optional[int] = None) -> int:
    """lcm of the denominators of the coefficients with index <= up_to."""
    result = 1
    for n, c in s.coeffs.items():
        if up_to is not None and n > up_to:
            continue
        if isinstance(c, Fraction):
            result = lcm(result, c.denominator)
        elif not isinstance(c, int):
            raise InvalidInputError("denominators only make sense for rational coefficients")
    return result


# Standard series


def theta_series(P: int) -> QSeries:
    """1 + 2 sum q^(n^2) + O(q^P)."""
    if P < 1:
        raise InvalidInputError(f"theta series needs P >= 1, got {P}")
    coeffs = {0: 1}
    for n in range(1, isqrt(P - 1) + 1):
        coeffs[n * n] = 2
    return QSeries(coeffs, P)


@lru_cache(maxsize=32)
def _euler_coefficients(P: int) -> Tuple[Tuple[int, int], ...]:
    terms = []
    k = 0
    while True:
        found = False
        for n in ((k, -k) if k else (0,)):
            e = n * (3 * n - 1) // 2
            if e < P:
                terms.append((e, -1 if n % 2 else 1))
                found = True
        if not found:
            break
        k += 1
    return tuple(terms)


def euler_series(P: int) -> QSeries:
    """prod (1 - q^n) = sum (-1)^n q^(n(3n-1)/2) + O(q^P)."""
    return QSeries(dict(_euler_coefficients(P)), P)


def delta_series(P: int) -> QSeries:
    """q prod (1 - q^n)^24 + O(q^P), from the 24th power of Euler's pentagonal series."""
    if P < 2:
        raise InvalidInputError(f"delta series needs P >= 2, got {P}")
    return (euler_series(P - 1) ** 24).shift(1)


def delta_series_by_product(P: int) -> QSeries:
    """Same series, multiplying in one factor (1 - q^n) at a time."""
    if P < 2:
        raise InvalidInputError(f"delta series needs P >= 2, got {P}")
    length = P - 1
    dense = [1] + [0] * (length - 1)
    for n in range(1, length):
        for _ in range(24):
            for i in range(length - 1, n - 1, -1):
                dense[i] -= dense[i - n]
    return QSeries.from_dense(dense, P, start=1).truncate(P)


def e4_series(P: int) -> QSeries:
    """1 + 240 sum sigma_3(n) q^n + O(q^P)."""
    coeffs = {0: 1}
    for n in range(1, P):
        coeffs[n] = 240 * int(divisor_sigma(n, 3))
    return QSeries(coeffs, P)


@lru_cache(maxsize=16)
def j_series(P: int) -> QSeries:
    """j = E4^3 / Delta = q^-1 + 744 + 196884 q + ... + O(q^P)."""
    length = P + 2
    e4 = e4_series(length)
    delta = delta_series(length + 1)
    return ((e4 ** 3) * delta.invert()).truncate(P)


def from_terms(terms: Mapping[int, object], prec: int) -> QSeries:
    return QSeries(dict(terms), prec)
