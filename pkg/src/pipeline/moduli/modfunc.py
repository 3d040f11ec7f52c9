"""
Weakly holomorphic modular functions given as expressions in eta(dz) and j(dz).

Point evaluation reduces z to the standard fundamental domain with exact
integer bookkeeping and applies Dedekind's transformation law for eta.
Expansions at a matrix sigma transform every atom through sigma with the same
multiplier system and are carried out in u = e(z / 24L), L the level.
"""

import json
import logging
import math
from fractions import Fraction
from functools import lru_cache
from math import gcd
from pathlib import Path
from typing import Any, Dict, NamedTuple, Optional, Tuple

from flint import acb, arb, ctx
from pydantic import BaseModel, ConfigDict, ValidationError
from sympy import divisor_sigma
from sympy.core.intfunc import igcdex

from .arithmetic import root_of_unity, to_acb, with_error, working_precision
from .cusps import cusp_reps
from .errors import InvalidInputError, UnsupportedExpressionError
from .models import (
    ConstNode,
    Cusp,
    EtaNode,
    JNode,
    ModularFunction,
    PowNode,
    Precision,
    ProdNode,
    SumNode,
    UniMat,
)
from .qseries import QSeries, j_series

logger = logging.getLogger(__name__)

MAX_REDUCTION_STEPS = 10_000
_LN2 = math.log(2)


# Dedekind's eta multiplier


def dedekind_sum(h: int, k: int) -> Fraction:
    """s(h, k) for k > 0 and gcd(h, k) = 1, by the reciprocity law."""
    if k <= 0:
        raise InvalidInputError(f"Dedekind sum needs k > 0, got {k}")
    h %= k
    if k == 1 or h == 0:
        return Fraction(0)
    return Fraction(-1, 4) + Fraction(h * h + k * k + 1, 12 * h * k) - dedekind_sum(k, h)


def eta_multiplier_phase(g: UniMat) -> Fraction:
    """phase with eta(g z) = e(phase) sqrt(-i(cz + d)) eta(z), for c > 0."""
    a, _, c, d = g.entries
    if c <= 0:
        raise InvalidInputError(f"multiplier phase needs c > 0, got {g.entries}")
    return Fraction(a + d, 24 * c) - dedekind_sum(d, c) / 2


def _chi12(j: int) -> int:
    return 1 if j % 12 in (1, 11) else -1


def _pentagonal_indices(bound: int):
    """j >= 1 prime to 6 with j^2 below the bound."""
    j = 1
    while j * j < bound:
        if j % 2 and j % 3:
            yield j
        j += 1


# Point evaluation


def reduce_to_fundamental_domain(z: acb) -> Tuple[acb, UniMat]:
    """(w, g) with w = g z in the standard fundamental domain and g in SL_2(Z).

    Decisions are made on float midpoints; w itself is recomputed from z and
    the exact matrix, so the ball stays certified.
    """
    if not z.imag > 0:
        raise InvalidInputError(f"{z} is not in the upper half plane")
    z0 = complex(float(z.real), float(z.imag))
    a, b, c, d = 1, 0, 0, 1
    for _ in range(MAX_REDUCTION_STEPS):
        w = (a * z0 + b) / (c * z0 + d)
        k = math.floor(w.real + 0.5)
        if k:
            a, b = a - k * c, b - k * d
            w -= k
        if abs(w) < 1 - 1e-12:
            a, b, c, d = -c, -d, a, b
            continue
        break
    else:
        raise InvalidInputError(f"no fundamental domain point for {z} within {MAX_REDUCTION_STEPS} steps")
    g = UniMat(a, b, c, d)
    return g.apply(z), g


def _eta_series_value(w: acb, bits: int) -> acb:
    """sum chi12(j) e(j^2 w / 24) with a certified tail, for Im w bounded below."""
    y = float(w.imag)
    rate = math.pi * y / (12 * _LN2)
    K = 1
    while (K + 1) ** 2 * rate <= bits + 10:
        K += 1
    q24 = (2 * acb.pi() * acb(0, 1) * w / 24).exp()
    total = acb(0)
    for j in _pentagonal_indices(K * K + 1):
        total += _chi12(j) * q24 ** (j * j)
    x = (-arb.pi() * w.imag / 12).exp().abs_upper()
    tail = x ** ((K + 1) ** 2) / (1 - x)
    return with_error(total, tail)


def eta(z: acb) -> acb:
    """Dedekind eta at the current working precision."""
    w, g = reduce_to_fundamental_domain(z)
    bits = ctx.prec
    value = _eta_series_value(w, bits)
    g = g.normalized()
    a, b, c, d = g.entries
    if c == 0:
        # g = T^b
        return value * root_of_unity(Fraction(-b, 24))
    factor = (acb(0, -1) * (c * z + d)).sqrt()
    return value / (root_of_unity(eta_multiplier_phase(g)) * factor)


@lru_cache(maxsize=8)
def _sigma3_table(length: int) -> Tuple[int, ...]:
    return tuple(int(divisor_sigma(n, 3)) if n else 0 for n in range(length))


def _e4_reduced(w: acb, bits: int) -> acb:
    y = float(w.imag)
    rate = 2 * math.pi * y / _LN2
    E = 1
    while math.log2(291) + 3 * math.log2(E + 1) - (E + 1) * rate > -(bits + 10):
        E += 1
    sigma3 = _sigma3_table(E + 1)
    q = (2 * acb.pi() * acb(0, 1) * w).exp()
    s = acb(0)
    for n in range(E, 0, -1):
        s = (s + sigma3[n]) * q
    rho = (-2 * arb.pi() * w.imag).exp().abs_upper()
    ratio = arb(E + 2) ** 3 / arb(E + 1) ** 3 * rho
    tail = 291 * arb(E + 1) ** 3 * rho ** (E + 1) / (1 - ratio)
    return with_error(1 + 240 * s, tail)


def j_invariant(z: acb) -> acb:
    """Klein's j at the current working precision."""
    w, _ = reduce_to_fundamental_domain(z)
    bits = ctx.prec
    e4 = _e4_reduced(w, bits)
    discriminant = _eta_series_value(w, bits) ** 24
    return e4 ** 3 / discriminant


def _evaluate_node(node, z: acb, memo: Dict[Tuple[str, int], acb]) -> acb:
    if isinstance(node, ConstNode):
        return to_acb(node.value)
    if isinstance(node, EtaNode):
        key = ("eta", node.scale)
        if key not in memo:
            memo[key] = eta(node.scale * z)
        return memo[key]
    if isinstance(node, JNode):
        key = ("j", node.scale)
        if key not in memo:
            memo[key] = j_invariant(node.scale * z)
        return memo[key]
    if isinstance(node, SumNode):
        total = acb(0)
        for term in node.terms:
            total += _evaluate_node(term, z, memo)
        return total
    if isinstance(node, ProdNode):
        total = acb(1)
        for factor in node.factors:
            total *= _evaluate_node(factor, z, memo)
        return total
    if isinstance(node, PowNode):
        base = _evaluate_node(node.base, z, memo)
        if node.exponent < 0:
            return 1 / base ** (-node.exponent)
        return base ** node.exponent
    raise UnsupportedExpressionError(f"cannot evaluate node {node!r}")


def evaluate(f: ModularFunction, z: acb, precision: Optional[Precision] = None) -> acb:
    """Certified value f(z) for Im z > 0."""
    precision = precision or Precision()
    with working_precision(precision.working_bits):
        z = acb(z)
        return _evaluate_node(f.expr, z, {})


# Expansions at a matrix


class CuspExpansion(BaseModel):
    """Coefficients a(n) of f(sigma z) = sum a(n) e(n z), n in (1/width) Z."""
    cusp: Optional[Cusp] = None
    coeffs: Dict[Fraction, Any] = {}
    prec: Fraction = Fraction(1)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def floor(self) -> Optional[Fraction]:
        return min(self.coeffs) if self.coeffs else None

    def coefficient(self, n) -> Any:
        n = Fraction(n)
        if n >= self.prec:
            where = f" at cusp {self.cusp.label}" if self.cusp else ""
            raise UnsupportedExpressionError(
                f"coefficient a({n}){where} is beyond the known range (prec {self.prec})"
            )
        return self.coeffs.get(n, 0)

    def principal_part(self) -> Dict[Fraction, Any]:
        return {n: c for n, c in sorted(self.coeffs.items()) if n < 0}


def _normalize_sigma(sigma: UniMat) -> UniMat:
    a, _, c, _ = sigma.entries
    if c < 0 or (c == 0 and a < 0):
        return -sigma
    return sigma


class _AtomGeometry(NamedTuple):
    """d sigma = gamma' (g, x; 0, d/g) with gamma' in SL_2(Z)."""
    g: int
    x: int
    eps_phase: Fraction = Fraction(0)
    transformed: bool = False


def _atom_geometry(d: int, sigma: UniMat) -> _AtomGeometry:
    alpha, beta, gamma, delta = sigma.entries
    if gamma == 0:
        return _AtomGeometry(g=d, x=d * beta)
    g = gcd(d * alpha, gamma)
    A, C = d * alpha // g, gamma // g
    x1, y1, _ = igcdex(A, C)
    v, u = int(x1), int(-y1)
    x = v * d * beta - u * delta
    phase = eta_multiplier_phase(UniMat(A, u, C, v))
    return _AtomGeometry(g=g, x=x, eps_phase=phase, transformed=True)


class _Expander:
    """Expands expression nodes at sigma as (weight in halves, series in u = e(z/24L))."""

    def __init__(self, sigma: UniMat, L: int):
        self.sigma = _normalize_sigma(sigma)
        self.L = L
        self.exact = self.sigma.entries in ((1, 0, 0, 1),)
        self._geometry: Dict[int, _AtomGeometry] = {}

    def coerce(self, c):
        return c if self.exact else to_acb(c)

    def geometry(self, d: int) -> _AtomGeometry:
        if d not in self._geometry:
            self._geometry[d] = _atom_geometry(d, self.sigma)
        return self._geometry[d]

    def valuation(self, node) -> int:
        """Lower bound for the u-valuation of the node."""
        if isinstance(node, ConstNode):
            return 0
        if isinstance(node, EtaNode):
            g = self.geometry(node.scale).g
            return g * g * self.L // node.scale
        if isinstance(node, JNode):
            g = self.geometry(node.scale).g
            return -24 * self.L * g * g // node.scale
        if isinstance(node, SumNode):
            return min(self.valuation(t) for t in node.terms)
        if isinstance(node, ProdNode):
            return sum(self.valuation(f) for f in node.factors)
        if isinstance(node, PowNode):
            return node.exponent * self.valuation(node.base)
        raise UnsupportedExpressionError(f"cannot expand node {node!r}")

    def _eta(self, d: int, prec: int) -> Tuple[int, QSeries]:
        geo = self.geometry(d)
        unit = geo.g * geo.g * self.L // d
        multiplier = 1
        if geo.transformed:
            multiplier = to_acb(Fraction(geo.g, d)).sqrt()
        coeffs = {}
        for j in _pentagonal_indices(prec // unit + 1):
            exponent = j * j * unit
            if exponent >= prec:
                break
            phase = geo.eps_phase + Fraction(j * j * geo.g * geo.x, 24 * d)
            coeffs[exponent] = self.coerce(_chi12(j) * root_of_unity(phase) * multiplier)
        return 1, QSeries(coeffs, prec)

    def _j(self, d: int, prec: int) -> Tuple[int, QSeries]:
        geo = self.geometry(d)
        unit = 24 * self.L * geo.g * geo.g // d
        count = max(prec // unit + 1, 1)
        base = j_series(count)
        coeffs = {}
        for n, c in base.items():
            exponent = n * unit
            if exponent >= prec:
                break
            coeffs[exponent] = self.coerce(c * root_of_unity(Fraction(n * geo.g * geo.x, d)))
        return 0, QSeries(coeffs, prec)

    def expand(self, node, prec: int) -> Tuple[int, QSeries]:
        if isinstance(node, ConstNode):
            return 0, QSeries({0: self.coerce(node.value)}, prec)
        if isinstance(node, EtaNode):
            return self._eta(node.scale, prec)
        if isinstance(node, JNode):
            return self._j(node.scale, prec)
        if isinstance(node, SumNode):
            parts = [self.expand(t, prec) for t in node.terms]
            weights = {w for w, _ in parts}
            if len(weights) > 1 and self.sigma.c != 0:
                raise UnsupportedExpressionError(f"sum of terms with different weights {sorted(weights)}")
            total = parts[0][1]
            for _, s in parts[1:]:
                total = total + s
            return parts[0][0], total
        if isinstance(node, ProdNode):
            return self._product(node, prec)
        if isinstance(node, PowNode):
            return self._pow(node, prec)
        raise UnsupportedExpressionError(f"cannot expand node {node!r}")

    def _product(self, node: ProdNode, prec: int) -> Tuple[int, QSeries]:
        # each factor is expanded through its own leading term, with the
        # rest of the budget set by the valuations of the other factors
        vals = [self.valuation(f) for f in node.factors]
        for _ in range(4):
            total_val = sum(vals)
            parts = [self.expand(f, max(prec - (total_val - v), v + 1))
                     for f, v in zip(node.factors, vals)]
            weight, result = 0, None
            for w, s in parts:
                weight += w
                result = s if result is None else result * s
            if result.prec >= prec:
                return weight, result.truncate(prec)
            vals = [s.valuation() for _, s in parts]
        raise UnsupportedExpressionError(f"could not fix the precision of a product of {len(vals)} factors")

    def _pow(self, node: PowNode, prec: int) -> Tuple[int, QSeries]:
        k = node.exponent
        v = self.valuation(node.base)
        if k == 0:
            return 0, QSeries({0: self.coerce(1)}, prec)
        if k > 0:
            need = max(prec - (k - 1) * v, v + 1)
            for _ in range(4):
                w, s = self.expand(node.base, need)
                power = s ** k
                if power.prec >= prec:
                    return k * w, power.truncate(prec)
                actual = s.valuation()
                need = max(prec - (k - 1) * actual, actual + 1)
            raise UnsupportedExpressionError("could not fix the precision of a positive power")
        m = -k
        need = max(prec + (m + 1) * v, v + 1)
        for _ in range(4):
            w, s = self.expand(node.base, need)
            if s.is_zero():
                raise UnsupportedExpressionError(f"base of negative power vanishes to u^{need}")
            actual = s.valuation()
            if need >= prec + (m + 1) * actual:
                return k * w, (s.invert() ** m).truncate(prec)
            need = max(prec + (m + 1) * actual, actual + 1)
        raise UnsupportedExpressionError("could not fix the precision of a negative power")


def _u_series_at(f: ModularFunction, sigma: UniMat, prec_u: int) -> Tuple[QSeries, bool]:
    expander = _Expander(sigma, f.level)
    weight, series = expander.expand(f.expr, prec_u)
    if weight and expander.sigma.c != 0:
        raise UnsupportedExpressionError(f"expression has weight {Fraction(weight, 2)}, not 0")
    return series, expander.exact


def expansion_at_matrix(f: ModularFunction, sigma: UniMat, through: int = 0,
                        precision: Optional[Precision] = None) -> CuspExpansion:
    """Coefficients of f(sigma z) = sum a(n) e(n z) for every n <= through."""
    precision = precision or Precision()
    scale = 24 * f.level
    with working_precision(precision.working_bits):
        series, _ = _u_series_at(f, sigma, scale * through + 1)
    coeffs = {Fraction(e, scale): c for e, c in series.items()}
    return CuspExpansion(coeffs=coeffs, prec=Fraction(series.prec, scale))


def q_expansion(f: ModularFunction, terms: int) -> QSeries:
    """Exact Laurent expansion at infinity through q^terms."""
    if terms < 0:
        raise InvalidInputError(f"terms must be non-negative, got {terms}")
    scale = 24 * f.level
    series, _ = _u_series_at(f, UniMat.identity(), scale * (terms + 1))
    coeffs = {}
    for e, c in series.items():
        if e % scale:
            raise UnsupportedExpressionError(f"q^{Fraction(e, scale)} is not an integral power of q")
        coeffs[e // scale] = c
    prec = -(-series.prec // scale)
    return QSeries(coeffs, prec).truncate(terms + 1)


def _manual_principal_part(f: ModularFunction, cusp: Cusp) -> Optional[CuspExpansion]:
    if not f.principal_parts or cusp.label not in f.principal_parts:
        return None
    coeffs = {Fraction(n): c for n, c in f.principal_parts[cusp.label] if n <= 0}
    return CuspExpansion(cusp=cusp, coeffs=coeffs, prec=1 / cusp.width)


def principal_part_at(f: ModularFunction, cusp: Cusp, N: Optional[int] = None,
                      precision: Optional[Precision] = None) -> CuspExpansion:
    """Terms n <= 0 of the expansion of f at the cusp, in n in (1/width) Z."""
    N = N or cusp.level
    if N % f.level:
        raise InvalidInputError(f"level {N} is not a multiple of the function level {f.level}")
    manual = _manual_principal_part(f, cusp)
    if manual is not None:
        return manual
    expansion = expansion_at_matrix(f, cusp.sigma, 0, precision)
    for n in expansion.coeffs:
        if (n * cusp.width).denominator != 1:
            raise UnsupportedExpressionError(
                f"exponent {n} at cusp {cusp.label} is not in (1/{cusp.width})Z: "
                f"expression is not invariant under Gamma_0({N})"
            )
    return CuspExpansion(cusp=cusp, coeffs=dict(expansion.coeffs), prec=expansion.prec)


def is_certified_zero(value, tolerance: float = 2.0 ** -40) -> bool:
    """Exact zero, or a ball containing zero with radius below the tolerance."""
    if isinstance(value, (int, Fraction)):
        return value == 0
    value = acb(value)
    return bool(value.contains(0)) and float(value.real.rad()) < tolerance and float(value.imag.rad()) < tolerance


class ConstantTerms(BaseModel):
    values: Dict[str, Any]
    all_vanish: bool

    model_config = ConfigDict(arbitrary_types_allowed=True)


def constant_terms(f: ModularFunction, N: Optional[int] = None,
                   precision: Optional[Precision] = None) -> ConstantTerms:
    """a_l(0) at every cusp of Gamma_0(N)."""
    N = N or f.level
    values = {}
    for cusp in cusp_reps(N):
        values[cusp.label] = principal_part_at(f, cusp, N, precision).coefficient(0)
    all_vanish = all(is_certified_zero(v) for v in values.values())
    logger.debug(f"constant terms of {f.name or f.f_id} at level {N}: all vanish = {all_vanish}")
    return ConstantTerms(values=values, all_vanish=all_vanish)


# Builtins and loading


def _J_expr() -> SumNode:
    return SumNode(terms=(JNode(scale=1), ConstNode(value=Fraction(-744))))


def _hauptmodul_2() -> SumNode:
    quotient = ProdNode(factors=(PowNode(base=EtaNode(scale=1), exponent=24),
                                 PowNode(base=EtaNode(scale=2), exponent=-24)))
    inverse = ProdNode(factors=(ConstNode(value=Fraction(4096)),
                                PowNode(base=EtaNode(scale=2), exponent=24),
                                PowNode(base=EtaNode(scale=1), exponent=-24)))
    return SumNode(terms=(quotient, inverse, ConstNode(value=Fraction(24))))


BUILTINS = {
    "J": lambda: ModularFunction(level=1, expr=_J_expr(), name="builtin:J"),
    "j": lambda: ModularFunction(level=1, expr=JNode(scale=1), name="builtin:j"),
    "J2": lambda: ModularFunction(
        level=1,
        expr=SumNode(terms=(PowNode(base=_J_expr(), exponent=2), ConstNode(value=Fraction(-393768)))),
        name="builtin:J2",
    ),
    "T2": lambda: ModularFunction(level=2, expr=_hauptmodul_2(), name="builtin:T2"),
}


def builtin(name: str) -> ModularFunction:
    key = name.split(":", 1)[1] if name.startswith("builtin:") else name
    if key not in BUILTINS:
        raise InvalidInputError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}")
    return BUILTINS[key]()


def load_function(text: str, level: Optional[int] = None) -> ModularFunction:
    """A builtin alias, a path to a JSON document, or inline JSON."""
    text = text.strip()
    if text.startswith("builtin:"):
        f = builtin(text)
    else:
        try:
            path = Path(text)
            document = json.loads(path.read_text()) if path.is_file() else json.loads(text)
            f = ModularFunction.model_validate(document)
        except (OSError, json.JSONDecodeError, ValidationError) as e:
            raise InvalidInputError(f"Failed to load modular function: {e}") from e
    if level is not None and level != f.level:
        f = f.with_level(level)
    return f

