"""
Twisted traces t_f(chi_Delta; m) of a modular function f on Gamma_0(N).

Positive indices sum f over CM points of discriminant -m, negative squares
pair f with the infinite geodesics of vectors of norm -m^2, and every other
index is zero. Values are returned as the rational c with t = c sqrt(Delta).
"""

import logging
import math
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, List, Optional, Tuple

from flint import acb

from .arithmetic import (
    ball_radius,
    is_rational_square,
    is_square_mod,
    recognize_in_sqrt,
    root_of_unity,
    to_acb,
    working_precision,
)
from .cusps import cusp_reps, locate_cusp, scaling_matrix
from .errors import (
    InvalidInputError,
    PrecisionExhaustedError,
    RecognitionError,
    UnsupportedRegimeError,
)
from .forms import _check_discriminant, gamma0_class_reps, sl2_class_reps
from .genus import chi, chi_lattice
from .models import (
    ClassRep,
    Config,
    GenusCharSpec,
    GeodesicOrbit,
    LatticeVec,
    ModularFunction,
    Precision,
    QForm,
    UniMat,
)
from .modfunc import (
    CuspExpansion,
    builtin,
    constant_terms,
    evaluate,
    principal_part_at,
)
from .qseries import QSeries

logger = logging.getLogger(__name__)

PRINCIPAL_CACHE_SIZE = 32


def form_of(X: LatticeVec, N: int) -> QForm:
    return QForm(N * X.a, X.b, X.c)


def vec_of(Q: QForm, N: int) -> LatticeVec:
    if Q.a % N:
        raise InvalidInputError(f"{Q} does not have {N} | a")
    return LatticeVec(Q.a // N, Q.b, Q.c)


def _check_level(f: ModularFunction, N: int, spec: GenusCharSpec) -> None:
    if N % f.level:
        raise InvalidInputError(f"level {N} is not a multiple of the function level {f.level}")
    if spec.level != N:
        raise InvalidInputError(f"character is defined for level {spec.level}, not {N}")


# Principal parts are shared by every pairing of one function


@lru_cache(maxsize=PRINCIPAL_CACHE_SIZE)
def _principal_parts(document: str, N: int, precision: Precision) -> Dict[str, CuspExpansion]:
    f = ModularFunction.model_validate_json(document)
    return {cusp.label: principal_part_at(f, cusp, N, precision) for cusp in cusp_reps(N)}


def principal_parts(f: ModularFunction, N: int, precision: Optional[Precision] = None) -> Dict[str, CuspExpansion]:
    return _principal_parts(f.model_dump_json(), N, precision or Precision())


def pole_order(f: ModularFunction, N: int) -> Fraction:
    """Largest |n| over the principal parts at all cusps (0 for holomorphic f)."""
    worst = Fraction(0)
    for expansion in principal_parts(f, N).values():
        for n in expansion.principal_part():
            worst = max(worst, -n)
    return worst


# Positive index


def _positive_sum(f: ModularFunction, weighted: List[Tuple[int, ClassRep]], precision: Precision) -> acb:
    with working_precision(precision.working_bits):
        total = acb(0)
        for x, rep in weighted:
            value = evaluate(f, rep.cm_point(), precision)
            total += x * value / rep.stab_order
        return total


def _initial_bits(f: ModularFunction, N: int, D: int, count: int, config: Config) -> int:
    pole = max(pole_order(f, N), Fraction(1))
    magnitude = math.ceil(float(pole) * math.pi * math.sqrt(D) / math.log(2))
    return max(config.bits, 64 + magnitude + math.ceil(math.log2(count + 1)))


def bits_cap_for(start_bits: int, config: Config) -> int:
    """The configured cap, raised to leave two doublings above the estimate."""
    return max(config.bits_cap, 4 * start_bits)


def _recognize_adaptively(compute, delta: int, start_bits: int, config: Config, what: str) -> Tuple[Fraction, float]:
    cap = bits_cap_for(start_bits, config)
    bits = start_bits
    while True:
        precision = config.precision(bits)
        total = compute(precision)
        try:
            with working_precision(precision.working_bits):
                value = recognize_in_sqrt(total, delta, config.max_den)
            err = ball_radius(total)
            if err < config.recognition_tol:
                return value, err
            reason = f"radius {err:.3g}"
        except RecognitionError as e:
            reason = str(e)
        if bits >= cap:
            raise PrecisionExhaustedError(f"{what}: no certified value at {bits} bits ({reason})", bits=bits)
        logger.info(f"{what}: {reason} at {bits} bits, doubling")
        bits = min(2 * bits, cap)


def certified_trace_positive(f: ModularFunction, N: int, spec: GenusCharSpec, D: int,
                             config: Optional[Config] = None) -> Tuple[Fraction, float]:
    """(c, err) with t_f(chi; D) = c sqrt(Delta), err the radius of the summed ball."""
    config = config or Config()
    _check_discriminant(D)
    _check_level(f, N, spec)
    if not is_square_mod(-D, 4 * N):
        raise InvalidInputError(f"-{D} is not a square mod {4 * N}")
    reps = gamma0_class_reps(D, N)
    return _certified_sum(f, N, spec, D, reps, config)


def _certified_sum(f, N, spec, D, reps, config) -> Tuple[Fraction, float]:
    weighted = []
    for rep in reps:
        x = chi(spec, rep.form, config.char_search_budget)
        if x:
            weighted.append((x, rep))
    if not weighted:
        return Fraction(0), 0.0
    start = _initial_bits(f, N, D, len(weighted), config)
    logger.debug(f"D={D} N={N}: {len(weighted)} classes in the character support, starting at {start} bits")
    return _recognize_adaptively(
        lambda precision: _positive_sum(f, weighted, precision), spec.delta, start, config, f"t({D})"
    )


def trace_positive(f: ModularFunction, N: int, spec: GenusCharSpec, D: int,
                   config: Optional[Config] = None) -> Fraction:
    return certified_trace_positive(f, N, spec, D, config)[0]


def trace_trivial(m) -> Fraction:
    """Zero for m = 0 and for negative m that are not minus a rational square."""
    m = Fraction(m)
    if m == 0 or (m < 0 and not is_rational_square(-m)):
        return Fraction(0)
    raise InvalidInputError(f"index {m} is not in the trivial regime")


# Negative squares


def geodesic_orbits(N: int, m) -> List[GeodesicOrbit]:
    """Gamma_0(N)-orbits of lattice vectors X with q(X) = -m^2, one per (cusp, r)."""
    m = Fraction(m)
    if m <= 0:
        raise InvalidInputError(f"m must be positive, got {m}")
    if m.denominator != 1:
        return []
    m = int(m)
    orbits = []
    for cusp in cusp_reps(N):
        p, q, s, t = cusp.sigma.entries
        for r in range(2 * m * int(cusp.width)):
            # sigma (m, r; 0, -m) sigma^-1
            x11 = m * (p * t + q * s) - p * r * s
            x12 = p * p * r - 2 * p * q * m
            x21 = 2 * s * t * m - s * s * r
            if x12 % 2 or x21 % (2 * N):
                continue
            vec = LatticeVec(-x21 // (2 * N), x11, x12 // 2)
            orbits.append(GeodesicOrbit(cusp=cusp, m=m, r=r, real_part=Fraction(-r, 2 * m), vec=vec))
    logger.debug(f"N={N} m={m}: {len(orbits)} geodesic orbits")
    return orbits


def _mat_mul(A: Tuple[int, ...], B: Tuple[int, ...]) -> Tuple[int, int, int, int]:
    return (
        A[0] * B[0] + A[1] * B[2],
        A[0] * B[1] + A[1] * B[3],
        A[2] * B[0] + A[3] * B[2],
        A[2] * B[1] + A[3] * B[3],
    )


def partner_endpoint(orbit: GeodesicOrbit, N: int) -> Tuple[UniMat, Fraction]:
    """(sigma', Re') with sigma'^-1 (-X) sigma' = (m, r'; 0, -m) and Re' = -r'/2m."""
    m = orbit.m
    p, q = orbit.cusp.sigma.apply_to_point(-orbit.r, 2 * m)
    sigma2 = scaling_matrix(p, q)
    minus_x = tuple(-e for e in orbit.vec.matrix(N))
    conj = _mat_mul(_mat_mul(sigma2.inverse().entries, minus_x), sigma2.entries)
    if conj[0] != m or conj[2] != 0 or conj[3] != -m:
        raise RuntimeError(f"{conj} is not upper triangular with diagonal ({m}, {-m})")
    return sigma2, Fraction(-conj[1], 2 * m)


def pairing(f: ModularFunction, orbit: GeodesicOrbit, N: int, precision: Optional[Precision] = None) -> acb:
    """<f, c(X)> from the principal parts at both ends of the geodesic."""
    precision = precision or Precision()
    parts = principal_parts(f, N, precision)
    sigma2, real2 = partner_endpoint(orbit, N)
    cusp2, k = locate_cusp(sigma2, N)
    with working_precision(precision.working_bits):
        total = acb(0)
        for n, c in parts[orbit.cusp.label].principal_part().items():
            total -= to_acb(c) * root_of_unity(n * orbit.real_part)
        for n, c in parts[cusp2.label].principal_part().items():
            total -= to_acb(c) * root_of_unity(n * (k + real2))
        return total


def certified_trace_negative_square(f: ModularFunction, N: int, spec: GenusCharSpec, m,
                                    config: Optional[Config] = None) -> Tuple[Fraction, float]:
    config = config or Config()
    _check_level(f, N, spec)
    weighted = []
    for orbit in geodesic_orbits(N, m):
        x = chi_lattice(spec, orbit.vec, config.char_search_budget)
        if x:
            weighted.append((x, orbit))
    if not weighted:
        return Fraction(0), 0.0

    def compute(precision: Precision) -> acb:
        total = acb(0)
        for x, orbit in weighted:
            total += x * pairing(f, orbit, N, precision)
        with working_precision(precision.working_bits):
            return -total / 2

    return _recognize_adaptively(compute, spec.delta, config.bits, config, f"t(-{m}^2)")


def trace_negative_square(f: ModularFunction, N: int, spec: GenusCharSpec, m,
                          config: Optional[Config] = None) -> Fraction:
    return certified_trace_negative_square(f, N, spec, m, config)[0]


def certified_trace(f: ModularFunction, N: int, spec: GenusCharSpec, index: int,
                    config: Optional[Config] = None) -> Tuple[Fraction, float]:
    """Dispatch on the index regime; invalid positive discriminants give 0."""
    if index > 0:
        if index % 4 not in (0, 3) or not is_square_mod(-index, 4 * N):
            return Fraction(0), 0.0
        return certified_trace_positive(f, N, spec, index, config)
    if index < 0 and is_rational_square(Fraction(-index)):
        return certified_trace_negative_square(f, N, spec, math.isqrt(-index), config)
    return trace_trivial(index), 0.0


def trace(f: ModularFunction, N: int, spec: GenusCharSpec, index: int, config: Optional[Config] = None) -> Fraction:
    return certified_trace(f, N, spec, index, config)[0]


def vanishing_bound(f: ModularFunction, N: int, delta: int = 1) -> int:
    """m0 with t_f(chi_Delta; -m^2) = 0 for every m > m0."""
    bound = 0
    parts = principal_parts(f, N)
    for cusp in cusp_reps(N):
        for n in parts[cusp.label].principal_part():
            k = -n * cusp.width
            bound = max(bound, math.floor(k * abs(delta) / (2 * cusp.eps)))
    return bound


def _is_plain_J(f: ModularFunction) -> bool:
    return f.level == 1 and f.f_id == builtin("J").f_id


def constant_coefficient(f: ModularFunction, N: int, spec: GenusCharSpec) -> Fraction:
    if not spec.is_trivial:
        return Fraction(0)
    if N == 1 and _is_plain_J(f):
        return Fraction(-2)
    if pole_order(f, N) == 0:
        return Fraction(0)
    raise UnsupportedRegimeError(
        f"untwisted constant term of {f.name or f.f_id} at level {N} is only known for J at level 1"
    )


def generating_series(f: ModularFunction, N: int, spec: GenusCharSpec, D_max: int,
                      config: Optional[Config] = None) -> QSeries:
    """sum_m t_f(chi; m) q^m over -m0^2 <= m <= D_max, holomorphic part only."""
    config = config or Config()
    _check_level(f, N, spec)
    if not constant_terms(f, N).all_vanish:
        raise UnsupportedRegimeError(f"{f.name or f.f_id} has a nonzero constant term at some cusp of level {N}")
    coeffs: Dict[int, Fraction] = {0: constant_coefficient(f, N, spec)}
    for m in range(1, vanishing_bound(f, N, spec.delta) + 1):
        if (m * m) % spec.delta:
            continue
        coeffs[-m * m] = trace_negative_square(f, N, spec, m, config)
    for D in range(1, D_max + 1):
        if D % 4 not in (0, 3) or D % abs(spec.delta) or not is_square_mod(-D, 4 * N):
            continue
        coeffs[D] = trace_positive(f, N, spec, D, config)
    return QSeries({n: _plain(c) for n, c in coeffs.items()}, D_max + 1)


def _plain(c: Fraction):
    return c.numerator if c.denominator == 1 else c


# Lattice-side enumeration of Gamma_0(N) \ L_{0,D}


def _reduce_point(x: Fraction, y2: Fraction) -> Tuple[Tuple[Fraction, Fraction], UniMat]:
    """Exact reduction of z = x + i sqrt(y2); returns the reduced point and h with h z = w."""
    a, b, c, d = 1, 0, 0, 1
    while True:
        k = math.floor(x + Fraction(1, 2))
        if k:
            x -= k
            a, b = a - k * c, b - k * d
        norm = x * x + y2
        if norm < 1:
            x, y2 = -x / norm, y2 / (norm * norm)
            a, b, c, d = -c, -d, a, b
            continue
        break
    if x == Fraction(-1, 2):
        x += 1
        a, b = a + c, b + d
    elif x * x + y2 == 1 and x < 0:
        x = -x
        a, b, c, d = -c, -d, a, b
    return (x, y2), UniMat(a, b, c, d)


def _point_stabilizer(x: Fraction, y2: Fraction) -> List[UniMat]:
    found = {}
    for a, b, c, d in product((-1, 0, 1), repeat=4):
        if a * d - b * c != 1:
            continue
        if 2 * c * x + d - a != 0:
            continue
        if c * (x * x - y2) + (d - a) * x - b != 0:
            continue
        g = UniMat(a, b, c, d).normalized()
        found[g.entries] = g
    return [found[k] for k in sorted(found)]


def _primitive_class_minimum(Q: QForm, N: int) -> int:
    """Largest, over P^1(Z/N) classes with N | Q(v), of the least Q(v) found in the class."""
    bound = N * N + N
    units = [u for u in range(1, N + 1) if math.gcd(u, N) == 1] if N > 1 else [1]
    best: Dict[Tuple[int, int], int] = {}
    for x in range(0, bound + 1):
        for y in range(-bound, bound + 1):
            if math.gcd(x, y) != 1:
                continue
            value = Q.value(x, y)
            if value % N:
                continue
            key = min(((u * x) % N, (u * y) % N) for u in units)
            if key not in best or value < best[key]:
                best[key] = value
    return max(best.values())


def lattice_class_reps(D: int, N: int) -> List[ClassRep]:
    """Orbit representatives of Gamma_0(N) on X in L with q(X) = D and a > 0, as forms [Na, b, c]."""
    _check_discriminant(D)
    if not is_square_mod(-D, 4 * N):
        return []
    A_max = max(_primitive_class_minimum(Q, N) for Q in sl2_class_reps(D))
    found: List[Tuple[QForm, Tuple[Fraction, Fraction], UniMat]] = []
    for A in range(N, A_max + 1, N):
        for b in range(-A + 1, A + 1):
            if (b * b + D) % (4 * A):
                continue
            Q = QForm(A, b, (b * b + D) // (4 * A))
            point, h = _reduce_point(Fraction(-b, 2 * A), Fraction(D, 4 * A * A))
            if not any(_same_orbit(point, h, p2, h2, N) for _, p2, h2 in found):
                found.append((Q, point, h))
    reps = []
    for Q, (x, y2), h in found:
        h_inv = h.inverse()
        stab = sum(1 for s in _point_stabilizer(x, y2) if (h_inv @ s @ h).in_gamma0(N))
        reps.append(ClassRep(form=Q, stab_order=stab))
    logger.debug(f"lattice side D={D} N={N}: {len(reps)} orbits from forms with a <= {A_max}")
    return sorted(reps, key=lambda rep: rep.form.coeffs)


def _same_orbit(point, h: UniMat, point2, h2: UniMat, N: int) -> bool:
    if point != point2:
        return False
    h2_inv = h2.inverse()
    return any((h2_inv @ s @ h).in_gamma0(N) for s in _point_stabilizer(*point))


def trace_positive_lattice(f: ModularFunction, N: int, spec: GenusCharSpec, D: int,
                           config: Optional[Config] = None) -> Fraction:
    """trace_positive computed over the lattice-side orbit enumeration."""
    config = config or Config()
    _check_level(f, N, spec)
    if not is_square_mod(-D, 4 * N):
        raise InvalidInputError(f"-{D} is not a square mod {4 * N}")
    return _certified_sum(f, N, spec, D, lattice_class_reps(D, N), config)[0]
