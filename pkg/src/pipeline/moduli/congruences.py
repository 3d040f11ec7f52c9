"""
Congruences for twisted traces along primes r = -1 (mod 4 t^2 N p^nu).
"""

import logging
from fractions import Fraction
from math import gcd
from typing import Callable, List, Optional, Sequence, Tuple

from sympy import isprime

from .arithmetic import kronecker
from .errors import InvalidInputError, MissingTraceError, PoleOrderError
from .forms import gamma0_index
from .models import CongruenceCheck, CongruenceReport, Config, GenusCharSpec, ModularFunction, TraceTable
from .qseries import QSeries, clear_lcm, delta_series, reduce_mod, theta_series
from .traces import certified_trace

logger = logging.getLogger(__name__)

TraceFn = Callable[[int], Tuple[Fraction, float]]


def _plain(c: Fraction):
    return c.numerator if c.denominator == 1 else c


def clear_denominators(s: QSeries, up_to: Optional[int] = None) -> Tuple[int, QSeries]:
    """(M, M s) with M the lcm of the denominators at indices <= up_to."""
    multiplier = clear_lcm(s, up_to)
    return multiplier, s.map(lambda c: _plain(Fraction(c) * multiplier))


def cuspify(s: QSeries, m: int, P: int) -> QSeries:
    """Theta * Delta^m * s through q^(P-1); the result must vanish at infinity."""
    if m < 0:
        raise InvalidInputError(f"Delta power must be non-negative, got {m}")
    v = s.valuation()
    if m + v < 1:
        raise PoleOrderError(f"Theta Delta^{m} leaves a term q^{m + v}; need m >= {1 - v}", required=1 - v)
    length = max(P - v + 1, 2)
    factor = theta_series(length) * delta_series(length) ** m
    return (factor * s).truncate(P)


def apply_Ur_sieve(table: TraceTable, t: int, r: int) -> QSeries:
    """sum over (m/t) = -1 of t(r m) q^m, for every m with r m in the table range."""
    if t < 1 or t % 2 == 0:
        raise InvalidInputError(f"t must be odd and positive, got {t}")
    if r < 1:
        raise InvalidInputError(f"r must be positive, got {r}")
    if t == 1:
        logger.warning("sieve with t = 1 keeps nothing: (m/1) = 1 for every m")
    positive = [m for m in table.entries if m > 0]
    target = max(positive) // r if positive else 0
    coeffs = {}
    for m in range(1, target + 1):
        if kronecker(m, t) != -1:
            continue
        if r * m not in table.entries:
            raise MissingTraceError(f"trace table has no entry for index {r * m}", index=r * m)
        coeffs[m] = _plain(table.value(r * m))
    return QSeries(coeffs, target + 1)


def progression_modulus(t: int, N: int, p: int, nu: int) -> int:
    return 4 * t * t * N * p ** nu


def progression_primes(t: int, N: int, p: int, nu: int, count: int = 5) -> List[int]:
    """The first `count` primes r = -1 (mod 4 t^2 N p^nu)."""
    modulus = progression_modulus(t, N, p, nu)
    primes = []
    r = modulus - 1
    while len(primes) < count:
        if isprime(r):
            primes.append(r)
        r += modulus
    return primes


def _validate_scan(N: int, p: int, nu: int, t: int, m_exp: int, r_candidates: Sequence[int]) -> None:
    if p == 2 or not isprime(p):
        raise InvalidInputError(f"p must be an odd prime, got {p}")
    if N % p == 0:
        raise InvalidInputError(f"p = {p} divides the level {N}")
    if t < 1 or t % 2 == 0:
        raise InvalidInputError(f"t must be odd and positive, got {t}")
    if nu < 1 or m_exp < 0:
        raise InvalidInputError(f"need nu >= 1 and m >= 0, got nu={nu}, m={m_exp}")
    modulus = progression_modulus(t, N, p, nu)
    for r in r_candidates:
        if not isprime(r) or (r + 1) % modulus:
            raise InvalidInputError(f"r = {r} is not a prime = -1 mod {modulus}")


def admissible_n(N: int, p: int, t: int, m_exp: int, r: int, n_max: int) -> List[int]:
    """n <= n_max with gcd(n, r p N) = 1 and (r^3 p^m n / t) = -1."""
    return [
        n for n in range(1, n_max + 1)
        if gcd(n, r * p * N) == 1 and kronecker(r ** 3 * p ** m_exp * n, t) == -1
    ]


def scan_congruence(f: ModularFunction, N: int, spec: GenusCharSpec, p: int, nu: int, t: int,
                    m_exp: int, r_candidates: Sequence[int], n_max: int,
                    config: Optional[Config] = None, trace_fn: Optional[TraceFn] = None) -> List[CongruenceReport]:
    """Residues of Omega t(r^3 p^m n) mod p^nu for each candidate r."""
    config = config or Config()
    _validate_scan(N, p, nu, t, m_exp, r_candidates)
    if trace_fn is None:
        def trace_fn(index: int) -> Tuple[Fraction, float]:
            return certified_trace(f, N, spec, index, config)

    modulus = p ** nu
    reports = []
    for r in r_candidates:
        ns = admissible_n(N, p, t, m_exp, r, n_max)
        if not ns:
            logger.warning(f"r={r}: no admissible n <= {n_max} (p={p}, t={t}, m={m_exp})")
        values = []
        for n in ns:
            index = r ** 3 * p ** m_exp * n
            try:
                value, _ = trace_fn(index)
            except Exception as e:
                logger.error(f"trace at index {index} (r={r}, n={n}) failed: {e}")
                raise
            values.append((n, index, value))
        top = max((index for _, index, _ in values), default=0)
        traces = QSeries({index: value for _, index, value in values}, top + 1)
        omega, scaled = clear_denominators(traces)
        checked = [
            CongruenceCheck(n=n, index=index, residue=int(scaled[index]) % modulus)
            for n, index, _ in values
        ]
        report = CongruenceReport(
            p=p, nu=nu, t=t, level=N, delta=spec.delta, m_exp=m_exp, r=r,
            omega=omega, checked=checked, verdict=all(c.residue == 0 for c in checked),
        )
        logger.info(f"r={r}: {len(checked)} checks, omega={omega}, verdict={report.verdict}")
        reports.append(report)
    return reports


def reverify_report(f: ModularFunction, report: CongruenceReport, root: Optional[int] = None,
                    config: Optional[Config] = None) -> CongruenceReport:
    """Recompute every residue of the report at doubled precision, bypassing any cache."""
    config = config or Config()
    doubled = config.model_copy(update={
        "bits": 2 * config.bits,
        "bits_cap": max(config.bits_cap, 2 * config.bits),
        "use_cache": False,
    })
    spec = GenusCharSpec.for_discriminant(report.delta, report.level, root)
    n_max = max((c.n for c in report.checked), default=0)
    fresh = scan_congruence(f, report.level, spec, report.p, report.nu, report.t, report.m_exp,
                            [report.r], n_max, doubled)[0]
    if fresh.checked != report.checked:
        logger.warning(f"r={report.r}: recomputed residues differ from the report")
    return fresh


def sturm_bound(weight: Fraction, level: int) -> int:
    """floor(k [SL_2(Z) : Gamma_0(N)] / 12) + 1; experimental for half-integral k."""
    weight = Fraction(weight)
    logger.warning("Sturm bound check is experimental")
    return int(weight * gamma0_index(level) / 12) + 1


def congruent_mod_up_to_sturm(s1: QSeries, s2: QSeries, M: int, weight: Fraction, level: int) -> bool:
    """Coefficientwise s1 = s2 mod M for every index below the Sturm bound."""
    bound = sturm_bound(weight, level)
    if min(s1.prec, s2.prec) <= bound:
        raise InvalidInputError(f"series known to q^{min(s1.prec, s2.prec)} do not reach the Sturm bound {bound}")
    a = reduce_mod(s1.truncate(bound + 1), M)
    b = reduce_mod(s2.truncate(bound + 1), M)
    return a.coeffs == b.coeffs
