"""
Twisted traces of singular moduli: forms, cusps, modular functions, traces and congruences.
"""

from .arithmetic import kronecker, recognize_in_sqrt, recognize_rational
from .congruences import apply_Ur_sieve, clear_denominators, cuspify, progression_primes, scan_congruence
from .cusps import cusp_reps, locate_cusp, scaling_matrix
from .engine import TraceEngine
from .errors import (
    CharacterSearchError,
    InvalidInputError,
    MissingTraceError,
    ModuliError,
    PoleOrderError,
    PrecisionExhaustedError,
    RecognitionError,
    UnsupportedExpressionError,
    UnsupportedRegimeError,
)
from .forms import gamma0_class_reps, reduce, sl2_class_reps
from .genus import chi, chi_lattice
from .models import (
    ClassRep,
    CongruenceReport,
    Config,
    Cusp,
    GenusCharSpec,
    LatticeVec,
    ModularFunction,
    Precision,
    QForm,
    TraceEntry,
    TraceTable,
    UniMat,
)
from .modfunc import builtin, evaluate, load_function, principal_part_at, q_expansion
from .qseries import QSeries, U, V, sieve, sieve_minus
from .traces import generating_series, trace, trace_negative_square, trace_positive

__all__ = [
    "CharacterSearchError",
    "ClassRep",
    "CongruenceReport",
    "Config",
    "Cusp",
    "GenusCharSpec",
    "InvalidInputError",
    "LatticeVec",
    "MissingTraceError",
    "ModularFunction",
    "ModuliError",
    "PoleOrderError",
    "Precision",
    "PrecisionExhaustedError",
    "QForm",
    "QSeries",
    "RecognitionError",
    "TraceEngine",
    "TraceEntry",
    "TraceTable",
    "U",
    "UniMat",
    "UnsupportedExpressionError",
    "UnsupportedRegimeError",
    "V",
    "apply_Ur_sieve",
    "builtin",
    "chi",
    "chi_lattice",
    "clear_denominators",
    "cusp_reps",
    "cuspify",
    "evaluate",
    "gamma0_class_reps",
    "generating_series",
    "kronecker",
    "load_function",
    "locate_cusp",
    "principal_part_at",
    "progression_primes",
    "q_expansion",
    "recognize_in_sqrt",
    "recognize_rational",
    "reduce",
    "scaling_matrix",
    "scan_congruence",
    "sieve",
    "sieve_minus",
    "sl2_class_reps",
    "trace",
    "trace_negative_square",
    "trace_positive",
]
