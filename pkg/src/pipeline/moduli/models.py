import hashlib
import json
import os
from fractions import Fraction
from math import gcd
from pathlib import Path
from typing import Annotated, Dict, Iterator, List, Literal, Optional, Tuple, Union

from flint import acb, arb, fmpz
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    model_validator,
)

from .arithmetic import is_fundamental_discriminant, sqrt_classes_mod
from .errors import InvalidInputError


def _as_fraction(value) -> Fraction:
    if isinstance(value, bool):
        raise ValueError(f"cannot read {value!r} as a rational")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"cannot read {value!r} as a rational: {e}")
    raise ValueError(f"cannot read {value!r} as a rational")


Rational = Annotated[Fraction, BeforeValidator(_as_fraction), PlainSerializer(str, return_type=str)]


class Precision(BaseModel):
    """Working mantissa size for ball arithmetic."""
    bits: int = Field(128, ge=64)
    guard_bits: int = Field(32, ge=16)

    model_config = ConfigDict(frozen=True)

    @property
    def working_bits(self) -> int:
        return self.bits + self.guard_bits

    def doubled(self) -> "Precision":
        return Precision(bits=2 * self.bits, guard_bits=self.guard_bits)


class QForm(BaseModel):
    """Integral binary quadratic form a x^2 + b xy + c y^2."""
    a: int
    b: int
    c: int

    model_config = ConfigDict(frozen=True)

    def __init__(self, a: int, b: int, c: int, **data):
        super().__init__(a=a, b=b, c=c, **data)

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def coeffs(self) -> Tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def is_positive_definite(self) -> bool:
        return self.disc < 0 and self.a > 0

    def value(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def __str__(self) -> str:
        return f"[{self.a},{self.b},{self.c}]"


class UniMat(BaseModel):
    """Integer matrix (a b; c d) of determinant one."""
    a: int
    b: int
    c: int
    d: int

    model_config = ConfigDict(frozen=True)

    def __init__(self, a: int, b: int, c: int, d: int, **data):
        super().__init__(a=a, b=b, c=c, d=d, **data)

    @model_validator(mode="after")
    def _unimodular(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant of {self.entries} is not 1")
        return self

    @classmethod
    def identity(cls) -> "UniMat":
        return cls(1, 0, 0, 1)

    @classmethod
    def translation(cls, k: int = 1) -> "UniMat":
        return cls(1, k, 0, 1)

    @classmethod
    def inversion(cls) -> "UniMat":
        return cls(0, -1, 1, 0)

    @property
    def entries(self) -> Tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def __matmul__(self, other: "UniMat") -> "UniMat":
        return UniMat(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __neg__(self) -> "UniMat":
        return UniMat(-self.a, -self.b, -self.c, -self.d)

    def inverse(self) -> "UniMat":
        return UniMat(self.d, -self.b, -self.c, self.a)

    def normalized(self) -> "UniMat":
        """Representative of {+g, -g} with c > 0, or c == 0 and d > 0."""
        if self.c < 0 or (self.c == 0 and self.d < 0):
            return -self
        return self

    def in_gamma0(self, level: int) -> bool:
        return self.c % level == 0

    def apply(self, z: acb) -> acb:
        return (self.a * z + self.b) / (self.c * z + self.d)

    def apply_to_point(self, p: int, q: int) -> Tuple[int, int]:
        """Action on a cusp p/q of P^1(Q), returned in lowest terms with q >= 0."""
        num, den = self.a * p + self.b * q, self.c * p + self.d * q
        g = gcd(num, den)
        num, den = num // g, den // g
        if den < 0 or (den == 0 and num < 0):
            num, den = -num, -den
        return num, den


class ClassRep(BaseModel):
    """Representative of a Gamma_0(N)-orbit of positive definite forms."""
    form: QForm
    stab_order: int = Field(ge=1, le=3)

    model_config = ConfigDict(frozen=True)

    @property
    def D(self) -> int:
        return -self.form.disc

    @property
    def cm_real(self) -> Fraction:
        return Fraction(-self.form.b, 2 * self.form.a)

    @property
    def cm_imag_squared(self) -> Fraction:
        return Fraction(self.D, 4 * self.form.a * self.form.a)

    def cm_point(self) -> acb:
        """z_Q = (-b + i sqrt(D)) / 2a at the current working precision."""
        two_a = 2 * self.form.a
        return acb(arb(fmpz(-self.form.b)) / two_a, arb(fmpz(self.D)).sqrt() / two_a)

    def to_row(self) -> Dict[str, object]:
        return {
            "a": self.form.a,
            "b": self.form.b,
            "c": self.form.c,
            "stab": self.stab_order,
            "z_re": float(self.cm_real),
            "z_im": float(self.cm_imag_squared) ** 0.5,
        }


class GenusCharSpec(BaseModel):
    """Parameters (Delta, N, r) of the generalized genus character."""
    delta: int = 1
    level: int = Field(1, ge=1)
    root: int = 1

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _valid_character(self):
        if not is_fundamental_discriminant(self.delta):
            raise ValueError(f"{self.delta} is not a fundamental discriminant")
        if (self.root * self.root - self.delta) % (4 * self.level):
            raise ValueError(f"{self.delta} is not {self.root}^2 mod {4 * self.level}")
        return self

    @classmethod
    def for_discriminant(cls, delta: int, level: int, root: Optional[int] = None) -> "GenusCharSpec":
        """Character for delta at the given level, with the smallest admissible root by default."""
        if not is_fundamental_discriminant(delta):
            raise InvalidInputError(f"{delta} is not a fundamental discriminant")
        roots = sqrt_classes_mod(delta, 4 * level)
        if not roots:
            raise InvalidInputError(f"{delta} is not a square modulo {4 * level}")
        if root is None:
            root = roots[0]
        elif root % (2 * level) not in roots:
            raise InvalidInputError(f"{root}^2 is not {delta} mod {4 * level}")
        return cls(delta=delta, level=level, root=root)

    @property
    def is_trivial(self) -> bool:
        return self.delta == 1


class Cusp(BaseModel):
    """Cusp p/q of Gamma_0(N) with its scaling matrix and lattice constants."""
    numerator: int
    denominator: int
    level: int
    sigma: UniMat
    width: Rational
    beta_const: Rational
    eps: Rational

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _eps_is_ratio(self):
        if self.eps != self.width / self.beta_const:
            raise ValueError("eps must equal width / beta_const")
        return self

    @property
    def is_infinity(self) -> bool:
        return self.denominator == 0

    @property
    def label(self) -> str:
        return f"{self.numerator}/{self.denominator}"

    def to_row(self) -> Dict[str, object]:
        return {
            "alpha_over_beta": self.label,
            "width": str(self.width),
            "beta": str(self.beta_const),
            "eps": str(self.eps),
            "sigma": list(self.sigma.entries),
        }


class LatticeVec(BaseModel):
    """X = (b, 2c; -2aN, -b) in the lattice L of level N."""
    a: int
    b: int
    c: int

    model_config = ConfigDict(frozen=True)

    def __init__(self, a: int, b: int, c: int, **data):
        super().__init__(a=a, b=b, c=c, **data)

    def norm(self, level: int) -> int:
        """q(X) = det X = 4Nac - b^2."""
        return 4 * level * self.a * self.c - self.b * self.b

    def matrix(self, level: int) -> Tuple[int, int, int, int]:
        return (self.b, 2 * self.c, -2 * self.a * level, -self.b)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0 and self.c == 0

    def __neg__(self) -> "LatticeVec":
        return LatticeVec(-self.a, -self.b, -self.c)


class GeodesicOrbit(BaseModel):
    """Gamma_0(N)-orbit of a vector of norm -m^2, seen from the cusp of its line."""
    cusp: Cusp
    m: int = Field(ge=1)
    r: int
    real_part: Rational
    vec: LatticeVec

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class TraceEntry(BaseModel):
    """Exact trace value (coefficient of sqrt(Delta)) and its certified error."""
    m: int
    value: Rational
    err: float = Field(0.0, ge=0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class TraceTable(BaseModel):
    """Traces of one function for one character, keyed by index."""
    f_id: str
    level: int = Field(ge=1)
    delta: int
    root: int
    entries: Dict[int, TraceEntry] = {}

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def value(self, m: int) -> Fraction:
        return self.entries[m].value

    def to_document(self) -> Dict[str, object]:
        return {
            "f_id": self.f_id,
            "N": self.level,
            "delta": self.delta,
            "r": self.root,
            "entries": [
                {"m": m, "value": str(e.value), "err": e.err}
                for m, e in sorted(self.entries.items())
            ],
        }

    @classmethod
    def from_document(cls, document: Dict[str, object]) -> "TraceTable":
        entries = {int(row["m"]): TraceEntry(**row) for row in document["entries"]}
        return cls(
            f_id=document["f_id"],
            level=document["N"],
            delta=document["delta"],
            root=document["r"],
            entries=entries,
        )


class CongruenceCheck(BaseModel):
    n: int
    index: int
    residue: int


class CongruenceReport(BaseModel):
    """Residues of Omega * t(r^3 p^m n) modulo p^nu for one progression prime r."""
    p: int
    nu: int = Field(ge=1)
    t: int = Field(ge=1)
    level: int = Field(ge=1)
    delta: int = 1
    m_exp: int = Field(ge=0)
    r: int
    omega: int = Field(1, ge=1)
    checked: List[CongruenceCheck] = []
    verdict: bool

    @model_validator(mode="after")
    def _consistent(self):
        modulus = 4 * self.t * self.t * self.level * self.p ** self.nu
        if (self.r + 1) % modulus:
            raise ValueError(f"r = {self.r} is not -1 mod {modulus}")
        if self.verdict != all(c.residue == 0 for c in self.checked):
            raise ValueError("verdict must be true exactly when every residue vanishes")
        return self


class SeriesDocument(BaseModel):
    """JSON form of a truncated q-series: {prec, terms: [[n, "p/q"], ...]}."""
    prec: int
    terms: List[Tuple[int, Rational]] = []

    model_config = ConfigDict(arbitrary_types_allowed=True)


class Config(BaseModel):
    """Run configuration shared by the CLI, the engine and the Airflow tasks."""
    bits: int = Field(128, ge=64)
    bits_cap: int = 4096
    guard_bits: int = Field(32, ge=16)
    cache_dir: Path = Path(".cache")
    threads: int = Field(1, ge=1)
    output_format: Literal["json", "csv", "pretty"] = "json"
    seed: int = 20240229
    max_den: int = Field(6, ge=1)
    recognition_tol: float = Field(1e-10, gt=0)
    char_search_budget: Optional[int] = None
    use_cache: bool = True

    @model_validator(mode="after")
    def _cap_above_bits(self):
        if self.bits_cap < self.bits:
            raise ValueError(f"bits cap {self.bits_cap} is below working bits {self.bits}")
        return self

    @classmethod
    def from_env(cls, **overrides) -> "Config":
        values = {"cache_dir": Path(os.environ.get("SMT_CACHE_DIR", ".cache"))}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def precision(self, bits: Optional[int] = None) -> Precision:
        return Precision(bits=bits or self.bits, guard_bits=self.guard_bits)


# Expression trees for modular functions

class ConstNode(BaseModel):
    op: Literal["const"] = "const"
    value: Rational

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class EtaNode(BaseModel):
    """eta(scale * z)."""
    op: Literal["eta"] = "eta"
    scale: int = Field(1, ge=1)

    model_config = ConfigDict(frozen=True)


class JNode(BaseModel):
    """The j-invariant j(scale * z), constant term 744 included."""
    op: Literal["j"] = "j"
    scale: int = Field(1, ge=1)

    model_config = ConfigDict(frozen=True)


class SumNode(BaseModel):
    op: Literal["sum"] = "sum"
    terms: Tuple["ExprNode", ...] = Field(min_length=1)

    model_config = ConfigDict(frozen=True)


class ProdNode(BaseModel):
    op: Literal["prod"] = "prod"
    factors: Tuple["ExprNode", ...] = Field(min_length=1)

    model_config = ConfigDict(frozen=True)


class PowNode(BaseModel):
    op: Literal["pow"] = "pow"
    base: "ExprNode"
    exponent: int

    model_config = ConfigDict(frozen=True)


ExprNode = Annotated[
    Union[ConstNode, EtaNode, JNode, SumNode, ProdNode, PowNode],
    Field(discriminator="op"),
]

for _node in (SumNode, ProdNode, PowNode):
    _node.model_rebuild()


def iter_atoms(node) -> Iterator[Union[EtaNode, JNode]]:
    if isinstance(node, (EtaNode, JNode)):
        yield node
    elif isinstance(node, SumNode):
        for term in node.terms:
            yield from iter_atoms(term)
    elif isinstance(node, ProdNode):
        for factor in node.factors:
            yield from iter_atoms(factor)
    elif isinstance(node, PowNode):
        yield from iter_atoms(node.base)


class ModularFunction(BaseModel):
    """A weakly holomorphic modular function on Gamma_0(level) given by an expression."""
    level: int = Field(ge=1)
    expr: ExprNode
    name: Optional[str] = None
    principal_parts: Optional[Dict[str, List[Tuple[Rational, Rational]]]] = None

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _scales_divide_level(self):
        for atom in iter_atoms(self.expr):
            if self.level % atom.scale:
                raise ValueError(f"scale {atom.scale} does not divide level {self.level}")
        return self

    @property
    def scales(self) -> List[int]:
        return sorted({atom.scale for atom in iter_atoms(self.expr)})

    @property
    def f_id(self) -> str:
        """Content hash of the expression (the alias name is not part of it)."""
        payload = self.model_dump(mode="json", exclude={"name"})
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.blake2b(canonical.encode(), digest_size=16).hexdigest()

    def with_level(self, level: int) -> "ModularFunction":
        """The same function viewed on Gamma_0(level) for a multiple of the current level."""
        if level % self.level:
            raise InvalidInputError(f"level {level} is not a multiple of {self.level}")
        return ModularFunction(level=level, expr=self.expr, name=self.name)
