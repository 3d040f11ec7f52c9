"""
Unit tests for Pydantic models.
"""

from fractions import Fraction
from pathlib import Path

import pytest
from pydantic import ValidationError

from src.pipeline.moduli.errors import InvalidInputError
from src.pipeline.moduli.models import (
    ClassRep,
    CongruenceCheck,
    CongruenceReport,
    Config,
    ConstNode,
    EtaNode,
    GenusCharSpec,
    LatticeVec,
    ModularFunction,
    Precision,
    QForm,
    SeriesDocument,
    TraceEntry,
    TraceTable,
    UniMat,
)


class TestQForm:
    """Test QForm model."""

    def test_discriminant_and_definiteness(self):
        """Test disc = b^2 - 4ac and positive definiteness."""
        Q = QForm(2, 2, 3)
        assert Q.disc == -20
        assert Q.is_positive_definite()
        assert not QForm(1, 3, 1).is_positive_definite()
        assert str(Q) == "[2,2,3]"

    def test_forms_are_hashable(self):
        """Test frozen forms can be used as set members."""
        assert len({QForm(1, 1, 1), QForm(1, 1, 1), QForm(1, 0, 1)}) == 2


class TestUniMat:
    """Test UniMat model."""

    def test_determinant_must_be_one(self):
        """Test matrices of determinant other than one are rejected."""
        with pytest.raises(ValidationError):
            UniMat(1, 1, 1, 1)

    def test_product_and_inverse(self):
        """Test multiplication and inversion."""
        g = UniMat(2, 1, 1, 1)
        assert g @ g.inverse() == UniMat.identity()
        assert (UniMat.translation(2) @ UniMat.translation(3)).entries == (1, 5, 0, 1)

    def test_normalized_sign(self):
        """Test the representative of +-g has c > 0, or c = 0 and d > 0."""
        assert UniMat(-1, 0, -3, -1).normalized() == UniMat(1, 0, 3, 1)
        assert UniMat(-1, 0, 0, -1).normalized() == UniMat.identity()

    def test_gamma0_membership(self):
        """Test Gamma_0(N) membership is c = 0 mod N."""
        assert UniMat(1, 0, 6, 1).in_gamma0(3)
        assert not UniMat(1, 0, 2, 1).in_gamma0(3)

    def test_action_on_cusps(self):
        """Test the action on P^1(Q) in lowest terms."""
        assert UniMat.inversion().apply_to_point(1, 0) == (0, 1)
        assert UniMat.inversion().apply_to_point(0, 1) == (1, 0)
        assert UniMat(1, 0, 2, 1).apply_to_point(1, 1) == (1, 3)


class TestClassRep:
    """Test ClassRep model."""

    def test_cm_point_parts(self):
        """Test the exact real part and squared imaginary part of z_Q."""
        rep = ClassRep(form=QForm(2, 2, 3), stab_order=1)
        assert rep.D == 20
        assert rep.cm_real == Fraction(-1, 2)
        assert rep.cm_imag_squared == Fraction(5, 4)

    def test_stabilizer_order_range(self):
        """Test stabilizer orders outside 1..3 are rejected."""
        with pytest.raises(ValidationError):
            ClassRep(form=QForm(1, 1, 1), stab_order=4)


class TestGenusCharSpec:
    """Test GenusCharSpec validation."""

    def test_default_is_trivial(self):
        """Test the default character is Delta = 1."""
        spec = GenusCharSpec()
        assert spec.is_trivial
        assert (spec.delta, spec.level, spec.root) == (1, 1, 1)

    def test_rejects_non_fundamental(self):
        """Test non-fundamental discriminants are rejected."""
        with pytest.raises(ValidationError):
            GenusCharSpec(delta=9)

    def test_rejects_wrong_root(self):
        """Test r^2 must be Delta mod 4N."""
        with pytest.raises(ValidationError):
            GenusCharSpec(delta=5, level=1, root=0)

    def test_for_discriminant_picks_smallest_root(self):
        """Test the default root is the smallest square root of Delta mod 4N."""
        assert GenusCharSpec.for_discriminant(5, 5).root == 5
        assert GenusCharSpec.for_discriminant(-3, 3).root == 3

    def test_for_discriminant_without_root(self):
        """Test Delta must be a square mod 4N."""
        with pytest.raises(InvalidInputError):
            GenusCharSpec.for_discriminant(5, 2)


class TestLatticeVec:
    """Test LatticeVec model."""

    def test_norm_and_matrix(self):
        """Test q(X) = 4Nac - b^2 and the matrix (b, 2c; -2aN, -b)."""
        X = LatticeVec(1, 1, 1)
        assert X.norm(1) == 3
        assert X.norm(2) == 7
        assert X.matrix(2) == (1, 2, -4, -1)

    def test_negation(self):
        """Test -X and the zero vector."""
        assert -LatticeVec(1, -2, 3) == LatticeVec(-1, 2, -3)
        assert LatticeVec(0, 0, 0).is_zero()


class TestConfig:
    """Test Config model."""

    def test_defaults(self):
        """Test default configuration values."""
        config = Config()
        assert config.bits == 128
        assert config.bits_cap == 4096
        assert config.threads == 1
        assert config.output_format == "json"

    def test_cap_below_bits(self):
        """Test bits_cap must not be below bits."""
        with pytest.raises(ValidationError):
            Config(bits=8192)

    def test_threads_positive(self):
        """Test thread count must be at least one."""
        with pytest.raises(ValidationError):
            Config(threads=0)

    def test_from_env(self, monkeypatch, tmp_path):
        """Test SMT_CACHE_DIR and overrides, with None meaning unset."""
        monkeypatch.setenv("SMT_CACHE_DIR", str(tmp_path))
        config = Config.from_env(bits=256, threads=None)
        assert config.cache_dir == Path(tmp_path)
        assert config.bits == 256
        assert config.threads == 1

    def test_precision(self):
        """Test precision objects carry guard bits."""
        precision = Config(bits=200).precision()
        assert precision.working_bits == 232
        assert precision.doubled() == Precision(bits=400, guard_bits=32)


class TestTraceTable:
    """Test TraceTable documents."""

    def test_document_layout(self):
        """Test the JSON layout {f_id, N, delta, r, entries} with rationals as strings."""
        table = TraceTable(
            f_id="abc", level=1, delta=1, root=1,
            entries={3: TraceEntry(m=3, value=Fraction(-248)), 1: TraceEntry(m=1, value=Fraction(1, 2))},
        )
        document = table.to_document()
        assert document["N"] == 1
        assert document["entries"][0] == {"m": 1, "value": "1/2", "err": 0.0}
        assert document["entries"][1]["value"] == "-248"
        assert TraceTable.from_document(document) == table

    def test_rational_rejects_garbage(self):
        """Test unreadable values are rejected."""
        with pytest.raises(ValidationError):
            TraceEntry(m=1, value="one half")


class TestCongruenceReport:
    """Test CongruenceReport validation."""

    def _report(self, **changes):
        fields = dict(p=3, nu=1, t=3, level=1, m_exp=0, r=107,
                      checked=[CongruenceCheck(n=1, index=107 ** 3, residue=0)], verdict=True)
        fields.update(changes)
        return CongruenceReport(**fields)

    def test_valid_report(self):
        """Test a consistent report."""
        assert self._report().verdict

    def test_r_must_be_in_progression(self):
        """Test r = -1 mod 4 t^2 N p^nu."""
        with pytest.raises(ValidationError):
            self._report(r=109)

    def test_verdict_matches_residues(self):
        """Test the verdict is true exactly when every residue vanishes."""
        with pytest.raises(ValidationError):
            self._report(checked=[CongruenceCheck(n=1, index=107 ** 3, residue=2)])


class TestModularFunction:
    """Test ModularFunction model."""

    def test_scale_must_divide_level(self):
        """Test eta(3z) is not allowed at level 2."""
        with pytest.raises(ValidationError):
            ModularFunction(level=2, expr=EtaNode(scale=3))

    def test_parse_discriminated_union(self):
        """Test nodes are parsed by their op field."""
        f = ModularFunction.model_validate({
            "level": 1,
            "expr": {"op": "sum", "terms": [{"op": "j"}, {"op": "const", "value": "-744"}]},
        })
        assert f.expr.terms[1] == ConstNode(value=Fraction(-744))

    def test_f_id_ignores_name(self):
        """Test the content hash does not depend on the alias name."""
        expr = ConstNode(value=Fraction(1))
        assert ModularFunction(level=1, expr=expr, name="a").f_id == ModularFunction(level=1, expr=expr).f_id

    def test_with_level(self):
        """Test moving to a multiple of the level changes the id."""
        f = ModularFunction(level=1, expr=ConstNode(value=Fraction(1)))
        assert f.with_level(4).level == 4
        assert f.with_level(4).f_id != f.f_id
        with pytest.raises(InvalidInputError):
            f.with_level(4).with_level(6)


class TestSeriesDocument:
    """Test SeriesDocument model."""

    def test_terms_accept_strings(self):
        """Test terms parse "p/q" strings."""
        document = SeriesDocument.model_validate({"prec": 5, "terms": [[-1, "1"], [3, "-1/2"]]})
        assert document.terms == [(-1, Fraction(1)), (3, Fraction(-1, 2))]
