"""
Unit tests for the genus character.
"""

import random

import pytest

from src.pipeline.moduli.errors import CharacterSearchError, InvalidInputError
from src.pipeline.moduli.forms import act, gamma0_class_reps
from src.pipeline.moduli.genus import character_samples, chi, chi_lattice, default_budget, in_support
from src.pipeline.moduli.models import GenusCharSpec, LatticeVec, QForm, UniMat


class TestSupport:
    """Test the support of chi_Delta."""

    def test_support_conditions(self):
        """Test Delta | disc and the gcd condition."""
        spec = GenusCharSpec.for_discriminant(5, 1)
        assert in_support(spec, QForm(1, 0, 5))
        assert not in_support(spec, QForm(1, 1, 1))
        assert not in_support(spec, QForm(5, 0, 5))

    def test_level_must_divide_a(self):
        """Test forms must have N | a."""
        spec = GenusCharSpec.for_discriminant(-7, 2)
        with pytest.raises(InvalidInputError):
            in_support(spec, QForm(1, 1, 2))


class TestCharacter:
    """Test chi values."""

    def test_trivial_character(self):
        """Test chi_1 is 1 on every form."""
        spec = GenusCharSpec()
        assert all(chi(spec, rep.form) == 1 for rep in gamma0_class_reps(23, 1))

    def test_delta_five_on_disc_twenty(self):
        """Test chi_5 separates the two classes of discriminant -20."""
        spec = GenusCharSpec.for_discriminant(5, 1)
        assert chi(spec, QForm(1, 0, 5)) == 1
        assert chi(spec, QForm(2, 2, 3)) == -1

    def test_outside_support_is_zero(self):
        """Test chi vanishes off the support."""
        spec = GenusCharSpec.for_discriminant(5, 1)
        assert chi(spec, QForm(1, 1, 1)) == 0

    def test_samples_agree(self):
        """Test every represented n gives the same symbol."""
        spec = GenusCharSpec.for_discriminant(5, 1)
        assert set(character_samples(spec, QForm(2, 2, 3), count=8)) == {-1}
        spec = GenusCharSpec.for_discriminant(-3, 3)
        for rep in gamma0_class_reps(27, 3):
            if in_support(spec, rep.form):
                assert len(set(character_samples(spec, rep.form, count=8))) == 1

    def test_gamma0_invariance(self):
        """Test chi(Q o g) = chi(Q) for g in Gamma_0(N)."""
        rng = random.Random(7)
        spec = GenusCharSpec.for_discriminant(-4, 2)
        generators = [UniMat(1, 1, 0, 1), UniMat(1, 0, 2, 1), UniMat(3, 1, 2, 1), UniMat(1, -1, -2, 3)]
        for rep in gamma0_class_reps(36, 2):
            value = chi(spec, rep.form)
            Q = rep.form
            for _ in range(10):
                Q = act(Q, rng.choice(generators))
                assert chi(spec, Q) == value

    def test_budget_exhausted(self):
        """Test an empty search raises."""
        spec = GenusCharSpec.for_discriminant(5, 1)
        with pytest.raises(CharacterSearchError):
            chi(spec, QForm(2, 2, 3), budget=0)

    def test_default_budget(self):
        """Test the default shell bound scales with |Delta|."""
        assert default_budget(GenusCharSpec.for_discriminant(-4, 1)) == 50


class TestLatticeCharacter:
    """Test chi on lattice vectors."""

    def test_zero_vector(self):
        """Test the zero vector has character zero."""
        assert chi_lattice(GenusCharSpec(), LatticeVec(0, 0, 0)) == 0

    def test_matches_form(self):
        """Test chi_lattice(X) = chi([Na, b, c])."""
        spec = GenusCharSpec.for_discriminant(5, 1)
        assert chi_lattice(spec, LatticeVec(2, 2, 3)) == chi(spec, QForm(2, 2, 3))
        assert chi_lattice(spec, LatticeVec(0, 5, 0)) == chi(spec, QForm(0, 5, 0))
