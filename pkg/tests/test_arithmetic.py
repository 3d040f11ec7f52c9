"""
Unit tests for number theory helpers and certified recognition.
"""

from fractions import Fraction

import pytest
from flint import acb, arb, ctx, fmpz

from src.pipeline.moduli.arithmetic import (
    ball_radius,
    gcd_all,
    is_fundamental_discriminant,
    is_rational_square,
    is_square_mod,
    is_squarefree,
    kronecker,
    recognize_in_sqrt,
    recognize_rational,
    root_of_unity,
    sqrt_classes_mod,
    with_error,
    working_precision,
)
from src.pipeline.moduli.errors import InvalidInputError, ModuliError, RecognitionError


class TestKronecker:
    """Test the Kronecker symbol."""

    @pytest.mark.parametrize("delta,n,expected", [
        (5, 2, -1), (-3, 2, -1), (-4, 2, 0), (8, 3, -1), (5, 3, -1),
        (-4, 3, -1), (-4, 5, 1), (12, 5, -1), (1, 7, 1), (5, 5, 0),
    ])
    def test_values(self, delta, n, expected):
        """Test known symbol values."""
        assert kronecker(delta, n) == expected

    def test_returns_plain_int(self):
        """Test symbols come back as int so they multiply flint balls."""
        assert type(kronecker(5, 3)) is int
        assert type(kronecker(-4, 7)) is int
        assert (kronecker(5, 3) * acb(2)).contains(-2)

    def test_negative_n(self):
        """Test (delta/-1) is the sign of delta."""
        assert kronecker(5, -1) == 1
        assert kronecker(-3, -1) == -1

    def test_multiplicative_in_n(self):
        """Test (delta/mn) = (delta/m)(delta/n)."""
        for delta in (-4, -3, 5, 8, 12):
            for m in range(1, 15):
                for n in range(1, 15):
                    assert kronecker(delta, m * n) == kronecker(delta, m) * kronecker(delta, n)


class TestDiscriminants:
    """Test discriminant predicates."""

    @pytest.mark.parametrize("delta", [1, -3, -4, 5, -7, 8, -8, 12, -15, 13])
    def test_fundamental(self, delta):
        """Test fundamental discriminants are recognized."""
        assert is_fundamental_discriminant(delta)

    @pytest.mark.parametrize("delta", [0, 2, 4, 9, -12, 16, -16, 20])
    def test_not_fundamental(self, delta):
        """Test non-fundamental integers are rejected."""
        assert not is_fundamental_discriminant(delta)

    def test_squarefree(self):
        """Test squarefree detection."""
        assert is_squarefree(30)
        assert not is_squarefree(12)
        assert not is_squarefree(0)


class TestSquares:
    """Test square roots and squares modulo 4N."""

    def test_sqrt_classes(self):
        """Test r mod 2N with r^2 = delta mod 4N."""
        assert sqrt_classes_mod(1, 4) == [1]
        assert sqrt_classes_mod(5, 20) == [5]
        assert sqrt_classes_mod(-3, 12) == [3]
        assert sqrt_classes_mod(5, 8) == []

    def test_sqrt_classes_needs_multiple_of_four(self):
        """Test the modulus must be 4N."""
        with pytest.raises(InvalidInputError):
            sqrt_classes_mod(1, 6)

    def test_is_square_mod(self):
        """Test -D is a square mod 4 exactly for D = 0, 3 mod 4."""
        assert is_square_mod(-3, 4)
        assert is_square_mod(-4, 4)
        assert not is_square_mod(-5, 4)

    def test_rational_squares(self):
        """Test squares of rationals."""
        assert is_rational_square(Fraction(9, 4))
        assert is_rational_square(0)
        assert not is_rational_square(Fraction(2))
        assert not is_rational_square(Fraction(-1))

    def test_gcd_all(self):
        """Test gcd of several values."""
        assert gcd_all(12, 18, 8) == 2
        assert gcd_all() == 0


class TestRootsOfUnity:
    """Test e(phase)."""

    def test_exact_values(self):
        """Test phases 0 and 1/2 give exact integers."""
        assert root_of_unity(Fraction(0)) == 1
        assert root_of_unity(Fraction(3)) == 1
        assert root_of_unity(Fraction(1, 2)) == -1
        assert root_of_unity(Fraction(-1, 2)) == -1

    def test_cube_root(self):
        """Test e(1/3) = (-1 + i sqrt 3) / 2."""
        with working_precision(128):
            value = root_of_unity(Fraction(1, 3))
            expected = acb(-0.5, arb(3).sqrt() / 2)
            assert (value - expected).contains(0)


class TestRecognition:
    """Test certified rational recognition."""

    def test_recognize_rational(self):
        """Test a tight ball around 7/3 is recognized."""
        with working_precision(128):
            assert recognize_rational(acb(7) / 3, 6) == Fraction(7, 3)
            assert recognize_rational(acb(-248), 1) == -248

    def test_integer_beyond_double_precision(self):
        """Test values above 2^53 are recognized at the default precision."""
        with working_precision(128):
            x = acb(fmpz(2 ** 60 + 1))
        assert recognize_rational(x, 6) == 2 ** 60 + 1

    def test_large_multiple_of_sqrt(self):
        """Test the sqrt(Delta) division keeps the precision of the ball."""
        with working_precision(256):
            x = (2 ** 70 + 3) * acb(5).sqrt()
        assert recognize_in_sqrt(x, 5, 6) == 2 ** 70 + 3

    def test_wide_ball(self):
        """Test a ball too wide for unique recognition is refused."""
        with pytest.raises(RecognitionError):
            recognize_rational(acb(arb(0.5, 0.1)), 6)

    def test_not_real(self):
        """Test a ball excluding the real axis is refused."""
        with pytest.raises(RecognitionError):
            recognize_rational(acb(1, 1), 6)

    def test_recognize_in_sqrt(self):
        """Test values in sqrt(Delta) Q are recognized by their rational coefficient."""
        with working_precision(128):
            x = 565760 * acb(5).sqrt()
            assert recognize_in_sqrt(x, 5, 6) == 565760
            assert recognize_in_sqrt(acb(-3) / 2, 1, 6) == Fraction(-3, 2)

    def test_recognition_error_is_moduli_error(self):
        """Test the exception hierarchy."""
        assert issubclass(RecognitionError, ModuliError)
        assert issubclass(InvalidInputError, ValueError)


class TestBalls:
    """Test ball helpers."""

    def test_with_error_widens(self):
        """Test both coordinates are widened by the bound."""
        widened = with_error(acb(1), arb(2.0) ** -20)
        assert ball_radius(widened) >= 2.0 ** -20
        assert widened.contains(acb(1 + 2.0 ** -21, -2.0 ** -21))

    def test_working_precision_restores(self):
        """Test the context manager restores flint's precision."""
        before = ctx.prec
        with working_precision(before + 100):
            assert ctx.prec == before + 100
        assert ctx.prec == before
