"""
Unit tests for truncated q-series and the operators on them.
"""

import logging
from fractions import Fraction

import pytest
from sympy import divisor_sigma

from src.pipeline.moduli.errors import InvalidInputError
from src.pipeline.moduli.qseries import (
    QSeries,
    U,
    V,
    clear_lcm,
    delta_series,
    delta_series_by_product,
    e4_series,
    euler_series,
    j_series,
    reduce_mod,
    sieve,
    sieve_minus,
    theta_series,
)

TAU = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]


class TestArithmetic:
    """Test ring operations and precision bookkeeping."""

    def test_addition_takes_lower_precision(self):
        """Test O(q^a) + O(q^b) = O(q^min(a, b))."""
        s = QSeries({0: 1, 3: 2}, 5) + QSeries({1: 1}, 3)
        assert s == QSeries({0: 1, 1: 1}, 3)

    def test_zero_coefficients_dropped(self):
        """Test cancelling terms leave no entries."""
        s = QSeries({0: 1, 1: 2}, 4) - QSeries({1: 2}, 4)
        assert s.coeffs == {0: 1}

    def test_product_precision(self):
        """Test prec = min(v(a) + prec(b), v(b) + prec(a))."""
        s = QSeries({-1: 1}, 2) * QSeries({0: 1, 1: 1}, 3)
        assert s.prec == 2
        assert s.coeffs == {-1: 1, 0: 1}

    def test_power(self):
        """Test (1 + q)^3."""
        assert QSeries({0: 1, 1: 1}, 5) ** 3 == QSeries({0: 1, 1: 3, 2: 3, 3: 1}, 5)

    def test_invert_geometric(self):
        """Test 1 / (1 - q) = sum q^n."""
        assert QSeries({0: 1, 1: -1}, 5).invert() == QSeries({n: 1 for n in range(5)}, 5)

    def test_invert_with_pole(self):
        """Test 1 / (q - q^2) = q^-1 + 1 + q + ... with the precision lost to the valuation."""
        inverse = QSeries({1: 1, 2: -1}, 6).invert()
        assert inverse.prec == 4
        assert inverse == QSeries({n: 1 for n in range(-1, 4)}, 4)

    def test_invert_rational_lead(self):
        """Test a non-unit leading coefficient gives fractions."""
        inverse = QSeries({0: 2}, 3).invert()
        assert inverse[0] == Fraction(1, 2)

    def test_invert_zero(self):
        """Test O(q^n) cannot be inverted."""
        with pytest.raises(InvalidInputError):
            QSeries({}, 5).invert()

    def test_product_with_unknown_factor(self):
        """Test O(q^25) times q^-24 + O(q^-23) is O(q)."""
        product = QSeries({}, 25) * QSeries({-24: 1}, -23)
        assert product.is_zero()
        assert product.prec == 1

    def test_unknown_coefficient(self):
        """Test reading at or past the precision raises."""
        s = QSeries({0: 1}, 3)
        assert s[2] == 0
        with pytest.raises(IndexError):
            s[3]

    def test_shift_and_valuation(self):
        """Test multiplication by q^k."""
        s = QSeries({0: 1, 2: 5}, 4).shift(-1)
        assert s.valuation() == -1
        assert s.prec == 3
        assert QSeries({}, 7).valuation() == 7


class TestStandardSeries:
    """Test theta, Euler, Delta, E4 and j."""

    def test_theta(self):
        """Test 1 + 2 sum q^(n^2)."""
        assert theta_series(10) == QSeries({0: 1, 1: 2, 4: 2, 9: 2}, 10)

    def test_euler(self):
        """Test the pentagonal number series."""
        assert euler_series(13) == QSeries({0: 1, 1: -1, 2: -1, 5: 1, 7: 1, 12: -1}, 13)

    def test_delta_coefficients(self):
        """Test the first ten values of tau."""
        s = delta_series(11)
        assert [s[n] for n in range(1, 11)] == TAU
        assert s[0] == 0

    def test_delta_two_routines_agree(self):
        """Test the pentagonal and the product routes give the same series."""
        assert delta_series(40) == delta_series_by_product(40)

    def test_ramanujan_congruence(self):
        """Test tau(n) = sigma_11(n) mod 691."""
        s = delta_series(30)
        for n in range(1, 30):
            assert (s[n] - int(divisor_sigma(n, 11))) % 691 == 0

    def test_e4(self):
        """Test 1 + 240 q + 2160 q^2."""
        s = e4_series(3)
        assert (s[0], s[1], s[2]) == (1, 240, 2160)

    def test_j(self):
        """Test j = q^-1 + 744 + 196884 q + 21493760 q^2."""
        s = j_series(3)
        assert s.prec == 3
        assert dict(s.items()) == {-1: 1, 0: 744, 1: 196884, 2: 21493760}

    def test_bad_precision(self):
        """Test series with too little precision are refused."""
        with pytest.raises(InvalidInputError):
            delta_series(1)
        with pytest.raises(InvalidInputError):
            theta_series(0)


class TestOperators:
    """Test U, V, sieving and reductions."""

    def test_u(self):
        """Test a(n) -> a(mn) and prec -> prec // m."""
        s = QSeries({n: n for n in range(-1, 10)}, 10)
        assert U(3, s) == QSeries({1: 3, 2: 6}, 3)

    def test_v(self):
        """Test q -> q^m."""
        assert V(2, QSeries({-1: 1, 1: 3}, 3)) == QSeries({-2: 1, 2: 3}, 6)

    def test_u_undoes_v(self):
        """Test U_m V_m is the identity."""
        s = j_series(5)
        assert U(2, V(2, s)) == s

    def test_invalid_index(self):
        """Test U and V need positive indices."""
        with pytest.raises(InvalidInputError):
            U(0, theta_series(4))
        with pytest.raises(InvalidInputError):
            V(-1, theta_series(4))

    def test_sieve(self):
        """Test (n/3) = -1 keeps n = 2 mod 3."""
        s = QSeries({n: 1 for n in range(10)}, 10)
        assert sorted(sieve_minus(3, s).coeffs) == [2, 5, 8]
        assert sorted(sieve(3, s, 0).coeffs) == [0, 3, 6, 9]

    def test_sieve_even_modulus(self):
        """Test the modulus must be odd."""
        with pytest.raises(InvalidInputError):
            sieve(2, theta_series(4), -1)

    def test_sieve_t_one_warns(self, caplog):
        """Test t = 1 empties the series with a warning."""
        with caplog.at_level(logging.WARNING):
            assert sieve_minus(1, theta_series(5)).is_zero()
        assert "t = 1" in caplog.text

    def test_reduce_mod(self):
        """Test coefficients land in [0, M)."""
        assert reduce_mod(QSeries({0: -1, 1: 10}, 2), 7) == QSeries({0: 6, 1: 3}, 2)
        with pytest.raises(InvalidInputError):
            reduce_mod(QSeries({0: Fraction(1, 2)}, 1), 7)

    def test_clear_lcm(self):
        """Test the lcm of denominators up to an index."""
        s = QSeries({0: Fraction(1, 2), 1: Fraction(1, 3), 2: Fraction(1, 5)}, 3)
        assert clear_lcm(s) == 30
        assert clear_lcm(s, up_to=1) == 6


class TestDocuments:
    """Test JSON documents."""

    def test_document(self):
        """Test {prec, terms} with rationals as strings."""
        s = QSeries({-1: 1, 3: Fraction(-1, 2)}, 5)
        document = s.to_document()
        assert document == {"prec": 5, "terms": [[-1, "1"], [3, "-1/2"]]}
        assert QSeries.from_document(document) == s
