import random
from fractions import Fraction

import pytest

from pbar_omega.exactalg import (
    EXACT,
    ONE,
    Cyc8,
    I,
    JacobiSeries,
    Monomial,
    QSeries,
    jacobi_qpochhammer,
    qpochhammer,
)
from pbar_omega.exceptions import (
    DivergentProduct,
    DivisionByZero,
    InexactDivision,
    LatticeMismatch,
    NonInvertibleLeadingTerm,
    PrecisionExhausted,
    RootOfUnityOutsideCyc8,
    WindowTooSmall,
)

PARTITIONS = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135]


def _series(terms: dict, order=EXACT) -> QSeries:
    return QSeries.from_terms(terms, order)


def _random_series(rng: random.Random, order: int) -> QSeries:
    terms = {}
    for _ in range(6):
        exponent = Fraction(rng.randrange(0, 4 * order), 4)
        terms[exponent] = Cyc8(rng.randint(-3, 3), rng.randint(-2, 2), Fraction(rng.randint(-2, 2), 3))
    return _series(terms, order)


class TestCyc8:
    def test_i_squared(self) -> None:
        assert I * I == -1

    def test_zeta8_times_minus_zeta8_cubed(self) -> None:
        assert Cyc8.zeta8(1) * (-Cyc8.zeta8(3)) == 1

    def test_division_by_itself(self) -> None:
        value = Cyc8(1) + I
        assert value / value == ONE

    @pytest.mark.parametrize(
        "value",
        [Cyc8(2), Cyc8(1, 1), Cyc8(Fraction(1, 3), 0, -2, 5), Cyc8(0, 0, 0, Fraction(-7, 2))],
    )
    def test_inverse(self, value: Cyc8) -> None:
        assert (value * value.inverse()).coeffs == (1, 0, 0, 0)

    def test_division_by_zero(self) -> None:
        with pytest.raises(DivisionByZero):
            Cyc8(1, 2) / Cyc8()
        with pytest.raises(ZeroDivisionError):
            Cyc8(1) / 0

    def test_root_of_unity(self) -> None:
        assert Cyc8.root_of_unity(Fraction(1, 4)) == I
        assert Cyc8.root_of_unity(Fraction(-1, 8)) == Cyc8.zeta8(7)

    def test_root_of_unity_outside_field(self) -> None:
        with pytest.raises(RootOfUnityOutsideCyc8):
            Cyc8.root_of_unity(Fraction(1, 3))

    def test_conjugate_and_norm(self) -> None:
        value = Cyc8.zeta8(1)
        assert value * value.conjugate() == 1
        assert Cyc8(1, 1).norm() == 2

    def test_canonical_text_form(self) -> None:
        value = Cyc8(Fraction(1, 2), -3, 0, Fraction(5, 7))
        assert str(value) == "1/2 + -3/1*z8 + 0/1*z8^2 + 5/7*z8^3"
        assert Cyc8.parse(str(value)) == value

    def test_hash_matches_rationals(self) -> None:
        assert {Cyc8(3): "x"}[Cyc8(3)] == "x"
        assert hash(Cyc8(3)) == hash(Fraction(3))


class TestQSeries:
    def test_geometric_inverse(self) -> None:
        one_minus_q = _series({0: 1, 1: -1}, 12)
        geometric = _series({k: 1 for k in range(12)}, 12)
        assert (one_minus_q * geometric).agrees_with(QSeries.one(12))

    def test_multiply_by_zero(self) -> None:
        series = _series({0: 1, 1: 2}, 10)
        assert not (series * QSeries.zero())

    def test_truncation_order_of_product(self) -> None:
        left = _series({Fraction(1, 24): 1}, 5)
        right = _series({-1: 1}, 3)
        assert (left * right).real_order == min(5 - 1, 3 + Fraction(1, 24))

    def test_eta_square_against_double_loop(self) -> None:
        order = 20
        pochhammer = qpochhammer(Monomial(ONE, 1), EXACT, order)
        square = pochhammer * pochhammer
        expected = {}
        for k1, c1 in pochhammer.integer_coefficients().items():
            for k2, c2 in pochhammer.integer_coefficients().items():
                if k1 + k2 < order:
                    expected[k1 + k2] = expected.get(k1 + k2, 0) + c1 * c2
        assert square.agrees_with(_series(expected, order))

    def test_invert_one_minus_q(self) -> None:
        inverse = _series({0: 1, 1: -1}).invert(8)
        assert inverse.integer_coefficients() == {k: 1 for k in range(8)}

    def test_invert_eta(self) -> None:
        order = 15
        eta = qpochhammer(Monomial(ONE, 1), EXACT, order).shift(Fraction(1, 24))
        inverse = eta.invert()
        expected = {Fraction(-1, 24) + n: p for n, p in enumerate(PARTITIONS)}
        assert inverse.integer_coefficients() == {k: v for k, v in expected.items() if k < inverse.real_order}
        assert inverse.floor == -1

    def test_invert_contract(self) -> None:
        rng = random.Random(7)
        for _ in range(5):
            series = _random_series(rng, 12)
            if not series:
                continue
            product = series * series.invert()
            assert product.agrees_with(QSeries.one(product.real_order))

    def test_invert_is_an_involution(self) -> None:
        series = _series({0: 2, Fraction(1, 2): Cyc8(1, 1), 3: -1}, 10)
        twice = series.invert().invert()
        assert twice.agrees_with(series)

    def test_invert_zero(self) -> None:
        with pytest.raises(NonInvertibleLeadingTerm):
            QSeries.zero(5).invert()

    def test_ring_axioms(self) -> None:
        rng = random.Random(11)
        a, b, c = (_random_series(rng, 10) for _ in range(3))
        assert ((a * b) * c).agrees_with(a * (b * c))
        assert (a * (b + c)).agrees_with(a * b + a * c)
        assert (a * b).agrees_with(b * a)

    def test_lattice_mismatch(self) -> None:
        with pytest.raises(LatticeMismatch):
            QSeries.one(5, denominator=24) + QSeries.one(5, denominator=12)
        with pytest.raises(LatticeMismatch):
            QSeries.from_terms({Fraction(1, 5): 1})

    def test_coefficient_beyond_order(self) -> None:
        with pytest.raises(PrecisionExhausted):
            QSeries.one(3).coefficient(3)

    def test_div_binomial(self) -> None:
        quotient = _series({0: 1, 2: 1}, 6).div_binomial(1, 1)
        assert quotient.integer_coefficients() == {0: 1, 1: 1, 2: 2, 3: 2, 4: 2, 5: 2}

    def test_div_binomial_negative_exponent(self) -> None:
        # 1/(1 - q^-1) = -q/(1 - q)
        quotient = QSeries.one(5).div_binomial(1, -1)
        assert quotient.integer_coefficients() == {1: -1, 2: -1, 3: -1, 4: -1, 5: -1}

    def test_to_json(self) -> None:
        series = _series({Fraction(1, 24): 1, Fraction(25, 24): -1})
        assert series.to_json() == [
            ["1/24", "1/1 + 0/1*z8 + 0/1*z8^2 + 0/1*z8^3"],
            ["25/24", "-1/1 + 0/1*z8 + 0/1*z8^2 + 0/1*z8^3"],
        ]


class TestQPochhammer:
    def test_empty_product(self) -> None:
        assert qpochhammer(Monomial(Cyc8(5), 2), 0, EXACT) == QSeries.one()

    def test_euler_function(self) -> None:
        series = qpochhammer(Monomial(ONE, 1), EXACT, 6)
        assert series.integer_coefficients() == {0: 1, 1: -1, 2: -1, 5: 1}

    def test_single_factor(self) -> None:
        series = qpochhammer(Monomial(ONE, 2), 1, EXACT, step=2)
        assert series.integer_coefficients() == {0: 1, 2: -1}

    def test_negative_starting_exponent(self) -> None:
        # (q^-1; q)_2 = (1 - q^-1)(1 - 1) = 0
        assert not qpochhammer(Monomial(ONE, -1), 2, 10)

    def test_divergent(self) -> None:
        with pytest.raises(DivergentProduct):
            qpochhammer(Monomial(ONE, 1), EXACT, 5, step=0)
        with pytest.raises(DivergentProduct):
            qpochhammer(Monomial(ONE, 1), EXACT, EXACT)


class TestJacobiSeries:
    def test_substitute_one(self) -> None:
        series = JacobiSeries.from_terms([(1, 2, 1)])
        assert series.substitute(Monomial(ONE)) == QSeries.from_terms({1: 1})

    def test_substitute_q(self) -> None:
        series = JacobiSeries.from_terms([(0, 1, 1), (1, -1, 1)])
        assert series.substitute(Monomial(ONE, 1)).integer_coefficients() == {1: 2}

    def test_substitution_is_multiplicative(self) -> None:
        left = JacobiSeries.from_terms([(0, 1, 1), (1, -1, 2), (Fraction(1, 2), 3, I)])
        right = JacobiSeries.from_terms([(0, 0, 1), (2, 2, -1), (1, -1, 3)])
        value = Monomial(I, 1)
        assert (left * right).substitute(value) == left.substitute(value) * right.substitute(value)

    def test_dzeta_at_one(self) -> None:
        assert JacobiSeries.from_terms([(0, Fraction(1, 2), 1)]).dzeta_at("one").coefficient(0) == Fraction(
            1, 2
        )
        assert not JacobiSeries.from_terms([(0, 1, 1), (0, -1, 1)]).dzeta_at("one")

    @pytest.mark.parametrize("power", [-2, -1, 0, 1, 2])
    def test_dzeta_at_q(self, power: int) -> None:
        derivative = JacobiSeries.from_terms([(0, power, 1)]).dzeta_at("q")
        assert derivative == QSeries.from_terms({power: power})

    def test_unknown_point(self) -> None:
        with pytest.raises(ValueError):
            JacobiSeries.one().dzeta_at("two")

    def test_jacobi_pochhammer_at_zeta_one(self) -> None:
        order = 12
        series = jacobi_qpochhammer(Monomial(ONE, 1, 1), EXACT, order)
        assert series.substitute(Monomial(ONE)).agrees_with(qpochhammer(Monomial(ONE, 1), EXACT, order))

    def test_jacobi_pochhammer_at_zeta_q_loses_precision(self) -> None:
        series = jacobi_qpochhammer(Monomial(ONE, 0, -1), EXACT, 12)
        assert series.upper.offset == 0
        with pytest.raises(PrecisionExhausted):
            jacobi_qpochhammer(Monomial(ONE, 1, 1), EXACT, 12, slope=0).substitute(Monomial(ONE, -1))

    def test_divide_one_minus_zeta(self) -> None:
        series = JacobiSeries.from_terms([(0, 0, 1), (0, 2, -1), (1, 1, 3), (1, -1, -3)])
        quotient = series.divide_one_minus_zeta()
        expected = JacobiSeries.from_terms([(0, 0, 1), (0, 1, 1), (1, -1, -3), (1, 0, -3)])
        assert quotient.first_mismatch(expected) is None

    def test_inexact_division(self) -> None:
        with pytest.raises(InexactDivision):
            JacobiSeries.from_terms([(0, 0, 1), (0, 1, 1)]).divide_one_minus_zeta()

    def test_window_too_small(self) -> None:
        series = JacobiSeries.from_terms([(0, 5, 1)])
        with pytest.raises(WindowTooSmall):
            series.first_mismatch(series, window=(-2, 2))
        assert series.first_mismatch(series, window=(-5, 5)) is None

    def test_torsion_substitution(self) -> None:
        # zeta -> e^{2 pi i (tau/2 + 1/4)} = i q^(1/2)
        series = JacobiSeries.from_terms([(0, 1, 1), (0, 2, 1)])
        assert series.substitute_torsion(Fraction(1, 2), Fraction(1, 4)) == QSeries.from_terms(
            {Fraction(1, 2): I, 1: -1}
        )
