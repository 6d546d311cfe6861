from fractions import Fraction

import pytest

from app.core.exceptions import NonUnitConstantTermError, ValidationError
from app.services.exact_series import series_arith
from app.utils.rational_series import RationalSeries

ORDER = 12


def test_reciprocal_of_one_minus_half_z_is_geometric():
    series = RationalSeries([1, Fraction(-1, 2)], ORDER)
    inverse = series_arith("reciprocal", series)
    assert inverse.coefficients == tuple(Fraction(1, 2 ** n) for n in range(ORDER + 1))


def test_product_with_reciprocal_is_one():
    a = RationalSeries([3, 1, Fraction(-2, 5), 0, 7], ORDER)
    assert series_arith("mul", a, a.reciprocal()) == RationalSeries.one(ORDER)


def test_reciprocal_needs_nonzero_constant_term():
    with pytest.raises(NonUnitConstantTermError):
        RationalSeries([0, 1], ORDER).reciprocal()


def test_arith_rejects_missing_operands():
    a = RationalSeries.one(ORDER)
    with pytest.raises(ValidationError):
        series_arith("add", a)
    with pytest.raises(ValidationError):
        series_arith("scale", a)
    with pytest.raises(ValidationError):
        series_arith("pow", a, a)


def test_mixed_orders_truncate_to_smaller():
    a = RationalSeries([1, 1, 1], 2)
    b = RationalSeries([1, 1, 1, 1, 1], 4)
    assert (a + b).order == 2
    assert (a * b).order == 2


def test_from_counts_divides_by_powers_of_two():
    series = RationalSeries.from_counts([0, 1, 1, 2], 3)
    assert series.coefficients == (Fraction(0), Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))
    assert series.is_dyadic()
    assert series.is_probability_series()


def test_geometric_and_partial_sum():
    half_z = RationalSeries.monomial(1, Fraction(1, 2), ORDER)
    geometric = half_z.geometric()
    assert geometric.coeff(5) == Fraction(1, 32)
    assert geometric.partial_sum(2) == Fraction(7, 4)
    with pytest.raises(ValidationError):
        geometric.coeff(ORDER + 5)


def test_evaluate_reports_certified_tail():
    series = RationalSeries([0] + [Fraction(1, 2 ** n) for n in range(1, 21)], 20)
    value, bound = series.evaluate(0.5)
    exact = Fraction(1, 3)
    assert abs(float(value) - float(exact)) <= float(bound) + 1e-30
    assert float(bound) < 1e-6


def test_evaluate_rejects_z_outside_unit_interval():
    with pytest.raises(ValidationError):
        RationalSeries.one(3).evaluate(2)
