from fractions import Fraction

import mpmath
import pytest

from app.core.exceptions import SeriesError, ValidationError
from app.models.series_types import PathClass, RationalForm
from app.services import exact_series
from app.utils.rational_series import RationalSeries


class TestLadderLaw:
    @pytest.mark.parametrize("r, n, expected", [(1, 1, Fraction(1, 2)), (1, 3, Fraction(1, 8)), (1, 2, Fraction(0))])
    def test_first_passage_phi(self, r, n, expected):
        assert exact_series.first_passage_phi(r, n) == expected

    @pytest.mark.parametrize("k, expected", [(1, 1), (5, 2), (4, 0), (7, 5)])
    def test_first_passage_counts(self, k, expected):
        assert exact_series.count_first_passage_paths(k) == expected

    def test_phi_is_count_over_power_of_two(self):
        for k in range(1, 30, 2):
            assert exact_series.first_passage_phi(1, k) == Fraction(exact_series.count_first_passage_paths(k), 2 ** k)

    @pytest.mark.parametrize("epsilon, expected", [(1, Fraction(1, 2)), (2, Fraction(1, 2)), (3, Fraction(3, 8))])
    def test_survival_R(self, epsilon, expected):
        assert exact_series.survival_R(epsilon) == expected

    def test_phi_polynomial(self):
        assert exact_series.phi_polynomial(1, 4).coefficients == (0, Fraction(1, 2), 0, 0, 0)
        assert exact_series.phi_polynomial(3, 4).coefficients == (0, Fraction(1, 2), 0, Fraction(1, 8), 0)

    def test_pgf_R_matches_table(self):
        table = exact_series.ladder_law_table(3, 9)
        series = exact_series.pgf_R(9)
        assert all(series.coeff(n) == table.get(1, n) for n in range(1, 10))
        assert table.get(2, 2) == Fraction(1, 4)

    def test_epsilon_must_be_positive(self):
        with pytest.raises(ValidationError):
            exact_series.survival_R(0)


class TestSimplifiedAvalanche:
    def test_eps_one_is_geometric(self):
        series = exact_series.simplified_avalanche_pgf(1, 16)
        assert series.coefficients == tuple(Fraction(1, 2 ** (n + 1)) for n in range(17))

    def test_even_window_equals_odd_below(self):
        assert exact_series.simplified_avalanche_pgf(2, 20) == exact_series.simplified_avalanche_pgf(1, 20)

    @pytest.mark.parametrize("epsilon, mean, variance", [(1, Fraction(1), Fraction(2))])
    def test_moments_geometric_case(self, epsilon, mean, variance):
        moments = exact_series.simplified_moments(epsilon)
        assert moments.mean == mean
        assert moments.variance == variance

    def test_mean_eps_three(self):
        assert exact_series.simplified_moments(3).mean == Fraction(7, 3)

    @pytest.mark.parametrize("epsilon", range(1, 10))
    def test_closed_form_matches_pgf_derivatives(self, epsilon):
        assert exact_series.simplified_moments(epsilon) == exact_series.simplified_moments_from_pgf(epsilon)

    def test_printed_variance_divides_by_zero(self):
        with pytest.raises(SeriesError):
            exact_series.printed_variance(1)

    def test_transform_matches_series(self):
        z = 0.6
        value = exact_series.simplified_transform(3, z)
        truncated, bound = exact_series.simplified_avalanche_pgf(3, 200).evaluate(z)
        assert abs(value - truncated) <= bound + mpmath.mpf(10) ** -40


class TestFirstTrade:
    def test_class_masses(self):
        for mu in (1, 2, 3):
            assert exact_series.class_mass(PathClass.A, mu) == Fraction(mu, mu + 1)
            assert exact_series.class_mass(PathClass.C, mu) == Fraction(1, mu * (mu + 1))

    def test_class_a_partial_sums_approach_mass(self):
        for mu in (1, 2, 3):
            partial = exact_series.class_gf(PathClass.A, mu, 300).partial_sum()
            assert Fraction(mu, mu + 1) - partial < Fraction(1, 1000)
            assert partial <= Fraction(mu, mu + 1)

    @pytest.mark.parametrize("mu", [1, 2])
    def test_class_a_closed_form(self, mu):
        assert exact_series.class_gf(PathClass.A, mu, 30) == exact_series.closed_form_class_a(mu, 30)

    def test_mu_one_first_trade_is_geometric(self):
        assert exact_series.t1_pgf(1, 10).coefficients[1:] == tuple(Fraction(1, 2 ** n) for n in range(1, 11))

    @pytest.mark.parametrize("mu, n, expected", [
        (2, 4, Fraction(1, 16)),
        (2, 10, Fraction(21, 1024)),
        (3, 2, Fraction(0)),
        (3, 7, Fraction(5, 128)),
    ])
    def test_published_cells(self, mu, n, expected):
        assert exact_series.t1_pgf(mu, 10).coeff(n) == expected

    @pytest.mark.parametrize("mu, epsilon, expected", [
        (2, 5, Fraction(1, 4)),
        (4, 8, Fraction(69, 256)),
        (1, 9, Fraction(1, 512)),
        (5, 9, Fraction(63, 256)),
    ])
    def test_survival(self, mu, epsilon, expected):
        assert exact_series.t1_survival(mu, epsilon) == expected

    def test_type_split(self):
        for mu in (1, 2, 3, 4):
            split = exact_series.t1_split(mu, 400)
            assert abs(split.type_one.partial_sum() - Fraction(mu, mu + 1)) < Fraction(1, 1000)
            assert abs(split.type_two.partial_sum() - Fraction(1, mu + 1)) < Fraction(1, 1000)
            assert split.total == exact_series.t1_pgf(mu, 400)

    def test_d_index_is_geometric(self):
        d = exact_series.d_index_pgf(1, 60)
        assert d.coeff(1) == Fraction(1, 2)
        assert 1 - d.partial_sum() == Fraction(1, 2 ** 60)

    def test_coefficients_are_dyadic(self):
        for mu in (1, 2, 3, 5):
            assert exact_series.t1_pgf(mu, 40).is_dyadic()
            assert exact_series.full_avalanche_pgf(mu, 3, 40).is_dyadic()

    def test_transforms_match_series(self):
        z = 0.7
        with mpmath.workdps(50):
            for mu in (1, 3, 6):
                value = exact_series.t1_transform(mu, z)
                truncated, bound = exact_series.t1_pgf(mu, 200).evaluate(z)
                assert abs(value - truncated) <= bound + mpmath.mpf(10) ** -40
                one, two = exact_series.type_split_transform(mu, z)
                assert abs(one + two - value) < mpmath.mpf(10) ** -40
                tau_d, tau_bound = exact_series.first_type2_time_pgf(mu, 200).evaluate(z)
                assert abs(exact_series.tau_d_transform(mu, z) - tau_d) <= tau_bound + mpmath.mpf(10) ** -40

    def test_series_order_for(self):
        order = exact_series.series_order_for(0.5, 1e-6)
        assert 0.5 ** (order + 1) <= 1e-6 < 0.5 ** order
        with pytest.raises(ValidationError):
            exact_series.series_order_for(1.0, 1e-6)


class TestFullAvalanche:
    def test_mu_one_eps_two(self):
        expected = RationalForm(numerator=1, denominator=[4, -2, -1]).expand(20)
        assert exact_series.full_avalanche_pgf(1, 2, 20) == expected

    def test_mu_two_eps_three(self):
        expected = RationalForm(numerator=3, denominator=[8, -4, 0, -1]).expand(20)
        assert exact_series.full_avalanche_pgf(2, 3, 20) == expected

    def test_eps_one_mu_one_equals_simplified(self):
        assert exact_series.full_avalanche_pgf(1, 1, 20) == exact_series.simplified_avalanche_pgf(1, 20)

    @pytest.mark.parametrize("mu, epsilon, k, expected", [
        (1, 3, 8, Fraction(81, 2048)),
        (2, 5, 8, Fraction(37, 1024)),
        (3, 5, 6, Fraction(25, 512)),
        (2, 3, 4, Fraction(9, 128)),
    ])
    def test_published_cells(self, mu, epsilon, k, expected):
        assert exact_series.full_avalanche_pgf(mu, epsilon, 10).coeff(k) == expected

    def test_constant_term_is_q(self):
        assert exact_series.full_avalanche_pgf(3, 4, 5).coeff(0) == exact_series.t1_survival(3, 4)


class TestEmptyBook:
    def test_law_splits_into_types(self):
        law = exact_series.first_trade_law_empty(2, 20)
        assert law.total == exact_series.first_trade_pgf_empty(2, 20)
        assert law.total.is_probability_series()

    def test_type_two_part_differs_from_full_book(self):
        empty = exact_series.first_trade_law_empty(2, 10).type_two
        full = exact_series.t1_split(2, 10).type_two
        assert [empty.coeff(n) for n in range(4, 8)] == [Fraction(1, 16), Fraction(1, 32), Fraction(1, 16), Fraction(5, 128)]
        assert [full.coeff(n) for n in range(4, 8)] == [Fraction(1, 16), Fraction(1, 32), Fraction(3, 64), Fraction(1, 32)]
        assert exact_series.first_trade_law_empty(1, 10).type_two == exact_series.t1_split(1, 10).type_two

    def test_reading_report_has_every_combination(self):
        from app.models.book_types import InitMode
        from app.services.oracle import brute_force_first_trade

        oracle = brute_force_first_trade(2, InitMode.EMPTY_BOOK, 12)
        readings = exact_series.empty_book_reading_report(2, oracle)
        assert len(readings) == 8
        assert all(r.compared_through == 12 for r in readings)


def test_reference_tables_shape():
    tables = exact_series.table_reference()
    assert sorted(tables.first_trade) == list(range(1, 8))
    assert sum(len(row) for row in tables.first_trade.values()) == 70
    assert sum(len(row) for row in tables.first_trade_survival.values()) == 63
    assert sum(len(forms) for forms in tables.full_avalanche_forms.values()) == 20


def test_rational_form_prints_like_the_table():
    assert str(RationalForm(numerator=3, denominator=[8, -4, 0, -1])) == "3/(8-4z-z^3)"
    assert isinstance(RationalForm(numerator=1, denominator=[2, -1]).expand(3), RationalSeries)
