import math

import pytest

from app.core.exceptions import InvariantViolation, SeriesTruncationError, ValidationError
from app.models.limit_types import LaplaceArg
from app.services import scaling_limits

SIMPLIFIED_AT_ONE = 0.5371932
TANH_AT_ONE = math.sqrt(2.0) * math.tanh(math.sqrt(2.0))


class TestClosedForms:
    def test_erf(self):
        assert scaling_limits.erf_eval(1.0) == pytest.approx(0.842700792949715, abs=1e-15)

    def test_simplified_limit_value(self):
        value = scaling_limits.simplified_limit_laplace(LaplaceArg(lam=1.0, epsilon_c=1.0))
        assert value == pytest.approx(SIMPLIFIED_AT_ONE, abs=1e-6)

    def test_simplified_limit_decreases_in_lambda(self):
        values = [scaling_limits.simplified_limit_laplace(LaplaceArg(lam=lam, epsilon_c=1.0)) for lam in (0.1, 1.0, 10.0)]
        assert values == sorted(values, reverse=True)
        assert all(0 < v < 1 for v in values)

    def test_lambda_alias(self):
        assert LaplaceArg(**{"lambda": 2.0, "epsilon_c": 1.0}).lam == 2.0

    @pytest.mark.parametrize("epsilon_c", [0.5, 1.0, 2.0])
    def test_limit_moments(self, epsilon_c):
        mean, variance = scaling_limits.limit_moments(epsilon_c)
        assert mean == pytest.approx(epsilon_c, rel=1e-4)
        assert variance == pytest.approx(4 * epsilon_c ** 2 / 3, rel=1e-4)

    def test_g_density(self):
        assert scaling_limits.excursion_density_g(1.0) == pytest.approx(0.398942, abs=1e-6)
        assert scaling_limits.excursion_density_g(4.0) / scaling_limits.excursion_density_g(1.0) == pytest.approx(1 / 8)
        with pytest.raises(ValidationError):
            scaling_limits.excursion_density_g(0.0)

    def test_g_transform(self):
        assert scaling_limits.g_transform_quadrature(1.0) == pytest.approx(math.sqrt(2.0), abs=1e-7)


class TestH:
    def test_wide_band_approaches_g(self):
        assert scaling_limits.h_density(1.0, 10.0) == pytest.approx(scaling_limits.excursion_density_g(1.0), rel=1e-12)

    @pytest.mark.parametrize("x", [0.6, 1.5, 3.0])
    def test_image_and_dual_sums_agree(self, x):
        images, _ = scaling_limits._h_images(x, 1.0, 40, True)
        dual, _ = scaling_limits._h_dual(x, 1.0, 40)
        assert images == pytest.approx(dual, rel=1e-9)

    def test_sign_variant_differs(self):
        assert scaling_limits.h_density(1.0, 1.0, alternating=False) != pytest.approx(scaling_limits.h_density(1.0, 1.0))

    def test_h_is_positive(self):
        assert scaling_limits.h_minimum(1.0, high=50.0) > 0
        assert scaling_limits.h_density(1e3, 1.0) >= 0

    def test_transform_matches_tanh(self):
        check = scaling_limits.h_transform_quadrature(1.0, 1.0)
        assert check.integral == pytest.approx(1.256367, abs=1e-6)
        assert check.tanh_target == pytest.approx(TANH_AT_ONE)
        assert check.matches_tanh

    @pytest.mark.parametrize("lam, mu_c", [(0.5, 0.5), (2.0, 1.0), (1.0, 2.0)])
    def test_transform_grid(self, lam, mu_c):
        assert scaling_limits.h_transform_quadrature(lam, mu_c).matches_tanh

    def test_wide_band_survival_is_g_survival(self):
        assert scaling_limits.h_survival(1.0, 10.0) == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-12)

    def test_rejects_non_positive_x(self):
        with pytest.raises(ValidationError):
            scaling_limits.h_series(-1.0, 1.0)


class TestFullLimit:
    def test_wide_band_equals_simplified(self):
        arg = LaplaceArg(lam=1.0, epsilon_c=1.0, mu_c=50.0)
        assert abs(scaling_limits.full_limit_laplace(arg) - scaling_limits.simplified_limit_laplace(arg)) <= 1e-6

    def test_near_integral_two_ways(self):
        assert abs(scaling_limits.quadrature_consistency(LaplaceArg(lam=1.0, epsilon_c=1.0, mu_c=1.0))) <= 1e-6

    def test_limit_table(self):
        rows = scaling_limits.limit_table([0.5, 1.0, 2.0], 1.0, 1.0)
        assert [r.lam for r in rows] == [0.5, 1.0, 2.0]
        assert rows[1].simplified == pytest.approx(SIMPLIFIED_AT_ONE, abs=1e-6)
        fulls = [r.full for r in rows]
        assert fulls == sorted(fulls, reverse=True)
        assert all(0 < f < 1 for f in fulls)


class TestHyperbolic:
    def test_entries(self):
        entries = scaling_limits.hyperbolic_coefficients(1.0, 1.0)
        assert entries.tanh_term == pytest.approx(TANH_AT_ONE, rel=1e-12)
        assert entries.coth_term - entries.csch_term == pytest.approx(entries.tanh_term, rel=1e-12)
        assert entries.csch_term / entries.coth_term == pytest.approx(entries.sech_sq_alternate, rel=1e-12)
        assert entries.identity_residual <= scaling_limits.IDENTITY_TOL

    @pytest.mark.parametrize("s", [1e-3, 0.1, 10.0, 100.0])
    def test_identity_holds_across_scales(self, s):
        assert scaling_limits.hyperbolic_coefficients(s, 1.0).identity_residual <= scaling_limits.IDENTITY_TOL

    def test_identity_failure_is_an_invariant_violation(self, monkeypatch):
        monkeypatch.setattr(scaling_limits, "IDENTITY_TOL", -1.0)
        with pytest.raises(InvariantViolation):
            scaling_limits.hyperbolic_coefficients(1.0, 1.0)


class TestConvergence:
    def test_scaled_spread_must_be_positive(self):
        with pytest.raises(ValidationError):
            scaling_limits.convergence_study_t1(0.05, 1.0, [100])

    def test_series_and_resolvent_agree(self):
        series, method = scaling_limits.discrete_t1_value(3, 0.9, "series")
        resolvent, other = scaling_limits.discrete_t1_value(3, 0.9, "resolvent")
        assert (method, other) == ("series", "resolvent")
        assert series == pytest.approx(resolvent, abs=1e-12)

    def test_series_mode_refuses_uncertifiable_orders(self):
        with pytest.raises(SeriesTruncationError):
            scaling_limits.discrete_t1_value(100, math.exp(-1e-4), "series")

    def test_auto_switches_to_resolvent(self):
        _, method = scaling_limits.discrete_t1_value(100, math.exp(-1e-4))
        assert method == "resolvent"

    def test_t1_transform_converges_at_half_order(self):
        report = scaling_limits.convergence_study_t1(1.0, 1.0, (100, 1000, 10000))
        assert report.target == pytest.approx(TANH_AT_ONE)
        assert abs(report.rows[-1].scaled_error) <= 0.05
        assert abs(report.rows[-1].scaled_error) < abs(report.rows[0].scaled_error)
        assert report.fitted_order == pytest.approx(0.5, abs=0.15)

    def test_t1_error_ratios(self):
        report = scaling_limits.convergence_study_t1(1.0, 1.0)
        assert len(report.error_ratios) == 3
        assert all(1.6 <= r <= 2.6 for r in report.error_ratios)

    def test_simplified_transform_converges(self):
        report = scaling_limits.convergence_study_simplified(1.0, 1.0, (100, 1000, 10000))
        assert report.rows[-1].discrete_value == pytest.approx(SIMPLIFIED_AT_ONE, rel=0.01)
        assert 0.35 <= report.fitted_order <= 0.65
        assert report.diagnostic_rows[-1].discrete_value == pytest.approx(math.sqrt(2 / math.pi), rel=0.01)

    def test_split_readings(self):
        report = scaling_limits.convergence_study_split(1.0, 1.0, (100, 400, 1600))
        assert report.type_two_reading == "n^-1/2 coefficient"
        assert report.tau_d_reading == "sech(x)^2"
        assert [row.n for row in report.rows] == [100, 400, 1600]
