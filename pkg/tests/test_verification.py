import pytest

from app.models.verification_types import Budget, Suite
from app.services import verification


def test_published_tables_all_pass():
    results = verification.run_tables()
    failed = [r.name for r in results if not r.passed]
    assert not failed
    # 70 first-trade cells, 63 survival values, 20 rational forms
    assert len(results) > 153


@pytest.mark.parametrize("mu", [1, 2, 3])
def test_structural_lemmas_hold_on_all_short_paths(mu):
    violations = verification.check_structural_lemmas(mu, 10)
    assert violations == {
        "ladder_type_one": 0, "first_trade_type_one": 0, "type_two_bounds": 0, "decomposition": 0,
        "alpha_bounds": 0, "volume_alpha": 0,
    }


def test_tables_suite_report():
    report = verification.run_suite(Suite.TABLES)
    assert report.passed
    assert report.budget == Budget.QUICK
    assert {c.suite for c in report.checks} == {Suite.TABLES}
    assert all(c.status == "PASS" for c in report.checks)


@pytest.mark.slow
def test_oracle_suite_quick_budget():
    report = verification.run_suite(Suite.ORACLE, Budget.QUICK)
    assert report.passed, [c.name for c in report.checks if not c.passed]


@pytest.mark.slow
def test_limits_suite_quick_budget():
    report = verification.run_suite(Suite.LIMITS, Budget.QUICK, threads=1)
    assert report.passed, [c.name for c in report.checks if not c.passed]


@pytest.mark.slow
def test_montecarlo_suite_quick_budget():
    report = verification.run_suite(Suite.MONTECARLO, Budget.QUICK)
    assert report.passed, [c.name for c in report.checks if not c.passed]
