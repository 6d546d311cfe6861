import pytest

from app.core.exceptions import ValidationError
from app.utils.validator import Validator


def test_positive_int():
    assert Validator.validate_positive_int("--mu", 3) == 3
    assert Validator.validate_positive_int("--seed", 0, minimum=0) == 0
    for bad in (0, None, True, 2.5):
        with pytest.raises(ValidationError):
            Validator.validate_positive_int("--mu", bad)


def test_positive_float():
    assert Validator.validate_positive_float("--epsilon", 0.25) == 0.25
    for bad in (0.0, -1.0, float("inf"), float("nan"), None):
        with pytest.raises(ValidationError):
            Validator.validate_positive_float("--epsilon", bad)


def test_grids():
    assert Validator.validate_grid("--lambda-grid", "0.1, 1,10") == [0.1, 1.0, 10.0]
    assert Validator.validate_int_grid("--n-grid", "100,400") == [100, 400]
    for bad in ("", "a,b", "1,0"):
        with pytest.raises(ValidationError):
            Validator.validate_grid("--lambda-grid", bad)
    with pytest.raises(ValidationError):
        Validator.validate_int_grid("--n-grid", "100,1.5")


def test_order_defaults_and_limit(monkeypatch):
    from app.core.config.settings import settings

    monkeypatch.setattr(settings, "DEFAULT_TRUNCATION", 32)
    monkeypatch.setattr(settings, "MAX_SERIES_ORDER", 64)
    assert Validator.validate_order(None) == 32
    with pytest.raises(ValidationError):
        Validator.validate_order(65)


def test_require_names_missing_flags():
    Validator.require("q", mu=1, epsilon=2)
    with pytest.raises(ValidationError, match="--first-path"):
        Validator.require("trades", mu=1, first_path=None)


def test_require_accepts_a_target_flag():
    Validator.require("exact", target="t1")
    with pytest.raises(ValidationError, match="--target"):
        Validator.require("limit", target=None)


def test_choice():
    assert Validator.validate_choice("--suite", "tables", ["tables", "all"]) == "tables"
    with pytest.raises(ValidationError):
        Validator.validate_choice("--suite", "other", ["tables", "all"])
