from fractions import Fraction

import numpy as np
import pytest

from app.core.exceptions import OracleLimitError, ValidationError
from app.models.book_types import InitMode
from app.services import exact_series
from app.services.oracle import brute_force_avalanche, brute_force_first_trade, enumerate_paths

MAX_LEN = 14


@pytest.mark.parametrize("mu, init_mode, n, expected", [
    (2, InitMode.FULL_BOOK, 4, Fraction(1, 16)),
    (3, InitMode.FULL_BOOK, 2, Fraction(0)),
    (1, InitMode.EMPTY_BOOK, 3, Fraction(1, 8)),
])
def test_small_first_trade_cases(mu, init_mode, n, expected):
    assert brute_force_first_trade(mu, init_mode, n)[n] == expected


@pytest.mark.parametrize("mu", [1, 2, 3, 4])
def test_first_trade_series_matches_enumeration(mu):
    counted = brute_force_first_trade(mu, InitMode.FULL_BOOK, MAX_LEN)
    assert list(exact_series.t1_pgf(mu, MAX_LEN).coefficients) == counted


@pytest.mark.parametrize("mu", [1, 2, 3])
def test_empty_book_series_matches_enumeration(mu):
    counted = brute_force_first_trade(mu, InitMode.EMPTY_BOOK, MAX_LEN)
    assert list(exact_series.first_trade_pgf_empty(mu, MAX_LEN).coefficients) == counted


@pytest.mark.parametrize("mu, epsilon", [(1, 1), (1, 3), (2, 2), (2, 3), (3, 4)])
def test_avalanche_series_matches_enumeration(mu, epsilon):
    law = brute_force_avalanche(mu, epsilon, MAX_LEN)
    series = exact_series.full_avalanche_pgf(mu, epsilon, MAX_LEN)
    for k in range(law.exact_through + 1):
        assert law.probabilities.get(k, Fraction(0)) == series.coeff(k)


def test_avalanche_mass_is_conserved():
    law = brute_force_avalanche(2, 3, 12)
    assert sum(law.probabilities.values(), Fraction(0)) + law.unresolved_mass == 1
    assert law.unresolved_mass > 0
    assert law.resolved_lengths() == [k for k in sorted(law.probabilities) if k <= 9]


def test_empty_book_avalanche_mass_is_conserved():
    law = brute_force_avalanche(1, 2, 12, InitMode.EMPTY_BOOK)
    assert sum(law.probabilities.values(), Fraction(0)) + law.unresolved_mass == 1


def test_refuses_long_enumerations(small_oracle):
    with pytest.raises(OracleLimitError) as excinfo:
        brute_force_first_trade(1, InitMode.FULL_BOOK, small_oracle + 1)
    assert excinfo.value.limit == small_oracle
    with pytest.raises(OracleLimitError):
        enumerate_paths(small_oracle + 1)


def test_rejects_bad_arguments():
    with pytest.raises(ValidationError):
        brute_force_first_trade(0, InitMode.FULL_BOOK, 4)
    with pytest.raises(ValidationError):
        brute_force_avalanche(1, 0, 4)


def test_enumerate_paths_lists_every_walk():
    paths = enumerate_paths(4)
    assert paths.shape == (16, 5)
    assert (paths[:, 0] == 0).all()
    assert (np.abs(np.diff(paths, axis=1)) == 1).all()
    assert len({tuple(row) for row in paths.tolist()}) == 16
