import numpy as np
import pytest

from app.core.exceptions import InvariantViolation
from app.models.book_types import InitMode, RngStream, TradeKind, WalkPath
from app.services import batch_book
from app.services.batch_book import (
    classify,
    generate_block,
    ladder_mask,
    replay_prices,
    simulate_batch,
    volume_alpha_violations,
)
from app.services.oracle import enumerate_paths
from app.services.walk_and_book import detect_trades, generate_walk

SEED = 424242


def test_block_rows_match_single_walks():
    block = generate_block(SEED, 10, 5, 25)
    for row in range(5):
        walk = generate_walk(RngStream(master_seed=SEED, stream_index=10 + row), 25)
        assert tuple(block[row].tolist()) == walk.steps


def test_blocking_does_not_change_rows():
    whole = generate_block(SEED, 0, 8, 12)
    halves = np.vstack([generate_block(SEED, 0, 3, 12), generate_block(SEED, 3, 5, 12)])
    assert np.array_equal(whole, halves)


@pytest.mark.parametrize("mu", [1, 2, 3])
def test_best_ask_and_volume_agree_on_all_short_paths(mu):
    batch = replay_prices(enumerate_paths(10), mu, InitMode.FULL_BOOK, self_check=True)
    assert batch.trades[:, 0].all()
    assert batch.type_two[:, 0].all()


@pytest.mark.parametrize("mu", [1, 2, 4])
def test_volume_map_is_filled_from_best_ask_up(mu):
    assert volume_alpha_violations(enumerate_paths(10), mu) == 0


def test_volume_check_catches_a_wrong_best_ask(monkeypatch):
    original = batch_book._replay_best_ask
    monkeypatch.setattr(batch_book, "_replay_best_ask", lambda prices, mu: original(prices, mu) + 1)
    assert volume_alpha_violations(enumerate_paths(4), 1) > 0
    with pytest.raises(InvariantViolation):
        replay_prices(enumerate_paths(4), 1, InitMode.FULL_BOOK, self_check=True)


@pytest.mark.parametrize("init_mode", [InitMode.FULL_BOOK, InitMode.EMPTY_BOOK])
def test_batch_trades_match_path_replay(init_mode):
    batch = simulate_batch(SEED, 0, 40, 30, 2, init_mode, self_check=True)
    for row in range(batch.rows):
        path = WalkPath(steps=tuple(int(s) for s in batch.prices[row]))
        events = detect_trades(path, 2, init_mode, 1)
        assert np.nonzero(batch.trades[row])[0].tolist() == [e.time for e in events]
        kinds = [e.kind == TradeKind.TYPE_II for e in events]
        assert batch.type_two[row, batch.trades[row]].tolist() == kinds


def test_classify_uses_previous_trade_level():
    prices = np.array([[0, 1, 0, 1, 2]])
    trades = np.array([[True, True, False, True, True]])
    assert classify(prices, trades).tolist() == [[True, False, False, True, False]]


def test_ladder_mask():
    prices = np.array([[0, 1, 0, 1, 2], [0, -1, 0, 1, 0]])
    assert ladder_mask(prices).tolist() == [
        [True, True, False, False, True],
        [True, False, False, True, False],
    ]
