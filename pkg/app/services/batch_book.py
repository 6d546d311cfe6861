"""
Vectorized replay of the book dynamics for a block of paths.

Each row is one path drawn from its own RngStream, so a row is identical to
what generate_walk returns for the same (master_seed, stream_index) no
matter how the paths are blocked. FullBook rows advance the best ask by its
recursion; EmptyBook rows (and FullBook rows under BOOK_SELF_CHECK) replay a
dense volume array with one column per reachable level.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from app.core.config.settings import settings
from app.core.exceptions import InvariantViolation, ValidationError
from app.models.book_types import BatchTrades, InitMode, RngStream

logger = logging.getLogger(__name__)


def generate_block(master_seed: int, first_stream: int, count: int, horizon: int) -> np.ndarray:
    """Walks of streams first_stream..first_stream+count-1 as rows of an int64 array"""
    if count < 0 or horizon < 0:
        raise ValidationError(f"count and horizon must be >= 0, got ({count}, {horizon})")
    prices = np.zeros((count, horizon + 1), dtype=np.int64)
    for row in range(count):
        rng = RngStream(master_seed=master_seed, stream_index=first_stream + row).generator()
        steps = rng.integers(0, 2, size=horizon) * 2 - 1
        np.cumsum(steps, out=prices[row, 1:])
    return prices


def _replay_volume(prices: np.ndarray, mu: int, init_mode: InitMode,
                   best_ask: Optional[np.ndarray] = None) -> Tuple[np.ndarray, int]:
    """Trade mask from the dense volume array.

    With best_ask given, also counts (path, time, level) cells where
    "volume > 0" and "level >= best ask" disagree.
    """
    rows, cols = prices.shape
    horizon = cols - 1
    offset = horizon + 1
    width = 2 * horizon + mu + 3
    volume = np.zeros((rows, width), dtype=np.int32)
    if init_mode == InitMode.FULL_BOOK:
        volume[:, offset:] = 1
    levels = np.arange(width, dtype=np.int64) - offset
    index = np.arange(rows)
    trades = np.zeros((rows, cols), dtype=bool)
    mismatches = 0

    def compare(n: int) -> int:
        if best_ask is None:
            return 0
        return int(((volume > 0) != (levels[None, :] >= best_ask[:, n][:, None])).sum())

    trades[:, 0] = volume[:, offset] > 0
    mismatches += compare(0)
    for n in range(1, cols):
        prev = prices[:, n - 1] + offset
        volume[index, prev] = 0
        volume[index, prev + mu] += 1
        trades[:, n] = volume[index, prices[:, n] + offset] > 0
        mismatches += compare(n)
    return trades, mismatches


def volume_alpha_violations(prices: np.ndarray, mu: int) -> int:
    """Cells of the FullBook volume map that contradict volume > 0 <=> level >= best ask"""
    if mu < 1:
        raise ValidationError(f"mu must be >= 1, got {mu}")
    _, mismatches = _replay_volume(prices, mu, InitMode.FULL_BOOK, _replay_best_ask(prices, mu))
    return mismatches


def _replay_best_ask(prices: np.ndarray, mu: int) -> np.ndarray:
    rows, cols = prices.shape
    alpha = np.zeros((rows, cols), dtype=np.int64)
    for n in range(1, cols):
        prev_alpha = alpha[:, n - 1]
        prev = prices[:, n - 1]
        alpha[:, n] = prev_alpha + (prev_alpha == prev) - (prev_alpha == prev + mu + 1)
    return alpha


def classify(prices: np.ndarray, trades: np.ndarray) -> np.ndarray:
    """Type II mask: trade level not above the previous trade level (initially 0)"""
    rows, cols = prices.shape
    type_two = np.zeros_like(trades)
    last_level = np.zeros(rows, dtype=np.int64)
    for n in range(cols):
        hit = trades[:, n]
        type_two[:, n] = hit & (prices[:, n] <= last_level)
        last_level = np.where(hit, prices[:, n], last_level)
    return type_two


def replay_prices(prices: np.ndarray, mu: int, init_mode: InitMode, self_check: Optional[bool] = None,
                  first_stream: int = 0) -> BatchTrades:
    """Trades of given walks; rows are paths starting at 0"""
    if mu < 1:
        raise ValidationError(f"mu must be >= 1, got {mu}")
    init_mode = InitMode(init_mode)
    self_check = settings.BOOK_SELF_CHECK if self_check is None else self_check
    best_ask = None
    if init_mode == InitMode.FULL_BOOK:
        best_ask = _replay_best_ask(prices, mu)
        trades = best_ask == prices
        if self_check:
            if np.any(best_ask < prices) or np.any(best_ask > prices + mu + 1):
                rows, cols = np.nonzero((best_ask < prices) | (best_ask > prices + mu + 1))
                raise InvariantViolation("Best ask outside [S_n, S_n + mu + 1]",
                                         {"row": int(rows[0]), "time": int(cols[0]), "mu": mu})
            by_volume, mismatches = _replay_volume(prices, mu, init_mode, best_ask)
            if not np.array_equal(by_volume, trades):
                rows, cols = np.nonzero(by_volume != trades)
                raise InvariantViolation("Volume rule and best-ask rule disagree",
                                         {"row": int(rows[0]), "time": int(cols[0]), "mu": mu})
            if mismatches:
                raise InvariantViolation("Volume map is not filled exactly from the best ask up",
                                         {"cells": mismatches, "mu": mu})
    else:
        trades, _ = _replay_volume(prices, mu, init_mode)
    return BatchTrades(
        first_stream=first_stream,
        mu=mu,
        init_mode=init_mode,
        prices=prices,
        trades=trades,
        type_two=classify(prices, trades),
        best_ask=best_ask,
    )


def simulate_batch(master_seed: int, first_stream: int, count: int, horizon: int, mu: int,
                   init_mode: InitMode, self_check: Optional[bool] = None) -> BatchTrades:
    """Generate and replay a block of paths"""
    logger.debug(f"[SIMULATE] Block streams {first_stream}..{first_stream + count - 1}, horizon={horizon}")
    prices = generate_block(master_seed, first_stream, count, horizon)
    return replay_prices(prices, mu, init_mode, self_check, first_stream)


def ladder_mask(prices: np.ndarray) -> np.ndarray:
    """True at strict ascending ladder times; column 0 marks rho_0 = 0"""
    running = np.maximum.accumulate(prices, axis=1)
    mask = np.zeros(prices.shape, dtype=bool)
    mask[:, 1:] = prices[:, 1:] > running[:, :-1]
    mask[:, 0] = True
    return mask
