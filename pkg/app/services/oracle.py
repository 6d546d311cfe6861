"""
Exhaustive enumeration oracle.

Walks every one of the 2^n paths breadth-first, replaying the volume
dynamics on a dense numpy array per path. Paths whose outcome is settled
are dropped from the frontier; when the frontier grows past
ORACLE_CHUNK_ROWS it is split and each half expanded depth-first, so memory
stays bounded at max_len = 26.
"""

import logging
from fractions import Fraction
from typing import Dict, List, Tuple

import numpy as np

from app.core.config.settings import settings
from app.core.exceptions import OracleLimitError, ValidationError
from app.models.book_types import InitMode
from app.models.series_types import OracleAvalancheLaw

logger = logging.getLogger(__name__)


class _Frontier:
    """Paths still alive at time `step`, one row each"""

    def __init__(self, prices: np.ndarray, volume: np.ndarray, started: np.ndarray, anchor: np.ndarray, last_trade: np.ndarray):
        self.prices = prices
        self.volume = volume
        self.started = started
        self.anchor = anchor
        self.last_trade = last_trade

    def __len__(self) -> int:
        return int(self.prices.shape[0])

    def take(self, rows) -> "_Frontier":
        return _Frontier(self.prices[rows], self.volume[rows], self.started[rows], self.anchor[rows], self.last_trade[rows])

    def branch(self) -> Tuple["_Frontier", np.ndarray]:
        """Duplicate every row; returns the doubled frontier and its +-1 steps"""
        doubled = _Frontier(
            np.repeat(self.prices, 2),
            np.repeat(self.volume, 2, axis=0),
            np.repeat(self.started, 2),
            np.repeat(self.anchor, 2),
            np.repeat(self.last_trade, 2),
        )
        steps = np.tile(np.array([1, -1], dtype=np.int64), len(self))
        return doubled, steps


def _check_len(max_len: int) -> None:
    if max_len < 1:
        raise ValidationError(f"max_len must be >= 1, got {max_len}")
    if max_len > settings.ORACLE_MAX_LEN:
        raise OracleLimitError(max_len, settings.ORACLE_MAX_LEN)


def _initial(mu: int, init_mode: InitMode, max_len: int) -> Tuple[_Frontier, int]:
    offset = max_len + 1
    width = 2 * max_len + mu + 3
    volume = np.zeros((1, width), dtype=np.int16)
    if init_mode == InitMode.FULL_BOOK:
        volume[0, offset:] = 1
    frontier = _Frontier(
        prices=np.zeros(1, dtype=np.int64),
        volume=volume,
        started=np.array([init_mode == InitMode.FULL_BOOK]),
        anchor=np.zeros(1, dtype=np.int64),
        last_trade=np.zeros(1, dtype=np.int64),
    )
    return frontier, offset


def _advance(frontier: _Frontier, mu: int, offset: int) -> Tuple[_Frontier, np.ndarray]:
    """One step of the dynamics for every branch; returns (children, trade mask)"""
    children, steps = frontier.branch()
    rows = np.arange(len(children))
    prev = children.prices
    children.volume[rows, prev + offset] = 0
    children.volume[rows, prev + mu + offset] += 1
    children.prices = prev + steps
    traded = children.volume[rows, children.prices + offset] > 0
    return children, traded


def brute_force_first_trade(mu: int, init_mode: InitMode, max_len: int) -> List[Fraction]:
    """Exact P[T1 = n] (or P[T~1 = n]) for n = 0..max_len by enumeration.

    Returns:
        list indexed by n; entry 0 is always 0
    """
    if mu < 1:
        raise ValidationError(f"mu must be >= 1, got {mu}")
    init_mode = InitMode(init_mode)
    _check_len(max_len)
    logger.info(f"[ORACLE] First trade, mu={mu}, mode={init_mode.value}, 2^{max_len} paths")
    counts = [0] * (max_len + 1)
    frontier, offset = _initial(mu, init_mode, max_len)

    def expand(front: _Frontier, step: int) -> None:
        while step < max_len and len(front):
            if len(front) > settings.ORACLE_CHUNK_ROWS:
                half = len(front) // 2
                expand(front.take(slice(0, half)), step)
                front = front.take(slice(half, None))
                continue
            front, traded = _advance(front, mu, offset)
            step += 1
            counts[step] += int(traded.sum())
            front = front.take(~traded)

    expand(frontier, 0)
    return [Fraction(c, 1 << n) for n, c in enumerate(counts)]


def brute_force_avalanche(mu: int, epsilon: int, max_len: int, init_mode: InitMode = InitMode.FULL_BOOK) -> OracleAvalancheLaw:
    """Exact law of the first full avalanche over all paths of length max_len.

    A path is resolved at time t when no trade has happened in
    (last_trade, t] and t - last_trade = epsilon; its avalanche length is
    last_trade - start. Mass of paths still unresolved at max_len is
    reported, never dropped. Lengths k <= max_len - epsilon are exact.
    """
    if mu < 1 or epsilon < 1:
        raise ValidationError(f"mu and epsilon must be >= 1, got ({mu}, {epsilon})")
    init_mode = InitMode(init_mode)
    _check_len(max_len)
    logger.info(f"[ORACLE] Avalanche, mu={mu}, eps={epsilon}, mode={init_mode.value}, 2^{max_len} paths")
    resolved: Dict[int, Fraction] = {}
    unresolved = [Fraction(0)]
    frontier, offset = _initial(mu, init_mode, max_len)

    def expand(front: _Frontier, step: int) -> None:
        while len(front):
            if step == max_len:
                unresolved[0] += Fraction(len(front), 1 << step)
                return
            if len(front) > settings.ORACLE_CHUNK_ROWS:
                half = len(front) // 2
                expand(front.take(slice(0, half)), step)
                front = front.take(slice(half, None))
                continue
            front, traded = _advance(front, mu, offset)
            step += 1
            starting = traded & ~front.started
            front.anchor = np.where(starting, step, front.anchor)
            front.started = front.started | starting
            front.last_trade = np.where(traded, step, front.last_trade)
            done = front.started & (step - front.last_trade >= epsilon)
            if done.any():
                lengths = (front.last_trade - front.anchor)[done]
                values, tallies = np.unique(lengths, return_counts=True)
                for value, tally in zip(values.tolist(), tallies.tolist()):
                    resolved[value] = resolved.get(value, Fraction(0)) + Fraction(tally, 1 << step)
                front = front.take(~done)

    expand(frontier, 0)
    return OracleAvalancheLaw(
        mu=mu,
        epsilon=epsilon,
        max_len=max_len,
        probabilities=dict(sorted(resolved.items())),
        unresolved_mass=unresolved[0],
        exact_through=max_len - epsilon,
    )


def enumerate_paths(length: int) -> np.ndarray:
    """All 2^length walks as an int64 array (2^length, length + 1)"""
    if length < 0:
        raise ValidationError(f"length must be >= 0, got {length}")
    _check_len(max(length, 1))
    codes = np.arange(1 << length, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(length, dtype=np.int64)[None, :]) & 1
    steps = 2 * bits - 1
    paths = np.zeros((1 << length, length + 1), dtype=np.int64)
    np.cumsum(steps, axis=1, out=paths[:, 1:])
    return paths
