"""
Mid-price walks and the ask-side book dynamics, one path at a time.

At every step n >= 1 the volume at the previous price S_{n-1} is removed and
one order is added at S_{n-1} + mu; a trade happens at n when the level S_n
carries volume. In FullBook mode the best ask alpha_n is advanced alongside
and every step asserts that both descriptions agree.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict

from app.core.exceptions import ExcursionRejectedError, InvariantViolation, ValidationError
from app.models.book_types import BookState, InitMode, RngStream, SpreadParam, TradeEvent, TradeKind, WalkPath

logger = logging.getLogger(__name__)

MuLike = Union[SpreadParam, int]


def _mu(mu: MuLike) -> int:
    value = mu.mu if isinstance(mu, SpreadParam) else int(mu)
    if value < 1:
        raise ValidationError(f"Spread parameter mu must be >= 1, got {value}")
    return value


def generate_walk(rng: RngStream, horizon: int) -> WalkPath:
    """Draw a walk of `horizon` fair +-1 steps from the path's own stream"""
    if horizon < 0:
        raise ValidationError(f"horizon must be >= 0, got {horizon}")
    if horizon == 0:
        return WalkPath(steps=(0,))
    increments = rng.generator().integers(0, 2, size=horizon) * 2 - 1
    levels = [0]
    for inc in increments.tolist():
        levels.append(levels[-1] + inc)
    return WalkPath(steps=tuple(levels))


def initial_book(mu: MuLike, init_mode: InitMode) -> BookState:
    _mu(mu)
    init_mode = InitMode(init_mode)
    if init_mode == InitMode.FULL_BOOK:
        return BookState(time=0, best_ask=0, init_mode=init_mode, sparse_volume={}, filled_from=0)
    return BookState(time=0, init_mode=init_mode, sparse_volume={})


def _verify_full_book(state: BookState, price: int, traded: bool, mu: int) -> None:
    alpha = state.best_ask
    diagnostic = {"time": state.time, "price": price, "best_ask": alpha, "mu": mu}
    if not price <= alpha <= price + mu + 1:
        raise InvariantViolation("Best ask outside [S_n, S_n + mu + 1]", diagnostic)
    if traded != (alpha == price):
        raise InvariantViolation("Volume rule and best-ask rule disagree on the trade", diagnostic)
    for level, volume in state.sparse_volume.items():
        if (volume > 0) != (level >= alpha):
            raise InvariantViolation(f"Volume {volume} at level {level} contradicts the best ask", diagnostic)
    for level in range(alpha, state.filled_from):
        if level not in state.sparse_volume:
            raise InvariantViolation(f"Level {level} above the best ask is empty", diagnostic)
    first_implicit = state.filled_from
    while first_implicit in state.sparse_volume:
        first_implicit += 1
    if first_implicit < alpha:
        raise InvariantViolation(f"Initial fill at {first_implicit} lies below the best ask", diagnostic)


def step_book(state: BookState, mu: MuLike, prev_price: int, new_price: int) -> Tuple[BookState, Optional[TradeEvent]]:
    """Apply one step of the dynamics and report the trade at the new time.

    Called with state.time == 0 and new_price == prev_price it only performs
    the initial trade check at n = 0.

    Raises:
        ValidationError: the prices are not one tick apart
        InvariantViolation: FullBook volume and best-ask descriptions disagree
    """
    mu = _mu(mu)
    if state.time == 0 and new_price == prev_price:
        new_state = state
    else:
        if abs(new_price - prev_price) != 1:
            raise ValidationError(f"Price move {prev_price} -> {new_price} is not a single tick")
        volume: Dict[int, int] = dict(state.sparse_volume)
        volume[prev_price + mu] = state.volume(prev_price + mu) + 1
        volume[prev_price] = 0
        if state.filled_from is None or prev_price < state.filled_from:
            del volume[prev_price]
        best_ask = None
        if state.init_mode == InitMode.FULL_BOOK:
            alpha = state.best_ask
            best_ask = alpha + int(alpha == prev_price) - int(alpha == prev_price + mu + 1)
        new_state = state.model_copy(update={
            "time": state.time + 1,
            "best_ask": best_ask,
            "sparse_volume": volume,
        })

    traded = new_state.volume(new_price) > 0
    if new_state.init_mode == InitMode.FULL_BOOK:
        _verify_full_book(new_state, new_price, traded, mu)
    if not traded:
        return new_state, None

    kind = TradeKind.TYPE_I if new_price > state.last_trade_level else TradeKind.TYPE_II
    event = TradeEvent(
        time=new_state.time,
        level=new_price,
        kind=kind,
        intertrade_gap=new_state.time - state.last_trade_time,
        best_ask=new_state.best_ask,
    )
    new_state = new_state.model_copy(update={
        "last_trade_time": new_state.time,
        "last_trade_level": new_price,
    })
    return new_state, event


def detect_trades(path: WalkPath, mu: MuLike, init_mode: InitMode, epsilon: int) -> List[TradeEvent]:
    """Chronological trades of a path with Type and flash-crash flags"""
    mu = _mu(mu)
    if epsilon < 1:
        raise ValidationError(f"epsilon must be >= 1, got {epsilon}")
    steps = path.steps
    state = initial_book(mu, init_mode)
    events: List[TradeEvent] = []
    state, event = step_book(state, mu, steps[0], steps[0])
    if event is not None:
        events.append(event)
    for n in range(1, len(steps)):
        state, event = step_book(state, mu, steps[n - 1], steps[n])
        if event is None:
            continue
        if event.kind == TradeKind.TYPE_II and 1 <= event.intertrade_gap <= epsilon:
            event = event.model_copy(update={"flash_crash": True})
        events.append(event)
    return events


def best_ask_path(path: WalkPath, mu: MuLike) -> List[int]:
    """alpha_0..alpha_n of the FullBook recursion"""
    mu = _mu(mu)
    alphas = [0]
    for n in range(1, len(path.steps)):
        alpha, prev = alphas[-1], path.steps[n - 1]
        alphas.append(alpha + int(alpha == prev) - int(alpha == prev + mu + 1))
    return alphas


def simplified_trading_times(path: WalkPath) -> List[int]:
    """Strict ascending ladder times rho_1 < rho_2 < ..."""
    times: List[int] = []
    running_max = path.steps[0]
    for n in range(1, len(path.steps)):
        if path.steps[n] > running_max:
            running_max = path.steps[n]
            times.append(n)
    return times


def trading_excursions(path: WalkPath, mu: MuLike, init_mode: InitMode) -> List[Tuple[int, WalkPath]]:
    """Pieces e_i(n) = S(tau_{i-1} + n) - S(tau_{i-1}) between consecutive trades"""
    trades = [t.time for t in detect_trades(path, mu, init_mode, 1) if t.time > 0]
    starts = [0] + trades
    return [(start, path.shifted(start, end)) for start, end in zip(starts, trades)]


# ---------------------------------------------------------------------------
# path classes and the Type II decomposition
# ---------------------------------------------------------------------------

def _inside_band(levels: Sequence[int], mu: int) -> bool:
    return all(-mu < s <= 0 for s in levels)


def in_class_a(path: WalkPath, mu: MuLike) -> bool:
    """Stays in (-mu, 0] before the last step, ends at +1"""
    mu = _mu(mu)
    s = path.steps
    return len(s) >= 2 and s[-1] == 1 and _inside_band(s[:-1], mu)


def in_class_b(path: WalkPath, mu: MuLike) -> bool:
    """Stays in (-mu, 0] before the last step, which goes from 0 to -1"""
    mu = _mu(mu)
    s = path.steps
    return len(s) >= 2 and s[-2] == 0 and s[-1] == -1 and _inside_band(s[:-1], mu)


def in_class_c(path: WalkPath, mu: MuLike) -> bool:
    """A class-A path whose minimum before the last step is -mu + 1"""
    mu = _mu(mu)
    return in_class_a(path, mu) and min(path.steps[:-1]) == -mu + 1


def first_trade_type_is_one(excursion: WalkPath, mu: MuLike) -> bool:
    """Type I characterization of a path ending at its first trade:
    max before the trade is 0, the trade is at +1, and min stays above -mu."""
    mu = _mu(mu)
    before = excursion.steps[:-1]
    return max(before) == 0 and excursion.steps[-1] == 1 and min(before) > -mu


class Type2Decomposition(BaseModel):
    """K class-B segments followed by a class-C tail"""
    model_config = ConfigDict(frozen=True)

    K: int
    segments: Tuple[WalkPath, ...]
    tail: WalkPath
    boundaries: Tuple[int, ...]


def concatenate(pieces: Sequence[WalkPath]) -> WalkPath:
    """Glue shifted pieces end to start"""
    levels = [0]
    for piece in pieces:
        base = levels[-1]
        levels.extend(base + s for s in piece.steps[1:])
    return WalkPath(steps=tuple(levels))


def decompose_type2_excursion(excursion: WalkPath, mu: MuLike) -> Type2Decomposition:
    """Split a Type II terminated trading excursion into K class-B segments and a class-C tail.

    Raises:
        ExcursionRejectedError: the path does not end at a first trade of Type II
        InvariantViolation: the split pieces fail their class predicates
    """
    mu = _mu(mu)
    s = excursion.steps
    trades = [t for t in detect_trades(excursion, mu, InitMode.FULL_BOOK, 1) if t.time > 0]
    if len(trades) != 1 or trades[0].time != excursion.horizon:
        raise ExcursionRejectedError("Path is not a single trading excursion", steps=s)
    if trades[0].kind != TradeKind.TYPE_II:
        raise ExcursionRejectedError("Terminal trade is Type I", steps=s)

    t1 = excursion.horizon
    K = -s[t1 - 1]
    boundaries = [0] * (K + 1)
    limit = t1
    for i in range(K, 0, -1):
        level = -(i - 1)
        last = max(j for j in range(limit) if s[j] == level)
        boundaries[i] = last + 1
        limit = last + 1
    segments = tuple(excursion.shifted(boundaries[i - 1], boundaries[i]) for i in range(1, K + 1))
    tail = excursion.shifted(boundaries[K], t1)

    bad = [i for i, seg in enumerate(segments, start=1) if not in_class_b(seg, mu)]
    if bad or not in_class_c(tail, mu):
        raise InvariantViolation("Decomposition pieces fail their class predicates",
                                 {"steps": s, "bad_segments": bad, "tail": tail.steps, "mu": mu})
    if concatenate(segments + (tail,)) != excursion:
        raise InvariantViolation("Decomposition does not reconcatenate", {"steps": s})
    return Type2Decomposition(K=K, segments=segments, tail=tail, boundaries=tuple(boundaries))
