"""
Avalanche extraction and seeded Monte Carlo estimation.

Per-path functions work on WalkPath objects through walk_and_book; the
estimator replays blocks of paths with batch_book and tallies one value per
path. Blocks are keyed by stream index, so the tally only depends on the
configuration and the master seed.
"""

import logging
import math
from collections import Counter
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from app.core.config.settings import settings
from app.core.exceptions import SeriesTruncationError, UndefinedMomentsError, ValidationError
from app.core.worker_pool import run_blocks, split_blocks
from app.models.avalanche_types import (
    AvalancheConfig,
    AvalancheMode,
    AvalancheRecord,
    Censored,
    EmpiricalDistribution,
    MomentEstimate,
    Quantity,
    TailFit,
    TwoSampleCheck,
)
from app.models.book_types import BatchTrades, InitMode, WalkPath
from app.services import exact_series
from app.services.batch_book import ladder_mask, simulate_batch
from app.services.walk_and_book import detect_trades, simplified_trading_times

logger = logging.getLogger(__name__)

AvalancheOutcome = Union[AvalancheRecord, Censored]

# marks "no further trade" in next-trade arrays
_NO_TRADE = np.iinfo(np.int64).max // 4


def _check_epsilon(epsilon: int) -> None:
    if epsilon < 1:
        raise ValidationError(f"epsilon must be >= 1, got {epsilon}")


def _first_avalanche(times: Sequence[int], flash: Sequence[bool], horizon: int, epsilon: int,
                     mode: AvalancheMode) -> AvalancheOutcome:
    """Window consecutive gaps of `times` (times[0] is the start) until one exceeds epsilon"""
    gaps: List[int] = []
    crash = False
    for i in range(1, len(times)):
        gap = times[i] - times[i - 1]
        if gap > epsilon:
            break
        gaps.append(gap)
        crash = crash or bool(flash[i])
    else:
        # no later trade observed: the closing gap is certified only if the
        # path runs at least epsilon steps past the last trade
        if horizon - times[-1] < epsilon:
            return Censored(observed_until=horizon, partial_length=sum(gaps))
    return AvalancheRecord(
        length=sum(gaps),
        trade_count=len(gaps),
        mode=mode,
        contains_flash_crash=crash,
        start=times[0],
        gaps=tuple(gaps),
    )


def simplified_avalanche_length(path: WalkPath, epsilon: int) -> AvalancheOutcome:
    """L_eps = R_1 + ... + R_k over ladder gaps, first gap > eps excluded"""
    _check_epsilon(epsilon)
    times = [0] + simplified_trading_times(path)
    return _first_avalanche(times, [False] * len(times), path.horizon, epsilon, AvalancheMode.SIMPLIFIED)


def simplified_length_from_trades(path: WalkPath, mu: int, epsilon: int) -> AvalancheOutcome:
    """Same quantity computed from the FullBook trade list restricted to new-maximum trades"""
    _check_epsilon(epsilon)
    times = [0] + [
        event.time for event in detect_trades(path, mu, InitMode.FULL_BOOK, epsilon)
        if event.time > 0 and event.level > max(path.steps[:event.time])
    ]
    return _first_avalanche(times, [False] * len(times), path.horizon, epsilon, AvalancheMode.SIMPLIFIED)


def full_avalanche_length(path: WalkPath, mu: int, epsilon: int, init_mode: InitMode) -> AvalancheOutcome:
    """L*_{mu,eps} over all-trade gaps.

    FullBook avalanches start at the trade at time 0; EmptyBook avalanches
    start at the first trade, after which the book behaves as a full one.
    """
    _check_epsilon(epsilon)
    events = detect_trades(path, mu, init_mode, epsilon)
    if not events:
        return Censored(observed_until=path.horizon, reason="no first trade within the horizon")
    times = [e.time for e in events]
    flash = [e.flash_crash for e in events]
    return _first_avalanche(times, flash, path.horizon, epsilon, AvalancheMode.FULL)


# ---------------------------------------------------------------------------
# vectorized extraction on a block
# ---------------------------------------------------------------------------

def _next_after(mask: np.ndarray) -> np.ndarray:
    """For every column t, the first marked column > t, else _NO_TRADE"""
    cols = mask.shape[1]
    marked = np.where(mask, np.arange(cols, dtype=np.int64)[None, :], _NO_TRADE)
    suffix = np.minimum.accumulate(marked[:, ::-1], axis=1)[:, ::-1]
    nxt = np.full(mask.shape, _NO_TRADE, dtype=np.int64)
    nxt[:, :-1] = suffix[:, 1:]
    return nxt


def avalanche_batch(mask: np.ndarray, start: np.ndarray, started: np.ndarray, epsilon: int,
                    type_two: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """First avalanche of every row.

    Returns:
        (length, trade_count, flash_crash, valid); invalid rows are censored
    """
    horizon = mask.shape[1] - 1
    idx = np.arange(horizon + 1, dtype=np.int64)[None, :]
    nxt = _next_after(mask)
    closes = np.where(nxt < _NO_TRADE, nxt - idx > epsilon, horizon - idx >= epsilon)
    certified = mask & (idx >= start[:, None]) & closes
    end = certified.argmax(axis=1)
    valid = started & certified.any(axis=1)
    inside = mask & (idx > start[:, None]) & (idx <= end[:, None])
    counts = inside.sum(axis=1)
    flash = (inside & type_two).any(axis=1) if type_two is not None else np.zeros(len(start), dtype=bool)
    return end - start, counts, flash, valid


def _first_marked(mask: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(first marked column at t >= 1, whether any)"""
    tail = mask[:, 1:]
    return tail.argmax(axis=1) + 1, tail.any(axis=1)


def block_values(batch: BatchTrades, quantity: Quantity, epsilon: int) -> Tuple[np.ndarray, np.ndarray]:
    """(values, valid) of the quantity for every row of a replayed block"""
    quantity = Quantity(quantity)
    rows = batch.rows
    if quantity == Quantity.SIMPLIFIED_LENGTH:
        zero = np.zeros(rows, dtype=np.int64)
        length, _, _, valid = avalanche_batch(ladder_mask(batch.prices), zero, np.ones(rows, dtype=bool), epsilon)
        return length, valid
    if quantity == Quantity.FULL_LENGTH:
        if batch.init_mode == InitMode.FULL_BOOK:
            start, started = np.zeros(rows, dtype=np.int64), np.ones(rows, dtype=bool)
        else:
            start, started = _first_marked(batch.trades)
        length, _, _, valid = avalanche_batch(batch.trades, start, started, epsilon, batch.type_two)
        return length, valid
    if quantity == Quantity.FIRST_TRADE_TIME:
        return _first_marked(batch.trades)
    # D and tau_D: first Type II trade among tau_1, tau_2, ...
    tau_d, valid = _first_marked(batch.type_two)
    if quantity == Quantity.TIME_TO_FIRST_TYPE_II:
        return tau_d, valid
    idx = np.arange(batch.horizon + 1)[None, :]
    index = (batch.trades & (idx >= 1) & (idx <= tau_d[:, None])).sum(axis=1)
    return index, valid


def _tally_block(task: Tuple[AvalancheConfig, Quantity, int, int]) -> EmpiricalDistribution:
    config, quantity, first, count = task
    batch = simulate_batch(config.master_seed, first, count, config.effective_horizon, config.mu, config.init_mode)
    values, valid = block_values(batch, quantity, config.epsilon)
    kept, tallies = np.unique(values[valid], return_counts=True)
    counts = {int(v): int(c) for v, c in zip(kept.tolist(), tallies.tolist())}
    logger.debug(f"[SIMULATE] Block {first}: {int(valid.sum())} kept, {count - int(valid.sum())} censored")
    return EmpiricalDistribution(
        counts=counts,
        n_samples=int(valid.sum()),
        master_seed=config.master_seed,
        censored_count=count - int(valid.sum()),
        quantity=quantity,
        config=config.model_copy(update={"n_paths": count}),
    )


def merge(first: EmpiricalDistribution, second: EmpiricalDistribution) -> EmpiricalDistribution:
    """Sum two tallies of the same quantity and configuration"""
    if first.quantity != second.quantity or first.master_seed != second.master_seed:
        raise ValidationError("Only tallies of the same quantity and seed can be merged")
    config = first.config
    if first.config is not None and second.config is not None:
        left = first.config.model_dump(exclude={"n_paths"})
        right = second.config.model_dump(exclude={"n_paths"})
        if left != right:
            raise ValidationError("Only tallies of the same configuration can be merged", {"first": left, "second": right})
        config = first.config.model_copy(update={"n_paths": first.config.n_paths + second.config.n_paths})
    counts = Counter(first.counts)
    counts.update(second.counts)
    return EmpiricalDistribution(
        counts=dict(counts),
        n_samples=first.n_samples + second.n_samples,
        master_seed=first.master_seed,
        censored_count=first.censored_count + second.censored_count,
        quantity=first.quantity,
        config=config,
    )


def estimate_distribution(config: AvalancheConfig, quantity: Quantity, threads: Optional[int] = None,
                          block_size: Optional[int] = None) -> EmpiricalDistribution:
    """Seeded Monte Carlo tally of `quantity` over config.n_paths paths.

    Path i always uses stream i of the master seed, so the result does not
    depend on threads or block_size.
    """
    quantity = Quantity(quantity)
    blocks = split_blocks(config.n_paths, block_size)
    logger.info(
        f"[SIMULATE] {quantity.value}: mu={config.mu}, eps={config.epsilon}, mode={config.init_mode.value}, "
        f"paths={config.n_paths}, horizon={config.effective_horizon}, blocks={len(blocks)}"
    )
    parts = run_blocks(_tally_block, [(config, quantity, first, count) for first, count in blocks], threads)
    result = parts[0]
    for part in parts[1:]:
        result = merge(result, part)
    if result.censored_count:
        logger.warning(f"[SIMULATE] {result.censored_count} of {config.n_paths} runs censored")
    return result


def sample_moments(dist: EmpiricalDistribution) -> MomentEstimate:
    """Unbiased mean and variance with analytic standard errors.

    Raises:
        UndefinedMomentsError: fewer than two uncensored samples
    """
    n = dist.n_samples
    if n < 2:
        raise UndefinedMomentsError()
    values = np.array(list(dist.counts.keys()), dtype=np.float64)
    weights = np.array(list(dist.counts.values()), dtype=np.float64)
    mean = float(np.dot(values, weights) / n)
    centered = values - mean
    variance = float(np.dot(centered ** 2, weights) / (n - 1))
    m4 = float(np.dot(centered ** 4, weights) / n)
    var_of_var = max(0.0, (m4 - (n - 3) / (n - 1) * variance ** 2) / n)
    return MomentEstimate(
        mean=mean,
        variance=variance,
        mean_se=math.sqrt(variance / n),
        variance_se=math.sqrt(var_of_var),
        n_samples=n,
    )


def _gap_block(task: Tuple[AvalancheConfig, int, int]) -> Tuple[np.ndarray, np.ndarray]:
    config, first, count = task
    batch = simulate_batch(config.master_seed, first, count, config.effective_horizon, config.mu, InitMode.FULL_BOOK)
    first_trade, has_first = _first_marked(batch.trades)
    idx = np.arange(batch.horizon + 1)[None, :]
    after = batch.trades & (idx > first_trade[:, None])
    second_trade = after.argmax(axis=1)
    has_second = has_first & after.any(axis=1)
    return first_trade[has_first], (second_trade - first_trade)[has_second]


def excursion_iid_check(config: AvalancheConfig, threads: Optional[int] = None) -> TwoSampleCheck:
    """Two-sample KS test of the first and second FullBook intertrade gaps"""
    blocks = split_blocks(config.n_paths)
    parts = run_blocks(_gap_block, [(config, first, count) for first, count in blocks], threads)
    first = np.concatenate([p[0] for p in parts])
    second = np.concatenate([p[1] for p in parts])
    if len(first) == 0 or len(second) == 0:
        raise ValidationError("Not enough observed trades for a two-sample check")
    result = stats.ks_2samp(first, second)
    logger.info(f"[SIMULATE] T1 vs T2 KS statistic {result.statistic:.4g}, p-value {result.pvalue:.4g}")
    return TwoSampleCheck(
        statistic=float(result.statistic),
        p_value=float(result.pvalue),
        first_size=len(first),
        second_size=len(second),
    )


def tail_fit(dist: EmpiricalDistribution, min_count: int = 5) -> TailFit:
    """Log-linear fit of log p_hat(k) over the upper half of the support"""
    support = [k for k, c in dist.counts.items() if c >= min_count and k > 0]
    if len(support) < 3:
        raise ValidationError(f"Tail fit needs at least 3 populated values, got {len(support)}")
    upper = support[len(support) // 2:] if len(support) >= 6 else support
    log_p = [math.log(dist.p_hat(k)) for k in upper]
    fit = stats.linregress(upper, log_p)
    return TailFit(slope=float(fit.slope), intercept=float(fit.intercept), r_value=float(fit.rvalue), points=len(upper))


def _exact_series_for(quantity: Quantity, mu: int, epsilon: int, init_mode: InitMode, order: int):
    if quantity == Quantity.SIMPLIFIED_LENGTH:
        return exact_series.simplified_avalanche_pgf(epsilon, order)
    if quantity == Quantity.FULL_LENGTH:
        return exact_series.full_avalanche_pgf(mu, epsilon, order)
    if quantity == Quantity.FIRST_TRADE_TIME:
        if init_mode == InitMode.EMPTY_BOOK:
            return exact_series.first_trade_pgf_empty(mu, order)
        return exact_series.t1_pgf(mu, order)
    # D <= tau_D, so the tau_D tail bounds both
    return exact_series.first_type2_time_pgf(mu, order)


def certified_horizon(mu: int, epsilon: int, quantity: Quantity, init_mode: InitMode = InitMode.FULL_BOOK,
                      tolerance: float = 1e-7) -> int:
    """Smallest horizon whose censoring probability is below `tolerance`, from exact tail mass.

    Avalanche runs are censored exactly when the length exceeds horizon - eps.
    EmptyBook avalanches also wait for the first trade, bounded through the
    first-trade tail.

    Raises:
        SeriesTruncationError: the tail does not fall below tolerance within MAX_SERIES_ORDER
    """
    quantity = Quantity(quantity)
    order = settings.DEFAULT_TRUNCATION
    while True:
        series = _exact_series_for(quantity, mu, epsilon, init_mode, order)
        tail = 1.0 - float(series.partial_sum())
        if tail < tolerance:
            partial = 0.0
            for k, coefficient in enumerate(series.coefficients):
                partial += float(coefficient)
                if 1.0 - partial < tolerance:
                    break
            horizon = k
            if quantity in (Quantity.SIMPLIFIED_LENGTH, Quantity.FULL_LENGTH):
                horizon += epsilon
                if quantity == Quantity.FULL_LENGTH and init_mode == InitMode.EMPTY_BOOK:
                    horizon += certified_horizon(mu, epsilon, Quantity.FIRST_TRADE_TIME, init_mode, tolerance)
            return max(horizon, 1)
        if order >= settings.MAX_SERIES_ORDER:
            raise SeriesTruncationError(f"Tail mass {tail:.3e} still above {tolerance:.1e}", required_order=2 * order)
        order = min(2 * order, settings.MAX_SERIES_ORDER)
