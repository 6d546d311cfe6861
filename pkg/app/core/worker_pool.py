"""
Process pool for Monte Carlo blocks and grid sweeps.

Work is split into fixed blocks whose contents depend only on the block
index, never on the number of workers; callers merge the results with an
order-independent reduction.
"""

import logging
from multiprocessing import Pool
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

from app.core.config.settings import settings
from app.core.exceptions import ValidationError

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# Pool options; children are recycled so block-local arrays are released
POOL_OPTIONS = {
    "maxtasksperchild": 64,
}


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit value, else AVALANCHE_THREADS"""
    value = settings.AVALANCHE_THREADS if threads is None else threads
    if value < 1:
        raise ValidationError(f"threads must be >= 1, got {value}")
    return value


def split_blocks(total: int, block_size: Optional[int] = None) -> List[Tuple[int, int]]:
    """(first_index, count) pairs covering 0..total-1 in blocks of block_size"""
    size = settings.MC_BLOCK_SIZE if block_size is None else block_size
    if size < 1:
        raise ValidationError(f"block size must be >= 1, got {size}")
    return [(start, min(size, total - start)) for start in range(0, total, size)]


def run_blocks(worker: Callable[[T], R], tasks: Sequence[T], threads: Optional[int] = None) -> List[R]:
    """Apply `worker` to every task, in order.

    With one worker (or a single task) everything runs in this process,
    which yields the same results as the pool since tasks are independent.
    """
    threads = resolve_threads(threads)
    tasks = list(tasks)
    if threads == 1 or len(tasks) <= 1:
        logger.debug(f"[POOL] Running {len(tasks)} tasks inline")
        return [worker(task) for task in tasks]
    processes = min(threads, len(tasks))
    logger.info(f"[POOL] Running {len(tasks)} tasks on {processes} processes")
    with Pool(processes=processes, **POOL_OPTIONS) as pool:
        return pool.map(worker, tasks, chunksize=1)

