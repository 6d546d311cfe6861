import pytest

from app.core.exceptions import ValidationError
from app.core.worker_pool import resolve_threads, run_blocks, split_blocks


def _square(x):
    return x * x


def test_split_blocks_covers_range():
    assert split_blocks(10, 4) == [(0, 4), (4, 4), (8, 2)]
    assert split_blocks(0, 4) == []
    with pytest.raises(ValidationError):
        split_blocks(10, 0)


def test_resolve_threads(single_thread):
    assert resolve_threads() == 1
    assert resolve_threads(3) == 3
    with pytest.raises(ValidationError):
        resolve_threads(0)


@pytest.mark.parametrize("threads", [1, 3])
def test_run_blocks_keeps_task_order(threads):
    assert run_blocks(_square, list(range(7)), threads) == [x * x for x in range(7)]
