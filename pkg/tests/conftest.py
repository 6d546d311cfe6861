import pytest

from app.core.config.settings import settings
from app.models.book_types import WalkPath

# Walks used across the test modules
TYPE_TWO_EXCURSION_MU2 = WalkPath.of(0, -1, -2, -1, 0)
LADDER_PATH = WalkPath.of(0, 1, 0, 1, 2)
SIMPLIFIED_EPS1_PATH = WalkPath.of(0, 1, 2, 1, 0, -1)


@pytest.fixture
def out_dir(tmp_path):
    """Fresh output directory per test"""
    path = tmp_path / "out"
    path.mkdir()
    return path


@pytest.fixture
def single_thread(monkeypatch):
    """Keep the worker pool inline"""
    monkeypatch.setattr(settings, "AVALANCHE_THREADS", 1)
    return 1


@pytest.fixture
def small_oracle(monkeypatch):
    """Lower enumeration limit so refusals are cheap to trigger"""
    monkeypatch.setattr(settings, "ORACLE_MAX_LEN", 12)
    return 12
