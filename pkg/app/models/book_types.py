from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class InitMode(str, Enum):
    """Initial state of the ask side of the book"""
    FULL_BOOK = "full"
    EMPTY_BOOK = "empty"

    @classmethod
    def validate(cls, value: str) -> bool:
        """Validate if a mode value is valid"""
        return value in cls._value2member_map_


class TradeKind(str, Enum):
    """Trade classification relative to the previous trade level"""
    TYPE_I = "I"
    TYPE_II = "II"


class SpreadParam(BaseModel):
    """Order placement displacement above the mid-price, in ticks"""
    model_config = ConfigDict(frozen=True)

    mu: int = Field(ge=1, description="Displacement mu >= 1")


class WalkPath(BaseModel):
    """A trajectory S_0..S_n of the simple symmetric random walk"""
    model_config = ConfigDict(frozen=True)

    steps: Tuple[int, ...] = Field(description="Price levels S_0..S_n in ticks")

    @field_validator('steps')
    @classmethod
    def validate_steps(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if not v:
            raise ValueError("A walk has at least the starting point")
        if v[0] != 0:
            raise ValueError(f"Walk must start at 0, got {v[0]}")
        for j in range(1, len(v)):
            if abs(v[j] - v[j - 1]) != 1:
                raise ValueError(f"Increment at {j} is {v[j] - v[j - 1]}, expected +-1")
        return v

    @classmethod
    def of(cls, *levels: int) -> "WalkPath":
        return cls(steps=tuple(levels))

    @property
    def horizon(self) -> int:
        return len(self.steps) - 1

    def shifted(self, start: int, end: Optional[int] = None) -> "WalkPath":
        """Sub-path steps[start..end] translated to start at 0"""
        end = self.horizon if end is None else end
        base = self.steps[start]
        return WalkPath(steps=tuple(s - base for s in self.steps[start:end + 1]))


class RngStream(BaseModel):
    """One reproducible random stream per simulated path"""
    model_config = ConfigDict(frozen=True)

    master_seed: int = Field(ge=0, lt=2 ** 64, description="64-bit master seed")
    stream_index: int = Field(ge=0, description="Index of the path within the run")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(seq))


class BookState(BaseModel):
    """Ask-side state at time n.

    Levels listed in sparse_volume carry their explicit presence count.
    In FullBook mode every unlisted level >= filled_from still holds its
    initial unit order.
    """
    time: int = Field(ge=0, description="Time index n")
    best_ask: Optional[int] = Field(default=None, description="alpha_n, tracked in FullBook mode")
    init_mode: InitMode = Field(description="FullBook or EmptyBook")
    sparse_volume: Dict[int, int] = Field(default_factory=dict, description="Explicit presence counts by level")
    filled_from: Optional[int] = Field(default=None, description="Lowest level of the untouched initial fill")
    last_trade_time: int = Field(default=0, ge=0, description="Time of the previous trade (tau_0 = 0)")
    last_trade_level: int = Field(default=0, description="Level of the previous trade, 0 before any trade")

    @model_validator(mode='after')
    def check_mode_fields(self) -> "BookState":
        if self.init_mode == InitMode.FULL_BOOK and self.best_ask is None:
            raise ValueError("FullBook state must track best_ask")
        if any(v < 0 for v in self.sparse_volume.values()):
            raise ValueError("Volumes are nonnegative presence counts")
        return self

    def volume(self, level: int) -> int:
        if level in self.sparse_volume:
            return self.sparse_volume[level]
        if self.filled_from is not None and level >= self.filled_from:
            return 1
        return 0


class TradeEvent(BaseModel):
    """A detected trade"""
    model_config = ConfigDict(frozen=True)

    time: int = Field(ge=0, description="Trading time tau_i")
    level: int = Field(description="Price level of the trade")
    kind: TradeKind = Field(description="Type I or Type II")
    intertrade_gap: int = Field(ge=0, description="T_i; 0 only for the anchor trade at n = 0")
    flash_crash: bool = Field(default=False, description="Type II trade within the window")
    best_ask: Optional[int] = Field(default=None, description="alpha_n at the trade, FullBook only")

    @model_validator(mode='after')
    def check_flash_crash(self) -> "TradeEvent":
        if self.flash_crash and self.kind != TradeKind.TYPE_II:
            raise ValueError("Only Type II trades can be flash-crash trades")
        return self


class BatchTrades(BaseModel):
    """Vectorized replay of a block of paths (one row per path)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    first_stream: int = Field(ge=0, description="Stream index of row 0")
    mu: int = Field(ge=1)
    init_mode: InitMode
    prices: np.ndarray = Field(description="int64 array (rows, horizon + 1)")
    trades: np.ndarray = Field(description="bool array, True where a trade happens")
    type_two: np.ndarray = Field(description="bool array, True where the trade is Type II")
    best_ask: Optional[np.ndarray] = Field(default=None, description="alpha_n per row, FullBook only")

    @property
    def rows(self) -> int:
        return int(self.prices.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.prices.shape[1]) - 1
