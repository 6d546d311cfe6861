import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.book_types import InitMode


class AvalancheMode(str, Enum):
    """Which trades define the intertrade gaps"""
    SIMPLIFIED = "simplified"
    FULL = "full"


class Quantity(str, Enum):
    """Random variables the Monte Carlo estimator can tally"""
    SIMPLIFIED_LENGTH = "simplified"
    FULL_LENGTH = "full"
    FIRST_TRADE_TIME = "t1"
    FIRST_TYPE_II_INDEX = "d-index"
    TIME_TO_FIRST_TYPE_II = "tau-d"

    @classmethod
    def validate(cls, value: str) -> bool:
        """Validate if a quantity value is valid"""
        return value in cls._value2member_map_


class AvalancheRecord(BaseModel):
    """First avalanche of a path"""
    model_config = ConfigDict(frozen=True)

    length: int = Field(ge=0, description="Sum of the first k gaps, in time steps")
    trade_count: int = Field(ge=0, description="k, number of gaps summed")
    mode: AvalancheMode
    contains_flash_crash: bool = False
    start: int = Field(default=0, ge=0, description="Time the avalanche starts")
    gaps: Tuple[int, ...] = Field(default=(), description="The k included gaps")

    @model_validator(mode='after')
    def check_gaps(self) -> "AvalancheRecord":
        if len(self.gaps) != self.trade_count or sum(self.gaps) != self.length:
            raise ValueError("gaps must sum to length and number trade_count")
        return self


class Censored(BaseModel):
    """The path ended before the terminating gap was certified"""
    model_config = ConfigDict(frozen=True)

    observed_until: int = Field(ge=0, description="Last time index of the path")
    partial_length: int = Field(default=0, ge=0)
    reason: str = "path ended before a gap longer than the window was observed"


class AvalancheConfig(BaseModel):
    """Monte Carlo run configuration"""
    model_config = ConfigDict(frozen=True)

    mu: int = Field(ge=1, description="Spread parameter")
    epsilon: int = Field(ge=1, description="Window in time steps")
    horizon: Optional[int] = Field(default=None, ge=1, description="Steps simulated per path")
    n_paths: int = Field(ge=1, description="Number of simulated paths")
    init_mode: InitMode = InitMode.FULL_BOOK
    master_seed: int = Field(default=0, ge=0, lt=2 ** 64)

    @property
    def effective_horizon(self) -> int:
        """Explicit horizon, else 64 eps + 64 mu^2 so censoring stays rare"""
        if self.horizon is not None:
            return self.horizon
        return 64 * self.epsilon + 64 * self.mu ** 2


class EmpiricalDistribution(BaseModel):
    """Tally of an integer random variable"""
    model_config = ConfigDict(frozen=True)

    counts: Dict[int, int] = Field(description="Value to tally")
    n_samples: int = Field(ge=0, description="Uncensored samples, equals the sum of tallies")
    master_seed: int = Field(ge=0, lt=2 ** 64)
    censored_count: int = Field(default=0, ge=0)
    quantity: Optional[Quantity] = None
    config: Optional[AvalancheConfig] = None

    @field_validator('counts')
    @classmethod
    def validate_counts(cls, v: Dict[int, int]) -> Dict[int, int]:
        if any(c < 0 for c in v.values()):
            raise ValueError("Tallies are nonnegative")
        return dict(sorted(v.items()))

    @model_validator(mode='after')
    def check_total(self) -> "EmpiricalDistribution":
        if sum(self.counts.values()) != self.n_samples:
            raise ValueError(f"Tallies sum to {sum(self.counts.values())}, expected {self.n_samples}")
        return self

    @property
    def total_runs(self) -> int:
        return self.n_samples + self.censored_count

    @property
    def censored_fraction(self) -> float:
        return self.censored_count / self.total_runs if self.total_runs else 0.0

    def p_hat(self, value: int) -> float:
        if self.n_samples == 0:
            return 0.0
        return self.counts.get(value, 0) / self.n_samples

    def half_width(self, value: int, z: float) -> float:
        """Binomial band z * sqrt(p(1 - p) / n)"""
        if self.n_samples == 0:
            return 0.0
        p = self.p_hat(value)
        return z * math.sqrt(p * (1.0 - p) / self.n_samples)

    def interval(self, value: int, z: float) -> Tuple[float, float]:
        p = self.p_hat(value)
        hw = self.half_width(value, z)
        return max(0.0, p - hw), min(1.0, p + hw)

    def within_band(self, value: int, exact: float, z: float) -> bool:
        """True if |p_hat - exact| <= z * sigma with sigma from the exact value"""
        if self.n_samples == 0:
            return False
        sigma = math.sqrt(exact * (1.0 - exact) / self.n_samples)
        return abs(self.p_hat(value) - exact) <= z * sigma + 1e-15

    def survival(self, value: int) -> float:
        """P_hat[X > value]"""
        if self.n_samples == 0:
            return 0.0
        return sum(c for k, c in self.counts.items() if k > value) / self.n_samples

    def support(self) -> List[int]:
        return list(self.counts.keys())


class MomentEstimate(BaseModel):
    """Sample moments with analytic standard errors"""
    model_config = ConfigDict(frozen=True)

    mean: float
    variance: float
    mean_se: float = Field(ge=0)
    variance_se: float = Field(ge=0)
    n_samples: int = Field(ge=2)


class TwoSampleCheck(BaseModel):
    """Kolmogorov-Smirnov comparison of two gap samples"""
    model_config = ConfigDict(frozen=True)

    statistic: float
    p_value: float
    first_size: int
    second_size: int


class TailFit(BaseModel):
    """Log-linear fit of a pmf tail, informational only"""
    model_config = ConfigDict(frozen=True)

    slope: float
    intercept: float
    r_value: float
    points: int
