from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.utils.rational_series import RationalSeries


class PathClass(str, Enum):
    """Lattice path classes building the first-trade law"""
    A = "A"
    B = "B"
    C = "C"


class EpsilonPrime(BaseModel):
    """Odd reduction of the window: R only takes odd values"""
    model_config = ConfigDict(frozen=True)

    epsilon: int = Field(ge=1)
    epsilon_prime: int = Field(ge=1)

    @classmethod
    def of(cls, epsilon: int) -> "EpsilonPrime":
        return cls(epsilon=epsilon, epsilon_prime=2 * ((epsilon - 1) // 2) + 1)

    @model_validator(mode='after')
    def check_parity(self) -> "EpsilonPrime":
        if self.epsilon_prime % 2 != 1 or self.epsilon_prime not in (self.epsilon - 1, self.epsilon):
            raise ValueError(f"epsilon' = {self.epsilon_prime} is not the odd floor of {self.epsilon}")
        return self


class LadderLawTable(BaseModel):
    """First-passage probabilities phi[(r, n)] for 1 <= r <= r_max, 1 <= n <= n_max"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    r_max: int = Field(ge=1)
    n_max: int = Field(ge=1)
    phi: Dict[Tuple[int, int], Fraction]

    def get(self, r: int, n: int) -> Fraction:
        return self.phi.get((r, n), Fraction(0))


class T1Split(BaseModel):
    """First-trade law split by trade type, plus the Type II index law"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mu: int = Field(ge=1)
    type_one: RationalSeries = Field(description="E[z^T1; S(T1) > 0]")
    type_two: RationalSeries = Field(description="E[z^T1; S(T1) <= 0]")
    d_pgf: RationalSeries = Field(description="E[w^D], D = index of the first Type II trade")
    type_two_mass: Fraction = Field(description="P[S(T1) <= 0] = 1/(mu + 1)")

    @property
    def total(self) -> RationalSeries:
        return self.type_one + self.type_two


class EmptyBookLaw(BaseModel):
    """First-trade law of the initially empty book"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mu: int = Field(ge=1)
    type_one: RationalSeries
    type_two: RationalSeries

    @property
    def total(self) -> RationalSeries:
        return self.type_one + self.type_two


class EmptyBookReading(BaseModel):
    """Comparison of one reading of the printed empty-book formula with enumeration"""
    model_config = ConfigDict(frozen=True)

    name: str
    lower_index: int
    mirrored_index: bool
    includes_empty_path: bool
    first_mismatch: Optional[int] = Field(default=None, description="Smallest n where the reading departs")
    mismatches: int = 0
    compared_through: int


class MomentPair(BaseModel):
    """Exact mean and variance"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mean: Fraction
    variance: Fraction


class OracleAvalancheLaw(BaseModel):
    """Exhaustive avalanche law resolved within max_len steps"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mu: int
    epsilon: int
    max_len: int
    probabilities: Dict[int, Fraction]
    unresolved_mass: Fraction
    exact_through: int = Field(description="Lengths k <= max_len - epsilon are fully resolved")

    def resolved_lengths(self) -> List[int]:
        return [k for k in sorted(self.probabilities) if k <= self.exact_through]


class RationalForm(BaseModel):
    """numerator / (d_0 + d_1 z + ...) with integer coefficients"""
    model_config = ConfigDict(frozen=True)

    numerator: int
    denominator: List[int]

    def expand(self, order: int) -> RationalSeries:
        den = RationalSeries([Fraction(d) for d in self.denominator], order)
        return den.reciprocal().scale(Fraction(self.numerator))

    def __str__(self) -> str:
        terms = []
        for power, d in enumerate(self.denominator):
            if d == 0:
                continue
            sign = "-" if d < 0 else "+"
            magnitude = abs(d)
            monomial = "" if power == 0 else ("z" if power == 1 else f"z^{power}")
            coefficient = str(magnitude) if power == 0 or magnitude != 1 else ""
            terms.append((sign, coefficient + monomial))
        body = "".join(f"{s}{t}" for s, t in terms).lstrip("+")
        return f"{self.numerator}/({body})"


class ReferenceTables(BaseModel):
    """Published first-trade and full-avalanche values, as exact rationals"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    first_trade: Dict[int, List[Fraction]] = Field(description="mu -> P[T1 = n], n = 1..10")
    first_trade_survival: Dict[int, List[Fraction]] = Field(description="mu -> P[T1 > eps], eps = 1..9")
    full_avalanche_forms: Dict[int, List[RationalForm]] = Field(description="mu -> E[z^L*] for eps = 1..5")
    full_avalanche: Dict[int, List[List[Fraction]]] = Field(description="mu -> eps row -> P[L* = k], k = 1..8")
