from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class LaplaceArg(BaseModel):
    """Continuum arguments of the limit transforms"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lam: float = Field(gt=0, alias="lambda", description="Laplace variable, 1/time")
    epsilon_c: float = Field(gt=0, description="Continuum window, time")
    mu_c: float = Field(default=1.0, gt=0, description="Continuum spread, space")


class SeriesTail(BaseModel):
    """Truncation of the image sum in h"""
    model_config = ConfigDict(frozen=True)

    k_max: int = Field(ge=1)
    abs_tol: float = Field(gt=0)


class HyperbolicCoefficients(BaseModel):
    """Limit entries of the first-trade transforms at x = mu sqrt(2s)"""
    model_config = ConfigDict(frozen=True)

    s: float
    mu_c: float
    tanh_term: float
    coth_term: float
    csch_term: float
    sech_sq_term: float = Field(description="sech(2x)^2 as printed")
    sech_sq_alternate: float = Field(description="sech(x)^2, the ratio of the Type II and Type I entries")
    identity_residual: float


class ConvergenceRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    discrete_value: float
    limit_value: float
    scaled_error: float = Field(description="Signed error of the scaled discrete quantity")
    method: str = "exact"


class ConvergenceReport(BaseModel):
    """Discrete transforms against their continuum limit over an n grid"""
    model_config = ConfigDict(frozen=True)

    study: str
    target: float
    rows: List[ConvergenceRow]
    fitted_order: Optional[float] = Field(default=None, description="-slope of log|error| against log n")
    error_ratios: List[float] = Field(default_factory=list, description="e(n)/e(4n) for grid neighbours four apart")
    diagnostic_rows: List[ConvergenceRow] = Field(default_factory=list)


class SplitRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    mu_n: int
    type_one_scaled: float = Field(description="sqrt(n) (1 - E[z^T1; S(T1) > 0])")
    coth_target: float
    type_two_raw: float = Field(description="E[z^T1; S(T1) <= 0]")
    type_two_scaled: float = Field(description="sqrt(n) E[z^T1; S(T1) <= 0]")
    csch_target: float
    tau_d_value: float
    sech_sq_printed: float
    sech_sq_alternate: float


class SplitReport(BaseModel):
    """Which reading of the Type II and tau_D limit entries the discrete data supports"""
    model_config = ConfigDict(frozen=True)

    mu_c: float
    s: float
    rows: List[SplitRow]
    type_two_reading: str
    tau_d_reading: str


class LimitRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    lam: float
    epsilon_c: float
    mu_c: float
    simplified: float
    full: float


class HReadingCheck(BaseModel):
    """Quadrature of (1 - e^{-lambda x}) h against tanh and coth targets"""
    model_config = ConfigDict(frozen=True)

    lam: float
    mu_c: float
    alternating: bool
    integral: float
    tanh_target: float
    coth_target: float

    @property
    def matches_tanh(self) -> bool:
        return abs(self.integral - self.tanh_target) < 1e-6
