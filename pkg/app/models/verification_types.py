from enum import Enum
from typing import List

from pydantic import BaseModel, ConfigDict, Field


class Suite(str, Enum):
    """Verification suites"""
    TABLES = "tables"
    ORACLE = "oracle"
    MONTECARLO = "montecarlo"
    LIMITS = "limits"
    ALL = "all"

    @classmethod
    def validate(cls, value: str) -> bool:
        """Validate if a suite value is valid"""
        return value in cls._value2member_map_


class Budget(str, Enum):
    """Run size of the verification suites"""
    QUICK = "quick"
    FULL = "full"


class CheckResult(BaseModel):
    """Outcome of one verification check"""
    model_config = ConfigDict(frozen=True)

    suite: Suite
    name: str = Field(description="What was compared")
    expected: str
    actual: str
    passed: bool

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


class VerificationReport(BaseModel):
    """All checks of a verify run"""
    model_config = ConfigDict(frozen=True)

    suite: Suite
    budget: Budget
    checks: List[CheckResult]

    @property
    def failed(self) -> int:
        return sum(not c.passed for c in self.checks)

    @property
    def passed(self) -> bool:
        return self.failed == 0
