from typing import List, Optional, Sequence
import logging

from app.core.config.settings import settings
from app.core.exceptions import ValidationError

logger = logging.getLogger(__name__)

class Validator:
    """Simple validator for command-line and configuration values"""

    @staticmethod
    def validate_positive_int(name: str, value: Optional[int], minimum: int = 1) -> int:
        """Validate an integer flag against a lower bound

        Args:
            name: Flag name used in the error message
            value: Parsed value
            minimum: Smallest allowed value

        Returns:
            The value unchanged

        Raises:
            ValidationError: If the value is missing or below minimum
        """
        if value is None:
            raise ValidationError(f"{name} is required")
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"{name} must be an integer, got {value!r}")
        if value < minimum:
            raise ValidationError(f"{name} must be >= {minimum}, got {value}")
        return value

    @staticmethod
    def validate_positive_float(name: str, value: Optional[float]) -> float:
        """Validate a strictly positive finite real

        Raises:
            ValidationError: If the value is missing, not finite, or not positive
        """
        if value is None:
            raise ValidationError(f"{name} is required")
        if not value > 0 or value == float("inf"):
            raise ValidationError(f"{name} must be a positive finite number, got {value}")
        return float(value)

    @staticmethod
    def validate_grid(name: str, text: str) -> List[float]:
        """Parse a comma separated grid such as "0.1,1,10"

        Raises:
            ValidationError: If any entry is not a positive number
        """
        try:
            values = [float(part) for part in text.split(",") if part.strip()]
        except ValueError as e:
            raise ValidationError(f"{name} must be comma separated numbers, got {text!r}", original_error=e)
        if not values:
            raise ValidationError(f"{name} is empty")
        for v in values:
            Validator.validate_positive_float(name, v)
        return values

    @staticmethod
    def validate_int_grid(name: str, text: str) -> List[int]:
        values = Validator.validate_grid(name, text)
        if any(v != int(v) for v in values):
            raise ValidationError(f"{name} must hold integers, got {text!r}")
        return [int(v) for v in values]

    @staticmethod
    def validate_order(order: Optional[int]) -> int:
        """Series truncation order, defaulting to DEFAULT_TRUNCATION"""
        order = settings.DEFAULT_TRUNCATION if order is None else order
        Validator.validate_positive_int("--order", order)
        if order > settings.MAX_SERIES_ORDER:
            raise ValidationError(f"--order must be <= {settings.MAX_SERIES_ORDER}, got {order}")
        return order

    @staticmethod
    def validate_choice(name: str, value: str, choices: Sequence[str]) -> str:
        if value not in choices:
            raise ValidationError(f"{name} must be one of {', '.join(choices)}, got {value!r}")
        return value

    @staticmethod
    def require(command: str, **flags) -> None:
        """Check the flags a target needs are present

        Raises:
            ValidationError: If any named flag is None
        """
        missing = [f"--{name.replace('_', '-')}" for name, value in flags.items() if value is None]
        if missing:
            logger.error(f"[VALIDATOR] {command} is missing {missing}")
            raise ValidationError(f"{command} requires {', '.join(missing)}")
