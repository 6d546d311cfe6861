"""
Core application settings and configuration.
This module provides a centralized configuration using Pydantic BaseSettings.
Environment variables (or a local .env file) can override these settings;
command-line flags override both.
"""

import logging
import os
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """
    Application settings and configuration.
    All settings can be overridden by environment variables.
    """

    # Application Settings
    DEBUG: bool = False
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    TOOL_VERSION: str = "0.3.0"

    # Worker pool
    AVALANCHE_THREADS: int = max(1, os.cpu_count() or 1)
    MC_BLOCK_SIZE: int = 8192

    # Book dynamics
    BOOK_SELF_CHECK: bool = False

    # Exact series
    DEFAULT_TRUNCATION: int = 64
    MAX_SERIES_ORDER: int = 4096
    AUTO_SERIES_ORDER: int = 512
    ORACLE_MAX_LEN: int = 26
    ORACLE_CHUNK_ROWS: int = 1 << 18

    # Monte Carlo reporting
    CI_Z: float = 4.0

    # Numerics
    MPMATH_DPS: int = 50
    QUAD_ABS_TOL: float = 1e-9
    H_SERIES_TOL: float = 1e-16
    SERIES_TAIL_TOL: float = 1e-15
    OUTPUT_FLOAT_DIGITS: int = 12

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", case_sensitive=True)


# Create a global settings instance
settings = Settings()


def refresh_settings() -> None:
    """
    Refresh settings by reloading from environment variables.
    Useful when environment variables change during runtime.
    """
    global settings
    settings = Settings()


def validate_required_settings() -> bool:
    """
    Validate that numeric settings are usable.
    Returns True if everything is in range, False otherwise.
    """
    problems = []

    if settings.AVALANCHE_THREADS < 1:
        problems.append("AVALANCHE_THREADS must be >= 1")
    if settings.MC_BLOCK_SIZE < 1:
        problems.append("MC_BLOCK_SIZE must be >= 1")
    if settings.DEFAULT_TRUNCATION < 1:
        problems.append("DEFAULT_TRUNCATION must be >= 1")
    if settings.MAX_SERIES_ORDER < settings.DEFAULT_TRUNCATION:
        problems.append("MAX_SERIES_ORDER must be >= DEFAULT_TRUNCATION")
    if not 1 <= settings.AUTO_SERIES_ORDER <= settings.MAX_SERIES_ORDER:
        problems.append("AUTO_SERIES_ORDER must be in [1, MAX_SERIES_ORDER]")
    if not 1 <= settings.ORACLE_MAX_LEN <= 26:
        problems.append("ORACLE_MAX_LEN must be in [1, 26]")
    if settings.CI_Z <= 0:
        problems.append("CI_Z must be positive")
    if settings.MPMATH_DPS < 15:
        problems.append("MPMATH_DPS must be >= 15")
    if settings.OUTPUT_FLOAT_DIGITS < 1:
        problems.append("OUTPUT_FLOAT_DIGITS must be >= 1")

    if problems:
        logger.warning(f"[SETTINGS] Invalid settings: {'; '.join(problems)}")
        return False

    return True
