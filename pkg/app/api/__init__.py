# Subcommand modules

from app.api import exact, limit, simulate, trades, verify

__all__ = ["exact", "limit", "simulate", "trades", "verify"]
