"""Scenario generation for intraday electricity prices with scarce history."""

__version__ = "0.1.0"
