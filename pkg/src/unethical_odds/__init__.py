"""Extreme-value tools for measuring how optimization inflates the odds of unethical choices."""

__version__ = "0.1.0"
