"""Command-line interface for oneclass-fraud."""

__all__ = ["fraud_cli"]
