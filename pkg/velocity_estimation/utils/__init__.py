"""Logging helpers, input validation and report export."""
