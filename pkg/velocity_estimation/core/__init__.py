"""Settings, config loading and exception types."""
