"""Frame synchronization, reference targets, normalization and splits."""
