"""Exception types raised across the toolkit.

Input problems derive from ``ValueError``, numerical failures from
``RuntimeError``; all of them share ``VelocityEstimationError`` so the CLI
can report them uniformly.
"""
from __future__ import annotations


class VelocityEstimationError(Exception):
    """Base class for every error raised by this package."""


# Simulation
class NonFiniteStateError(VelocityEstimationError, RuntimeError):
    """Integration produced NaN/inf (bad vehicle params or time step)."""


class ScenarioUnreachableError(VelocityEstimationError, RuntimeError):
    """A scenario finished without reaching its target condition."""


# Filtering
class CovarianceNotPDError(VelocityEstimationError, RuntimeError):
    """Covariance failed the Cholesky factorization after symmetrization."""


class GateRejectedError(VelocityEstimationError):
    """A measurement failed the Mahalanobis gate and was discarded."""

    def __init__(self, channel: str, distance: float, threshold: float) -> None:
        self.channel = channel
        self.distance = distance
        self.threshold = threshold
        super().__init__(
            f"{channel} rejected: Mahalanobis distance {distance:.3f} > {threshold:.3f}"
        )


class WindowTooShortError(VelocityEstimationError, ValueError):
    """Standstill calibration window shorter than required."""


# Learning
class DivergedError(VelocityEstimationError, RuntimeError):
    """Training loss became non-finite."""


class MissingCheckpointError(VelocityEstimationError, FileNotFoundError):
    """A network checkpoint was required but not found."""


# Data pipeline
class LeadingGapError(VelocityEstimationError, ValueError):
    """A channel has no sample at or before the first output tick."""


class DegenerateChannelError(VelocityEstimationError, ValueError):
    """A channel has zero variance, normalization is undefined."""


class InsufficientScenariosError(VelocityEstimationError, ValueError):
    """Not enough scenarios to populate every split."""


class MissingChannelError(VelocityEstimationError, ValueError):
    """A required column is absent from a frame table."""


# Evaluation
class LengthMismatchError(VelocityEstimationError, ValueError):
    """Compared series are not aligned."""


class ZeroNormalizerError(VelocityEstimationError, ValueError):
    """Percent error requested with a non-positive normalizer."""


class NonFiniteInputError(VelocityEstimationError, ValueError):
    """A loaded table holds NaN or infinite values in a required column."""


# Command line
class UsageError(VelocityEstimationError, ValueError):
    """Command arguments do not describe a runnable job."""
