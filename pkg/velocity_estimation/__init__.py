"""
Vehicle velocity estimation toolkit.

A two-track vehicle simulator with sensor synthesis, a mixed Kalman filter
(EKF propagation, linear and unscented updates), a from-scratch stacked GRU
estimator trained against filter-derived targets, and the evaluation
harness comparing them.
"""

__version__ = "0.1.0"
