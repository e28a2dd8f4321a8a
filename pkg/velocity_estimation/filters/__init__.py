"""Mixed Kalman filter (EKF propagation, LKF and UKF updates)."""

from velocity_estimation.filters.mkf import (  # noqa: F401
    MixedKalmanFilter,
    calibrate_standstill,
    ekf_propagate,
    lkf_update_imu,
    run_filter,
    select_min_slip_wheel,
    ukf_update_external_velocity,
    ukf_update_velocity,
    wheel_velocity,
)
from velocity_estimation.filters.state import (  # noqa: F401
    FilterState,
    MkfConfig,
    NoiseConfig,
    StateEstimate,
    WheelObservation,
)
