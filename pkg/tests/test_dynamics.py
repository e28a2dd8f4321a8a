import numpy as np
import pytest

from velocity_estimation.core.exceptions import NonFiniteStateError
from velocity_estimation.sim.dynamics import (
    Controls,
    GroundTruthState,
    TwoTrackModel,
    advance,
    contact_velocities,
    kinetic_energy,
    rear_axle_sideslip,
    slip_ratios,
    step_dynamics,
)
from velocity_estimation.sim.params import VehicleParams


def test_free_rolling_straight_line_is_an_equilibrium():
    params = VehicleParams()
    state = GroundTruthState.rolling(10.0, params)
    out = state
    for _ in range(100):
        out = step_dynamics(out, Controls(), params, 0.001)

    assert out.vx == pytest.approx(10.0, abs=1e-12)
    assert out.vy == pytest.approx(0.0, abs=1e-12)
    assert out.yaw_rate == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(out.wheel_omega, state.wheel_omega, atol=1e-12)
    assert out.x == pytest.approx(1.0, rel=1e-9)
    assert out.y == pytest.approx(0.0, abs=1e-12)
    assert out.time == pytest.approx(0.1)


def test_standstill_stays_at_standstill():
    params = VehicleParams()
    state = advance(GroundTruthState(), Controls(), TwoTrackModel(params), 0.001, 500)
    assert (state.vx, state.vy, state.yaw_rate, state.ax, state.ay) == (0.0, 0.0, 0.0, 0.0, 0.0)
    assert np.all(state.wheel_omega == 0.0)


def test_steady_cornering_matches_kinematic_yaw_rate():
    params = VehicleParams()
    steering = 0.05
    state = GroundTruthState.rolling(5.0, params, steering=steering)
    state = advance(state, Controls(steering=steering), TwoTrackModel(params), 0.001, 3000)

    expected = state.vx * np.tan(steering) / params.wheelbase
    assert state.yaw_rate == pytest.approx(expected, rel=0.05)
    assert np.max(np.abs(slip_ratios(state, params))) < 0.01


def test_coasting_never_gains_energy():
    params = VehicleParams()
    state = GroundTruthState.rolling(12.0, params)
    model = TwoTrackModel(params)
    start = kinetic_energy(state, params)
    state = advance(state, Controls(steering=0.1), model, 0.001, 2000)
    assert kinetic_energy(state, params) < start


def test_drive_torque_accelerates_forward():
    params = VehicleParams()
    torque = np.full(4, 40.0)
    state = advance(GroundTruthState(), Controls(wheel_torques=torque), TwoTrackModel(params), 0.001, 1000)
    assert state.vx > 0.5
    assert state.ax > 0.0
    assert np.all(slip_ratios(state, params) > 0.0)


def test_step_size_is_validated():
    params = VehicleParams()
    with pytest.raises(ValueError):
        step_dynamics(GroundTruthState(), Controls(), params, 0.02)
    with pytest.raises(ValueError):
        step_dynamics(GroundTruthState(), Controls(), params, 0.0)


def test_non_finite_inputs_raise():
    params = VehicleParams()
    controls = Controls(wheel_torques=np.array([np.nan, 0.0, 0.0, 0.0]))
    with pytest.raises(NonFiniteStateError):
        step_dynamics(GroundTruthState.rolling(5.0, params), controls, params, 0.001)


def test_contact_velocities_and_rear_sideslip():
    params = VehicleParams()
    state = GroundTruthState(vx=10.0, vy=0.5, yaw_rate=1.0)
    contact = contact_velocities(state, params)
    # front-left wheel at (0.765, 0.6)
    np.testing.assert_allclose(contact[0], [10.0 - 0.6, 0.5 + 0.765])
    assert rear_axle_sideslip(state, params) == pytest.approx(np.arctan2(0.5 - 0.765, 10.0))


def test_vehicle_params_reject_bad_geometry():
    with pytest.raises(ValueError):
        VehicleParams(wheel_positions=[(0.7, 0.6), (-0.7, -0.6), (-0.7, 0.6), (-0.7, -0.6)])
    with pytest.raises(ValueError):
        VehicleParams(wheel_radius=[0.2, 0.2, 0.2])
