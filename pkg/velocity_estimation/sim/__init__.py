"""Ground-truth vehicle simulator and sensor synthesis."""

from velocity_estimation.sim.dynamics import (  # noqa: F401
    Controls,
    GroundTruthState,
    TwoTrackModel,
    rear_axle_sideslip,
    slip_ratios,
    step_dynamics,
)
from velocity_estimation.sim.params import (  # noqa: F401
    SURFACES,
    FreezeEvent,
    NoiseSigmas,
    SensorFaultPlan,
    VehicleParams,
)
from velocity_estimation.sim.scenarios import (  # noqa: F401
    SCENARIOS,
    ScenarioResult,
    ScenarioSpec,
    run_scenario,
    simulate,
    simulate_suite,
)
from velocity_estimation.sim.sensors import RawSensorStream, synthesize_sensors  # noqa: F401
from velocity_estimation.sim.tire import magic_formula, slip_ratio_from_torque  # noqa: F401
