"""flightcore: renderer-decoupled quadrotor simulation.

Rigid-body dynamics with rotor drag and motor lag, a body-rate controller,
an IMU model, vectorized parallel environments with three benchmark RL
tasks, occupancy point-cloud worlds with PLY export and path planning, and
a TCP bridge for external (rendering) clients.
"""

from .config import ConfigError, load_config, load_default_config, parse_config
from .control import (BodyRateCommand, Command, RateGains, RotorThrustCommand,
                      bodyrate_to_thrusts)
from .dynamics import (GRAVITY, AllocationError, ClassicalDynamics,
                       DynamicsBackend, Integrator, ParameterError, QuadParams,
                       QuadState, StateDerivative, StateError, derivative, mix,
                       rotation_matrix, step, unmix)
from .sensing import ImuNoiseModel, ImuReading, imu_measure, specific_force_body
from .tasks import (InitialStateSampler, TaskKind, TaskSpec, TerminationReason,
                    action_bounds, check_termination, classify_gate_crossing,
                    euler_zyx_from_quat, observe, quat_from_euler_zyx, reward,
                    reward_gate, reward_motor_failure, reward_stabilize)
from .vecenv import BatchResult, VecSim, VecSimConfig, benchmark
from .world import (OccupancyCloud, PathQuery, PlyHeaderError, PlyParseError,
                    PlyPayloadError, PlyUnsupportedError, collides, collides_mask,
                    export_ply, generate_forest, import_ply, path_length, plan_path)

__version__ = "0.1.0"

__all__ = [
    "AllocationError", "BatchResult", "BodyRateCommand", "ClassicalDynamics",
    "Command", "ConfigError", "DynamicsBackend",
    "GRAVITY", "ImuNoiseModel", "ImuReading", "InitialStateSampler", "Integrator",
    "OccupancyCloud", "ParameterError", "PathQuery", "PlyHeaderError",
    "PlyParseError", "PlyPayloadError", "PlyUnsupportedError", "QuadParams",
    "QuadState", "RateGains", "RotorThrustCommand", "StateDerivative", "StateError",
    "TaskKind", "TaskSpec", "TerminationReason", "VecSim", "VecSimConfig",
    "action_bounds", "benchmark", "bodyrate_to_thrusts", "check_termination",
    "classify_gate_crossing", "collides", "collides_mask", "derivative",
    "euler_zyx_from_quat", "export_ply", "generate_forest", "import_ply",
    "imu_measure", "load_config", "load_default_config", "mix", "observe",
    "parse_config", "path_length", "plan_path", "quat_from_euler_zyx", "reward",
    "reward_gate", "reward_motor_failure", "reward_stabilize", "rotation_matrix",
    "specific_force_body", "step", "unmix",
]
