"""Benchmark RL tasks: stabilization, stabilization under motor failure, gate flight.

Observation layouts (attitude theta as ZYX Euler angles):

    stabilize:     [p(3), theta(3), v(3), 1.0]                        dim 10
    motor_failure: [p(3), theta(3), v(3), omega(3)]                   dim 12
    gate:          [p(3), theta(3), v(3), omega(3), p_gate, th_gate]  dim 18

The stabilize layout is 9-dimensional with Euler angles; a constant 1.0 pad
honors the documented dim of 10. Set stabilize_obs_layout="quat" to use
[p(3), q(4), v(3)] instead (also dim 10, no pad).

Rewards are negative weighted L2 distances to the target; the motor-failure
variant zeroes the yaw-angle and yaw-rate weights by construction, and the
gate variant adds +0.1 while not hitting the gate or ground and returns
-0.1 on a hit. Gate crossings are classified by intersecting the segment
between consecutive positions with the gate plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

import numpy as np

from . import config as _config
from .dynamics import QuadParams, QuadState, rotation_matrix


class TaskKind(Enum):
    STABILIZE = "stabilize"
    MOTOR_FAILURE = "motor_failure"
    GATE = "gate"

    @classmethod
    def parse(cls, name: "str | TaskKind") -> "TaskKind":
        if isinstance(name, TaskKind):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown task {name!r} (expected one of: {valid})") from None


class TerminationReason(Enum):
    TIMEOUT = "timeout"
    GATE_PASS = "gate_pass"
    GATE_HIT = "gate_hit"
    GROUND_HIT = "ground_hit"
    BOUNDS = "bounds"


# int8 codes used by the batched termination check
_REASON_CODES = {
    0: None,
    1: TerminationReason.TIMEOUT,
    2: TerminationReason.GATE_PASS,
    3: TerminationReason.GATE_HIT,
    4: TerminationReason.GROUND_HIT,
    5: TerminationReason.BOUNDS,
}
_CODE_OF = {v: k for k, v in _REASON_CODES.items()}


def euler_zyx_from_quat(q: np.ndarray) -> np.ndarray:
    """[roll, pitch, yaw] of a scalar-first quaternion (ZYX convention)."""
    qw, qx, qy, qz = q
    roll = math.atan2(2.0 * (qw * qx + qy * qz), 1.0 - 2.0 * (qx * qx + qy * qy))
    s = 2.0 * (qw * qy - qz * qx)
    if s > 1.0:
        s = 1.0
    elif s < -1.0:
        s = -1.0
    pitch = math.asin(s)
    yaw = math.atan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz))
    return np.array([roll, pitch, yaw])


def quat_from_euler_zyx(euler: np.ndarray) -> np.ndarray:
    """Scalar-first quaternion from [roll, pitch, yaw] (ZYX convention)."""
    roll, pitch, yaw = np.asarray(euler, dtype=np.float64).reshape(3)
    cr, sr = math.cos(0.5 * roll), math.sin(0.5 * roll)
    cp, sp = math.cos(0.5 * pitch), math.sin(0.5 * pitch)
    cy, sy = math.cos(0.5 * yaw), math.sin(0.5 * yaw)
    return np.array([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ])


def euler_zyx_from_quat_batch(Q: np.ndarray) -> np.ndarray:
    qw, qx, qy, qz = Q[:, 0], Q[:, 1], Q[:, 2], Q[:, 3]
    roll = np.arctan2(2.0 * (qw * qx + qy * qz), 1.0 - 2.0 * (qx * qx + qy * qy))
    pitch = np.arcsin(np.clip(2.0 * (qw * qy - qz * qx), -1.0, 1.0))
    yaw = np.arctan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz))
    return np.stack([roll, pitch, yaw], axis=1)


@dataclass
class TaskSpec:
    """Target state, reward weights, episode timing, and task-specific geometry."""

    kind: TaskKind = TaskKind.STABILIZE
    p_target: np.ndarray = field(default_factory=lambda: np.zeros(3))
    theta_target: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_target: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_target: np.ndarray = field(default_factory=lambda: np.zeros(3))
    episode_length: float = 5.0
    dt: float = 0.02
    c1: float = 2e-3
    c2: float = 2e-3
    c3: float = 2e-4
    c4: float = 2e-4
    gate_position: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 2.0]))
    gate_euler: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gate_radius: float = 1.0
    gate_frame_width: float = 0.5
    gate_margin: float = 3.0
    failed_rotor: int = 3
    stabilize_obs_layout: str = "euler_pad"

    def __post_init__(self):
        self.kind = TaskKind.parse(self.kind)
        self.p_target = np.asarray(self.p_target, dtype=np.float64).reshape(3).copy()
        self.theta_target = np.asarray(self.theta_target, dtype=np.float64).reshape(3).copy()
        self.v_target = np.asarray(self.v_target, dtype=np.float64).reshape(3).copy()
        self.omega_target = np.asarray(self.omega_target, dtype=np.float64).reshape(3).copy()
        self.gate_position = np.asarray(self.gate_position, dtype=np.float64).reshape(3).copy()
        self.gate_euler = np.asarray(self.gate_euler, dtype=np.float64).reshape(3).copy()
        if not (self.episode_length > 0):
            raise ValueError(f"episode_length must be > 0, got {self.episode_length}")
        if not (self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        for name in ("c1", "c2", "c3", "c4"):
            if getattr(self, name) < 0:
                raise ValueError(f"reward weight {name} must be >= 0")
        if self.kind is TaskKind.GATE and not (self.gate_radius > 0):
            raise ValueError(f"gate_radius must be > 0, got {self.gate_radius}")
        if not 0 <= self.failed_rotor <= 3:
            raise ValueError(f"failed_rotor must be in 0..3, got {self.failed_rotor}")
        if self.stabilize_obs_layout not in ("euler_pad", "quat"):
            raise ValueError(f"unknown stabilize_obs_layout {self.stabilize_obs_layout!r}")

    @property
    def obs_dim(self) -> int:
        return {TaskKind.STABILIZE: 10, TaskKind.MOTOR_FAILURE: 12, TaskKind.GATE: 18}[self.kind]

    @property
    def act_dim(self) -> int:
        return {TaskKind.STABILIZE: 4, TaskKind.MOTOR_FAILURE: 3, TaskKind.GATE: 4}[self.kind]

    @property
    def max_steps(self) -> int:
        return int(round(self.episode_length / self.dt))

    @property
    def gate_rotation(self) -> np.ndarray:
        return rotation_matrix(quat_from_euler_zyx(self.gate_euler))

    @classmethod
    def for_task(cls, kind: "str | TaskKind", **overrides) -> "TaskSpec":
        kind = TaskKind.parse(kind)
        defaults: dict = {"kind": kind}
        if kind is TaskKind.GATE and "p_target" not in overrides:
            # Hover target 2 m behind the gate along its through axis.
            gate_position = np.asarray(
                overrides.get("gate_position", [0.0, 0.0, 2.0]), dtype=np.float64)
            gate_euler = np.asarray(overrides.get("gate_euler", [0.0, 0.0, 0.0]),
                                    dtype=np.float64)
            axis = rotation_matrix(quat_from_euler_zyx(gate_euler))[:, 0]
            defaults["p_target"] = gate_position + 2.0 * axis
        defaults.update(overrides)
        return cls(**defaults)

    @classmethod
    def from_config(cls, cfg: Mapping[str, str]) -> "TaskSpec":
        g = _config.get_float
        kind = TaskKind.parse(cfg.get("task", "stabilize"))
        overrides: dict = {
            "episode_length": g(cfg, "episode_length", 5.0),
            "dt": g(cfg, "dt", 0.02),
            "c1": g(cfg, "reward_c1", 2e-3),
            "c2": g(cfg, "reward_c2", 2e-3),
            "c3": g(cfg, "reward_c3", 2e-4),
            "c4": g(cfg, "reward_c4", 2e-4),
            "failed_rotor": _config.get_int(cfg, "failed_rotor", 3),
            "stabilize_obs_layout": cfg.get("stabilize_obs_layout", "euler_pad"),
            "gate_radius": g(cfg, "gate_radius", 1.0),
            "gate_frame_width": g(cfg, "gate_frame_width", 0.5),
            "gate_margin": g(cfg, "gate_margin", 3.0),
        }
        if any(k in cfg for k in ("target_x", "target_y", "target_z")):
            overrides["p_target"] = [g(cfg, "target_x", 0.0), g(cfg, "target_y", 0.0),
                                     g(cfg, "target_z", 0.0)]
        if any(k in cfg for k in ("gate_x", "gate_y", "gate_z")):
            overrides["gate_position"] = [g(cfg, "gate_x", 0.0), g(cfg, "gate_y", 0.0),
                                          g(cfg, "gate_z", 2.0)]
        if any(k in cfg for k in ("gate_roll", "gate_pitch", "gate_yaw")):
            overrides["gate_euler"] = [g(cfg, "gate_roll", 0.0), g(cfg, "gate_pitch", 0.0),
                                       g(cfg, "gate_yaw", 0.0)]
        return cls.for_task(kind, **overrides)


def observe(state: QuadState, spec: TaskSpec) -> np.ndarray:
    """Flat observation vector; length is exactly spec.obs_dim."""
    if spec.kind is TaskKind.STABILIZE:
        if spec.stabilize_obs_layout == "quat":
            return np.concatenate([state.p, state.q, state.v])
        theta = euler_zyx_from_quat(state.q)
        return np.concatenate([state.p, theta, state.v, [1.0]])
    theta = euler_zyx_from_quat(state.q)
    if spec.kind is TaskKind.MOTOR_FAILURE:
        return np.concatenate([state.p, theta, state.v, state.omega])
    return np.concatenate([state.p, theta, state.v, state.omega,
                           spec.gate_position, spec.gate_euler])


def observe_batch(P: np.ndarray, Q: np.ndarray, V: np.ndarray, W: np.ndarray,
                  spec: TaskSpec) -> np.ndarray:
    n = P.shape[0]
    if spec.kind is TaskKind.STABILIZE:
        if spec.stabilize_obs_layout == "quat":
            return np.concatenate([P, Q, V], axis=1)
        theta = euler_zyx_from_quat_batch(Q)
        return np.concatenate([P, theta, V, np.ones((n, 1))], axis=1)
    theta = euler_zyx_from_quat_batch(Q)
    if spec.kind is TaskKind.MOTOR_FAILURE:
        return np.concatenate([P, theta, V, W], axis=1)
    gate = np.concatenate([spec.gate_position, spec.gate_euler])
    return np.concatenate([P, theta, V, W, np.tile(gate, (n, 1))], axis=1)


def _norm3(dx, dy, dz):
    return np.sqrt((dx * dx + dy * dy) + dz * dz)


def _goal_penalty(state: QuadState, spec: TaskSpec) -> float:
    """Negative weighted distance to target: the stabilize reward kernel."""
    theta = euler_zyx_from_quat(state.q)
    ep = state.p - spec.p_target
    et = theta - spec.theta_target
    ev = state.v - spec.v_target
    return -(spec.c1 * _norm3(ep[0], ep[1], ep[2])
             + spec.c2 * _norm3(et[0], et[1], et[2])
             + spec.c3 * _norm3(ev[0], ev[1], ev[2]))


def reward_stabilize(state: QuadState, spec: TaskSpec) -> float:
    """-(c1 ||p - p_t|| + c2 ||theta - theta_t|| + c3 ||v - v_t||); 0 at the target."""
    return float(_goal_penalty(state, spec))


def reward_motor_failure(state: QuadState, spec: TaskSpec) -> float:
    """Yaw-agnostic penalty: only roll/pitch angle and rate components enter."""
    theta = euler_zyx_from_quat(state.q)
    ep = state.p - spec.p_target
    return float(-(spec.c1 * _norm3(ep[0], ep[1], ep[2])
                   + spec.c2 * np.sqrt(theta[0] * theta[0] + theta[1] * theta[1])
                   + spec.c3 * _norm3(state.v[0], state.v[1], state.v[2])
                   + spec.c4 * np.sqrt(state.omega[0] * state.omega[0]
                                       + state.omega[1] * state.omega[1])))


def reward_gate(state: QuadState, spec: TaskSpec, hit: bool) -> float:
    """+0.1 bonus plus the goal penalty while clear; flat -0.1 on gate/ground hit."""
    if hit:
        return -0.1
    return float(_goal_penalty(state, spec) + 0.1)


def reward(state: QuadState, spec: TaskSpec,
           termination: Optional[TerminationReason] = None) -> float:
    if spec.kind is TaskKind.STABILIZE:
        return reward_stabilize(state, spec)
    if spec.kind is TaskKind.MOTOR_FAILURE:
        return reward_motor_failure(state, spec)
    hit = termination in (TerminationReason.GATE_HIT, TerminationReason.GROUND_HIT)
    return reward_gate(state, spec, hit)


def classify_gate_crossing(p0: np.ndarray, p1: np.ndarray,
                           spec: TaskSpec) -> Optional[TerminationReason]:
    """Classify the segment p0 -> p1 against the gate plane.

    Returns GATE_PASS for a crossing inside the gate radius, GATE_HIT inside
    the lateral margin (which covers the physical frame annulus), BOUNDS for
    a crossing farther out, and None when the segment does not cross the
    plane (strict sign change).
    """
    rot = spec.gate_rotation
    nx, ny, nz = rot[0, 0], rot[1, 0], rot[2, 0]
    gx, gy, gz = spec.gate_position
    s0 = nx * (p0[0] - gx) + ny * (p0[1] - gy) + nz * (p0[2] - gz)
    s1 = nx * (p1[0] - gx) + ny * (p1[1] - gy) + nz * (p1[2] - gz)
    if not (s0 * s1 < 0.0):
        return None
    u = s0 / (s0 - s1)
    ix = p0[0] + u * (p1[0] - p0[0]) - gx
    iy = p0[1] + u * (p1[1] - p0[1]) - gy
    iz = p0[2] + u * (p1[2] - p0[2]) - gz
    # in-plane radius via the gate's own y/z axes
    ry = rot[0, 1] * ix + rot[1, 1] * iy + rot[2, 1] * iz
    rz = rot[0, 2] * ix + rot[1, 2] * iy + rot[2, 2] * iz
    rho = math.sqrt(ry * ry + rz * rz)
    if rho <= spec.gate_radius:
        return TerminationReason.GATE_PASS
    if rho <= spec.gate_margin:
        return TerminationReason.GATE_HIT
    return TerminationReason.BOUNDS


def check_termination(state: QuadState, prev_state: Optional[QuadState], spec: TaskSpec,
                      t: float) -> Optional[TerminationReason]:
    """Terminal event for the step ending at `state`, or None.

    Precedence: gate-plane crossing events (they occur inside the step),
    then ground contact, then timeout. Timeout uses integer step semantics,
    round(t / dt) >= round(episode_length / dt), so float accumulation of t
    cannot shift the 250-step episode boundary.
    """
    if spec.kind is TaskKind.GATE:
        if prev_state is not None:
            crossing = classify_gate_crossing(prev_state.p, state.p, spec)
            if crossing is not None:
                return crossing
        if state.p[2] <= 0.0:
            return TerminationReason.GROUND_HIT
    if int(round(t / spec.dt)) >= spec.max_steps:
        return TerminationReason.TIMEOUT
    return None


def check_termination_batch(P: np.ndarray, P_prev: Optional[np.ndarray],
                            step_counts: np.ndarray, spec: TaskSpec) -> np.ndarray:
    """Vectorized termination codes (see _REASON_CODES); 0 means not done."""
    n = P.shape[0]
    codes = np.zeros(n, dtype=np.int8)
    if spec.kind is TaskKind.GATE:
        if P_prev is not None:
            rot = spec.gate_rotation
            nvec = rot[:, 0]
            rel0 = P_prev - spec.gate_position
            rel1 = P - spec.gate_position
            s0 = rel0 @ nvec
            s1 = rel1 @ nvec
            crossing = s0 * s1 < 0.0
            if crossing.any():
                u = s0[crossing] / (s0[crossing] - s1[crossing])
                ipt = rel0[crossing] + u[:, None] * (rel1[crossing] - rel0[crossing])
                ry = ipt @ rot[:, 1]
                rz = ipt @ rot[:, 2]
                rho = np.sqrt(ry * ry + rz * rz)
                cross_codes = np.where(
                    rho <= spec.gate_radius, _CODE_OF[TerminationReason.GATE_PASS],
                    np.where(rho <= spec.gate_margin, _CODE_OF[TerminationReason.GATE_HIT],
                             _CODE_OF[TerminationReason.BOUNDS]))
                codes[crossing] = cross_codes.astype(np.int8)
        ground = (codes == 0) & (P[:, 2] <= 0.0)
        codes[ground] = _CODE_OF[TerminationReason.GROUND_HIT]
    timeout = (codes == 0) & (step_counts >= spec.max_steps)
    codes[timeout] = _CODE_OF[TerminationReason.TIMEOUT]
    return codes


def reason_from_code(code: int) -> Optional[TerminationReason]:
    return _REASON_CODES[int(code)]


def code_from_reason(reason: Optional[TerminationReason]) -> int:
    return _CODE_OF[reason]


def reward_batch(P: np.ndarray, Q: np.ndarray, V: np.ndarray, W: np.ndarray,
                 codes: np.ndarray, spec: TaskSpec) -> np.ndarray:
    """Batched rewards; mirrors the scalar reward functions exactly."""
    theta = euler_zyx_from_quat_batch(Q)
    if spec.kind is TaskKind.MOTOR_FAILURE:
        ep = P - spec.p_target
        return -(spec.c1 * _norm3(ep[:, 0], ep[:, 1], ep[:, 2])
                 + spec.c2 * np.sqrt(theta[:, 0] * theta[:, 0] + theta[:, 1] * theta[:, 1])
                 + spec.c3 * _norm3(V[:, 0], V[:, 1], V[:, 2])
                 + spec.c4 * np.sqrt(W[:, 0] * W[:, 0] + W[:, 1] * W[:, 1]))
    ep = P - spec.p_target
    et = theta - spec.theta_target
    ev = V - spec.v_target
    goal = -(spec.c1 * _norm3(ep[:, 0], ep[:, 1], ep[:, 2])
             + spec.c2 * _norm3(et[:, 0], et[:, 1], et[:, 2])
             + spec.c3 * _norm3(ev[:, 0], ev[:, 1], ev[:, 2]))
    if spec.kind is TaskKind.STABILIZE:
        return goal
    hit = ((codes == _CODE_OF[TerminationReason.GATE_HIT])
           | (codes == _CODE_OF[TerminationReason.GROUND_HIT]))
    return np.where(hit, -0.1, goal + 0.1)


def action_bounds(spec: TaskSpec, params: QuadParams) -> tuple[np.ndarray, np.ndarray]:
    """Physical action-space bounds per task (used for random policies and spaces)."""
    if spec.kind is TaskKind.STABILIZE:
        c_max = 4.0 * params.thrust_max / params.mass
        return (np.array([0.0, -6.0, -6.0, -6.0]), np.array([c_max, 6.0, 6.0, 6.0]))
    dim = spec.act_dim
    return (np.full(dim, params.thrust_min), np.full(dim, params.thrust_max))


def actions_to_commands(actions: np.ndarray, spec: TaskSpec,
                        params: QuadParams) -> tuple[np.ndarray, np.ndarray]:
    """Map per-task action rows to kernel command rows and mode flags.

    Thrust-valued actions are clamped to the rotor limits; the body-rate
    collective is clamped to be non-negative. The failed rotor of the
    motor-failure task is forced to zero desired thrust.
    """
    actions = np.asarray(actions, dtype=np.float64)
    n = actions.shape[0]
    if actions.shape != (n, spec.act_dim):
        raise ValueError(f"actions shape {actions.shape} != ({n}, {spec.act_dim})")
    if not np.isfinite(actions).all():
        raise ValueError("non-finite actions")
    if spec.kind is TaskKind.STABILIZE:
        cmd = actions.copy()
        np.maximum(cmd[:, 0], 0.0, out=cmd[:, 0])
        return cmd, np.ones(n, dtype=np.uint8)
    cmd = np.empty((n, 4))
    if spec.kind is TaskKind.MOTOR_FAILURE:
        live = [i for i in range(4) if i != spec.failed_rotor]
        cmd[:, live] = np.clip(actions, params.thrust_min, params.thrust_max)
        cmd[:, spec.failed_rotor] = 0.0
    else:
        cmd[:] = np.clip(actions, params.thrust_min, params.thrust_max)
    return cmd, np.zeros(n, dtype=np.uint8)


@dataclass
class InitialStateSampler:
    """Uniform-box initial-state distribution; zero-width boxes give fixed values.

    Draw order per env is position, attitude Euler angles, velocity, body
    rates, always consuming the same stream layout regardless of widths.
    """

    p_low: np.ndarray = field(default_factory=lambda: np.zeros(3))
    p_high: np.ndarray = field(default_factory=lambda: np.zeros(3))
    euler_low: np.ndarray = field(default_factory=lambda: np.zeros(3))
    euler_high: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_low: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_high: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_low: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_high: np.ndarray = field(default_factory=lambda: np.zeros(3))
    thrust_init: str = "hover"

    def __post_init__(self):
        for name in ("p", "euler", "v", "omega"):
            lo = np.asarray(getattr(self, name + "_low"), dtype=np.float64).reshape(3).copy()
            hi = np.asarray(getattr(self, name + "_high"), dtype=np.float64).reshape(3).copy()
            if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
                raise ValueError(f"non-finite {name} range")
            if np.any(hi < lo):
                raise ValueError(f"{name} range has high < low: {lo} .. {hi}")
            setattr(self, name + "_low", lo)
            setattr(self, name + "_high", hi)
        if self.thrust_init not in ("hover", "zero"):
            raise ValueError(f"unknown thrust_init {self.thrust_init!r}")

    def sample(self, rng: np.random.Generator, params: QuadParams) -> QuadState:
        p = rng.uniform(self.p_low, self.p_high)
        euler = rng.uniform(self.euler_low, self.euler_high)
        v = rng.uniform(self.v_low, self.v_high)
        omega = rng.uniform(self.omega_low, self.omega_high)
        f0 = params.hover_thrust() if self.thrust_init == "hover" else params.thrust_min
        return QuadState(p=p, q=quat_from_euler_zyx(euler), v=v, omega=omega,
                         f=[f0, f0, f0, f0])

    @classmethod
    def fixed(cls, position=(0.0, 0.0, 0.0), thrust_init: str = "hover") -> "InitialStateSampler":
        p = np.asarray(position, dtype=np.float64)
        return cls(p_low=p, p_high=p, thrust_init=thrust_init)

    @classmethod
    def for_task(cls, spec: TaskSpec, cfg: Mapping[str, str] | None = None) -> "InitialStateSampler":
        cfg = cfg or {}
        g = _config.get_float
        pos_r = g(cfg, "init_pos_range", 3.0)
        att_r = math.radians(g(cfg, "init_att_range_deg", 30.0))
        vel_r = g(cfg, "init_vel_range", 1.0)
        omg_r = g(cfg, "init_omega_range", 1.0)
        if spec.kind is TaskKind.GATE:
            offset = g(cfg, "gate_front_offset", 4.0)
            half = g(cfg, "gate_box_halfwidth", 1.0)
            center = spec.gate_position - offset * spec.gate_rotation[:, 0]
            return cls(p_low=center - half, p_high=center + half)
        omega_width = omg_r if spec.kind is TaskKind.MOTOR_FAILURE else 0.0
        return cls(
            p_low=spec.p_target - pos_r, p_high=spec.p_target + pos_r,
            euler_low=-att_r * np.ones(3), euler_high=att_r * np.ones(3),
            v_low=-vel_r * np.ones(3), v_high=vel_r * np.ones(3),
            omega_low=-omega_width * np.ones(3), omega_high=omega_width * np.ones(3),
        )
