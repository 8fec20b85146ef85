"""Rigid-body quadrotor dynamics: rotor mixing, motor lag, fixed-step integration.

World frame is z-up with gravity [0, 0, -g_z]. Quaternions are scalar-first
[w, x, y, z] and rotate body coordinates into world coordinates. The state
derivative is

    dp     = v
    dv     = R(q) [0, 0, c] - [0, 0, g_z] - R D R^T v,   c = (f1+f2+f3+f4)/m
    dq     = 1/2 * Lambda(omega) q
    domega = J^-1 (eta - omega x J omega)
    df_i   = (f_des_i - f_i) / alpha

with a diagonal rotor-drag matrix D and per-rotor first-order motor lag.

All functions here are pure and operate on a single vehicle; the batched
hot path lives in :mod:`flightcore.kernels` and mirrors the exact operation
order used here, so the two paths agree bit-for-bit (tested).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Protocol, runtime_checkable

import numpy as np

from . import config as _config

GRAVITY = 9.81

_SQRT2 = math.sqrt(2.0)

# Packed state layout used by the integrator and the batch kernel:
# [p(3), q(4), v(3), omega(3), f(4)]
STATE_DIM = 17


class ParameterError(ValueError):
    """Vehicle parameters violate their validity constraints."""


class StateError(ValueError):
    """A state passed to the dynamics is non-finite or non-normalized."""


class AllocationError(RuntimeError):
    """The thrust-allocation matrix is singular (kappa or arm length zero)."""


class Integrator(Enum):
    EULER = "euler"
    RK4 = "rk4"

    @classmethod
    def parse(cls, name: "str | Integrator") -> "Integrator":
        if isinstance(name, Integrator):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValueError(f"unknown integrator {name!r} (expected 'euler' or 'rk4')") from None


def _vec3(value) -> np.ndarray:
    return np.asarray(value, dtype=np.float64).reshape(3).copy()


@dataclass
class QuadParams:
    """Physical vehicle parameters.

    inertia and drag are the diagonals of the (diagonal) inertia and
    rotor-drag matrices. Defaults are representative hobby-quadrotor values.
    """

    mass: float = 1.0
    arm_length: float = 0.17
    inertia: np.ndarray = field(default_factory=lambda: np.array([0.0025, 0.0021, 0.0043]))
    drag: np.ndarray = field(default_factory=lambda: np.zeros(3))
    kappa: float = 0.016
    motor_tau: float = 0.033
    thrust_min: float = 0.0
    thrust_max: float = 8.0
    gravity: float = GRAVITY

    def __post_init__(self):
        self.mass = float(self.mass)
        self.arm_length = float(self.arm_length)
        self.inertia = _vec3(self.inertia)
        self.drag = _vec3(self.drag)
        self.kappa = float(self.kappa)
        self.motor_tau = float(self.motor_tau)
        self.thrust_min = float(self.thrust_min)
        self.thrust_max = float(self.thrust_max)
        self.gravity = float(self.gravity)
        self.validate()

    def validate(self):
        if not (self.mass > 0):
            raise ParameterError(f"mass must be > 0, got {self.mass}")
        if not (self.arm_length > 0):
            raise ParameterError(f"arm_length must be > 0, got {self.arm_length}")
        if not (self.motor_tau > 0):
            raise ParameterError(f"motor_tau must be > 0, got {self.motor_tau}")
        if not np.all(self.inertia > 0):
            raise ParameterError(f"inertia diagonal must be > 0, got {self.inertia}")
        if not np.all(self.drag >= 0):
            raise ParameterError(f"drag coefficients must be >= 0, got {self.drag}")
        if not (0 <= self.thrust_min < self.thrust_max):
            raise ParameterError(
                f"need 0 <= thrust_min < thrust_max, got [{self.thrust_min}, {self.thrust_max}]")
        if not np.isfinite([self.kappa, self.gravity]).all():
            raise ParameterError("kappa and gravity must be finite")

    @property
    def inertia_matrix(self) -> np.ndarray:
        return np.diag(self.inertia)

    def hover_thrust(self) -> float:
        """Per-rotor thrust that cancels gravity, clipped to the limits."""
        f = self.mass * self.gravity / 4.0
        return float(min(max(f, self.thrust_min), self.thrust_max))

    @classmethod
    def from_config(cls, cfg: Mapping[str, str]) -> "QuadParams":
        g = _config.get_float
        return cls(
            mass=g(cfg, "mass", 1.0),
            arm_length=g(cfg, "arm_length", 0.17),
            inertia=[g(cfg, "inertia_xx", 0.0025),
                     g(cfg, "inertia_yy", 0.0021),
                     g(cfg, "inertia_zz", 0.0043)],
            drag=[g(cfg, "drag_x", 0.0), g(cfg, "drag_y", 0.0), g(cfg, "drag_z", 0.0)],
            kappa=g(cfg, "kappa", 0.016),
            motor_tau=g(cfg, "motor_tau", 0.033),
            thrust_min=g(cfg, "thrust_min", 0.0),
            thrust_max=g(cfg, "thrust_max", 8.0),
        )


@dataclass
class QuadState:
    """Full simulated state of one vehicle."""

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    f: np.ndarray = field(default_factory=lambda: np.zeros(4))
    t: float = 0.0

    def __post_init__(self):
        self.p = _vec3(self.p)
        self.q = np.asarray(self.q, dtype=np.float64).reshape(4).copy()
        self.v = _vec3(self.v)
        self.omega = _vec3(self.omega)
        self.f = np.asarray(self.f, dtype=np.float64).reshape(4).copy()
        self.t = float(self.t)

    def copy(self) -> "QuadState":
        return QuadState(self.p, self.q, self.v, self.omega, self.f, self.t)

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.p).all() and np.isfinite(self.q).all()
            and np.isfinite(self.v).all() and np.isfinite(self.omega).all()
            and np.isfinite(self.f).all() and math.isfinite(self.t))

    def packed(self) -> np.ndarray:
        """Flat [p, q, v, omega, f] vector (copy)."""
        return np.concatenate([self.p, self.q, self.v, self.omega, self.f])

    @classmethod
    def from_packed(cls, y: np.ndarray, t: float = 0.0) -> "QuadState":
        y = np.asarray(y, dtype=np.float64).reshape(STATE_DIM)
        return cls(p=y[0:3], q=y[3:7], v=y[7:10], omega=y[10:13], f=y[13:17], t=t)

    @classmethod
    def hover(cls, params: QuadParams, position=(0.0, 0.0, 0.0)) -> "QuadState":
        """Equilibrium state: level attitude, thrusts exactly canceling gravity."""
        f = params.hover_thrust()
        return cls(p=position, f=[f, f, f, f])


@dataclass
class StateDerivative:
    """Time derivative of QuadState (df is the motor-lag thrust rate)."""

    dp: np.ndarray
    dq: np.ndarray
    dv: np.ndarray
    domega: np.ndarray
    df: np.ndarray


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    """World-from-body rotation matrix of a scalar-first unit quaternion."""
    qw, qx, qy, qz = q
    return np.array([
        [1.0 - 2.0 * (qy * qy + qz * qz), 2.0 * (qx * qy - qw * qz), 2.0 * (qx * qz + qw * qy)],
        [2.0 * (qx * qy + qw * qz), 1.0 - 2.0 * (qx * qx + qz * qz), 2.0 * (qy * qz - qw * qx)],
        [2.0 * (qx * qz - qw * qy), 2.0 * (qy * qz + qw * qx), 1.0 - 2.0 * (qx * qx + qy * qy)],
    ])


def mix(f: np.ndarray, params: QuadParams) -> tuple[float, np.ndarray]:
    """Map four rotor thrusts to mass-normalized collective thrust and body torques.

        eta_x = l/sqrt(2) * ( f1 - f2 - f3 + f4)
        eta_y = l/sqrt(2) * (-f1 - f2 + f3 + f4)
        eta_z = kappa     * ( f1 - f2 + f3 - f4)
        c     = (f1 + f2 + f3 + f4) / m
    """
    f1, f2, f3, f4 = np.asarray(f, dtype=np.float64).reshape(4)
    a = params.arm_length / _SQRT2
    eta_x = a * (((f1 - f2) - f3) + f4)
    eta_y = a * (((-f1 - f2) + f3) + f4)
    eta_z = params.kappa * (((f1 - f2) + f3) - f4)
    c = ((f1 + f2) + (f3 + f4)) / params.mass
    return c, np.array([eta_x, eta_y, eta_z])


def unmix(c: float, eta: np.ndarray, params: QuadParams) -> np.ndarray:
    """Invert mix(): thrusts realizing a collective thrust and body torques.

    The allocation matrix has mutually orthogonal rows, so the inverse is
    closed-form. The result is NOT clamped to the thrust limits; callers
    clamp. Raises AllocationError when kappa or arm length is zero.
    """
    if params.kappa == 0.0 or params.arm_length == 0.0:
        raise AllocationError(
            f"singular allocation: kappa={params.kappa}, arm_length={params.arm_length}")
    eta_x, eta_y, eta_z = np.asarray(eta, dtype=np.float64).reshape(3)
    a = params.arm_length / _SQRT2
    t0 = (float(c) * params.mass) / 4.0
    tx = eta_x / (4.0 * a)
    ty = eta_y / (4.0 * a)
    tz = eta_z / (4.0 * params.kappa)
    f1 = ((t0 + tx) - ty) + tz
    f2 = ((t0 - tx) - ty) - tz
    f3 = ((t0 - tx) + ty) + tz
    f4 = ((t0 + tx) + ty) - tz
    return np.array([f1, f2, f3, f4])


def _check_state(state: QuadState):
    if not state.is_finite():
        raise StateError("non-finite state")
    qw, qx, qy, qz = state.q
    norm = math.sqrt((qw * qw + qx * qx) + (qy * qy + qz * qz))
    if abs(norm - 1.0) > 1e-6:
        raise StateError(f"quaternion norm {norm} departs from 1 by more than 1e-6")


def _derivative_packed(y: np.ndarray, params: QuadParams, f_des: np.ndarray) -> np.ndarray:
    """Raw derivative on a packed state vector; no validation, no renorm.

    Used for integrator stages, where the quaternion is legitimately
    unnormalized. Expression grouping is mirrored bit-for-bit by the numba
    kernel in kernels.py, keep both in sync when editing.
    """
    qw, qx, qy, qz = y[3:7]
    vx, vy, vz = y[7:10]
    wx, wy, wz = y[10:13]
    f1, f2, f3, f4 = y[13:17]

    r00 = 1.0 - 2.0 * (qy * qy + qz * qz)
    r01 = 2.0 * (qx * qy - qw * qz)
    r02 = 2.0 * (qx * qz + qw * qy)
    r10 = 2.0 * (qx * qy + qw * qz)
    r11 = 1.0 - 2.0 * (qx * qx + qz * qz)
    r12 = 2.0 * (qy * qz - qw * qx)
    r20 = 2.0 * (qx * qz - qw * qy)
    r21 = 2.0 * (qy * qz + qw * qx)
    r22 = 1.0 - 2.0 * (qx * qx + qy * qy)

    a = params.arm_length / _SQRT2
    eta_x = a * (((f1 - f2) - f3) + f4)
    eta_y = a * (((-f1 - f2) + f3) + f4)
    eta_z = params.kappa * (((f1 - f2) + f3) - f4)
    c = ((f1 + f2) + (f3 + f4)) / params.mass

    # Rotor drag: velocity into the body frame, scale by D, back to world.
    dx, dy, dz = params.drag
    vbx = (r00 * vx + r10 * vy) + r20 * vz
    vby = (r01 * vx + r11 * vy) + r21 * vz
    vbz = (r02 * vx + r12 * vy) + r22 * vz
    fbx = dx * vbx
    fby = dy * vby
    fbz = dz * vbz
    awx = (r00 * fbx + r01 * fby) + r02 * fbz
    awy = (r10 * fbx + r11 * fby) + r12 * fbz
    awz = (r20 * fbx + r21 * fby) + r22 * fbz

    dvx = c * r02 - awx
    dvy = c * r12 - awy
    dvz = (c * r22 - params.gravity) - awz

    dqw = 0.5 * (((-qx * wx) - qy * wy) - qz * wz)
    dqx = 0.5 * ((qw * wx + qy * wz) - qz * wy)
    dqy = 0.5 * ((qw * wy + qz * wx) - qx * wz)
    dqz = 0.5 * ((qw * wz + qx * wy) - qy * wx)

    # Diagonal inertia: gyroscopic term written so it vanishes exactly for
    # isotropic J.
    jx, jy, jz = params.inertia
    dwx = (eta_x - (jz - jy) * (wy * wz)) / jx
    dwy = (eta_y - (jx - jz) * (wz * wx)) / jy
    dwz = (eta_z - (jy - jx) * (wx * wy)) / jz

    tau = params.motor_tau
    return np.array([
        vx, vy, vz,
        dqw, dqx, dqy, dqz,
        dvx, dvy, dvz,
        dwx, dwy, dwz,
        (f_des[0] - f1) / tau, (f_des[1] - f2) / tau,
        (f_des[2] - f3) / tau, (f_des[3] - f4) / tau,
    ])


def derivative(state: QuadState, params: QuadParams, f_des: np.ndarray) -> StateDerivative:
    """Continuous-time state derivative under desired rotor thrusts f_des.

    Pure function; identical inputs produce bit-identical outputs. Raises
    StateError for non-finite inputs or a quaternion off the unit sphere by
    more than 1e-6.
    """
    _check_state(state)
    f_des = np.asarray(f_des, dtype=np.float64).reshape(4)
    if not np.isfinite(f_des).all():
        raise StateError("non-finite f_des")
    d = _derivative_packed(state.packed(), params, f_des)
    return StateDerivative(dp=d[0:3], dq=d[3:7], dv=d[7:10], domega=d[10:13], df=d[13:17])


def step(state: QuadState, params: QuadParams, f_des: np.ndarray, dt: float,
         method: "Integrator | str" = Integrator.RK4) -> QuadState:
    """Advance the state by one fixed step of Euler or RK4.

    The quaternion is renormalized and the thrusts clamped to the limits
    after the step (projection at step boundaries, the ODE itself stays
    smooth within the step). Deterministic: identical inputs give
    bit-identical outputs.
    """
    if not (dt > 0):
        raise ValueError(f"dt must be > 0, got {dt}")
    method = Integrator.parse(method)
    _check_state(state)
    f_des = np.asarray(f_des, dtype=np.float64).reshape(4)
    if not np.isfinite(f_des).all():
        raise StateError("non-finite f_des")

    y = state.packed()
    k1 = _derivative_packed(y, params, f_des)
    if method is Integrator.EULER:
        yn = y + dt * k1
    else:
        hh = 0.5 * dt
        k2 = _derivative_packed(y + hh * k1, params, f_des)
        k3 = _derivative_packed(y + hh * k2, params, f_des)
        k4 = _derivative_packed(y + dt * k3, params, f_des)
        h6 = dt / 6.0
        yn = y + h6 * ((k1 + 2.0 * k2) + (2.0 * k3 + k4))

    qw, qx, qy, qz = yn[3:7]
    norm = math.sqrt((qw * qw + qx * qx) + (qy * qy + qz * qz))
    if norm == 0.0 or not math.isfinite(norm):
        raise StateError("quaternion collapsed during integration")
    q = yn[3:7] / norm

    f = np.empty(4)
    for i in range(4):
        fi = yn[13 + i]
        if fi < params.thrust_min:
            fi = params.thrust_min
        elif fi > params.thrust_max:
            fi = params.thrust_max
        f[i] = fi

    return QuadState(p=yn[0:3], q=q, v=yn[7:10], omega=yn[10:13], f=f, t=state.t + dt)


@runtime_checkable
class DynamicsBackend(Protocol):
    """Swappable dynamics backend; consumers only need these two calls.

    Only the classical rigid-body model ships here. Higher-fidelity or
    hardware-backed models plug in by matching this surface.
    """

    def derivative(self, state: QuadState, params: QuadParams,
                   f_des: np.ndarray) -> StateDerivative: ...

    def step(self, state: QuadState, params: QuadParams, f_des: np.ndarray,
             dt: float, method: "Integrator | str") -> QuadState: ...


class ClassicalDynamics:
    """The built-in rigid-body model, as a DynamicsBackend."""

    derivative = staticmethod(derivative)
    step = staticmethod(step)
