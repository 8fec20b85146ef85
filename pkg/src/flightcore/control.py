"""Low-level body-rate controller: rate command in, four rotor thrusts out.

Proportional rate loop with gyroscopic feedforward,

    eta_des = J (kp * (omega_des - omega)) + omega x J omega

allocated to rotor thrusts through the inverse mixing matrix and clamped
to the thrust limits. The controller runs once per dynamics step; there is
no separate inner clock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from . import config as _config
from .dynamics import ParameterError, QuadParams, QuadState, unmix


@dataclass
class BodyRateCommand:
    """Mass-normalized collective thrust (m/s^2) plus desired body rates (rad/s)."""

    c: float
    omega_des: np.ndarray

    def __post_init__(self):
        self.c = float(self.c)
        self.omega_des = np.asarray(self.omega_des, dtype=np.float64).reshape(3).copy()
        if not (self.c >= 0):
            raise ValueError(f"collective thrust must be >= 0, got {self.c}")
        if not np.isfinite(self.omega_des).all():
            raise ValueError("non-finite omega_des")


@dataclass
class RotorThrustCommand:
    """Direct desired thrust per rotor, newtons."""

    f_des: np.ndarray

    def __post_init__(self):
        self.f_des = np.asarray(self.f_des, dtype=np.float64).reshape(4).copy()
        if not np.isfinite(self.f_des).all():
            raise ValueError("non-finite f_des")


Command = Union[BodyRateCommand, RotorThrustCommand]


@dataclass
class RateGains:
    """Proportional body-rate gains, 1/s.

    Defaults give a near-critically-damped rate loop with the default
    vehicle (motor_tau 0.033 s), so the closed-loop rate error decays
    without overshoot.
    """

    kp: np.ndarray = field(default_factory=lambda: np.array([6.0, 6.0, 5.0]))

    def __post_init__(self):
        self.kp = np.asarray(self.kp, dtype=np.float64).reshape(3).copy()
        if not np.all(self.kp > 0):
            raise ParameterError(f"rate gains must be > 0, got {self.kp}")

    @classmethod
    def from_config(cls, cfg: Mapping[str, str]) -> "RateGains":
        g = _config.get_float
        return cls(kp=[g(cfg, "rate_kp_x", 6.0),
                       g(cfg, "rate_kp_y", 6.0),
                       g(cfg, "rate_kp_z", 5.0)])


def bodyrate_to_thrusts(cmd: BodyRateCommand, state: QuadState, params: QuadParams,
                        gains: RateGains) -> np.ndarray:
    """Desired rotor thrusts tracking a body-rate command, clamped to limits.

    At zero rate error the output is the pure collective allocation
    c * m / 4 per rotor (before clamping). Expression grouping is mirrored
    by the batch kernel, keep both in sync when editing.
    """
    wx, wy, wz = state.omega
    wdx, wdy, wdz = cmd.omega_des
    kpx, kpy, kpz = gains.kp
    jx, jy, jz = params.inertia

    eta_x = jx * (kpx * (wdx - wx)) + (jz - jy) * (wy * wz)
    eta_y = jy * (kpy * (wdy - wy)) + (jx - jz) * (wz * wx)
    eta_z = jz * (kpz * (wdz - wz)) + (jy - jx) * (wx * wy)

    f = unmix(cmd.c, np.array([eta_x, eta_y, eta_z]), params)
    for i in range(4):
        if f[i] < params.thrust_min:
            f[i] = params.thrust_min
        elif f[i] > params.thrust_max:
            f[i] = params.thrust_max
    return f
