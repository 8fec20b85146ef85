"""Simulated IMU: specific-force and body-rate readings with optional noise.

The accelerometer reports specific force in the body frame,

    accel = R(q)^T (dv + [0, 0, g_z]) + bias + white noise

so a hovering vehicle reads +g_z on its z axis and a free-falling one reads
zero. Gaussian noise is drawn per sample; biases are constant. Sampled at
the dynamics step rate, co-located with the body origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import config as _config
from .dynamics import QuadParams, QuadState, StateDerivative


@dataclass
class ImuReading:
    accel: np.ndarray
    gyro: np.ndarray
    t: float


@dataclass
class ImuNoiseModel:
    accel_noise_std: float = 0.0
    gyro_noise_std: float = 0.0
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.accel_noise_std = float(self.accel_noise_std)
        self.gyro_noise_std = float(self.gyro_noise_std)
        self.accel_bias = np.asarray(self.accel_bias, dtype=np.float64).reshape(3).copy()
        self.gyro_bias = np.asarray(self.gyro_bias, dtype=np.float64).reshape(3).copy()
        if self.accel_noise_std < 0 or self.gyro_noise_std < 0:
            raise ValueError("noise stds must be >= 0")

    @property
    def is_noise_free(self) -> bool:
        return (self.accel_noise_std == 0.0 and self.gyro_noise_std == 0.0
                and not self.accel_bias.any() and not self.gyro_bias.any())

    @classmethod
    def from_config(cls, cfg: Mapping[str, str]) -> "ImuNoiseModel":
        g = _config.get_float
        return cls(
            accel_noise_std=g(cfg, "imu_accel_std", 0.0),
            gyro_noise_std=g(cfg, "imu_gyro_std", 0.0),
            accel_bias=[g(cfg, "imu_accel_bias_x", 0.0),
                        g(cfg, "imu_accel_bias_y", 0.0),
                        g(cfg, "imu_accel_bias_z", 0.0)],
            gyro_bias=[g(cfg, "imu_gyro_bias_x", 0.0),
                       g(cfg, "imu_gyro_bias_y", 0.0),
                       g(cfg, "imu_gyro_bias_z", 0.0)],
        )


def specific_force_body(state: QuadState, deriv: StateDerivative,
                        params: QuadParams) -> np.ndarray:
    """Noise-free accelerometer value: R^T (dv + g) in the body frame."""
    qw, qx, qy, qz = state.q
    r00 = 1.0 - 2.0 * (qy * qy + qz * qz)
    r01 = 2.0 * (qx * qy - qw * qz)
    r02 = 2.0 * (qx * qz + qw * qy)
    r10 = 2.0 * (qx * qy + qw * qz)
    r11 = 1.0 - 2.0 * (qx * qx + qz * qz)
    r12 = 2.0 * (qy * qz - qw * qx)
    r20 = 2.0 * (qx * qz - qw * qy)
    r21 = 2.0 * (qy * qz + qw * qx)
    r22 = 1.0 - 2.0 * (qx * qx + qy * qy)
    sfx = deriv.dv[0]
    sfy = deriv.dv[1]
    sfz = deriv.dv[2] + params.gravity
    return np.array([
        (r00 * sfx + r10 * sfy) + r20 * sfz,
        (r01 * sfx + r11 * sfy) + r21 * sfz,
        (r02 * sfx + r12 * sfy) + r22 * sfz,
    ])


def imu_measure(state: QuadState, deriv: StateDerivative, params: QuadParams,
                noise: ImuNoiseModel, rng: np.random.Generator | None = None) -> ImuReading:
    """One IMU sample at the state's time.

    With a zero noise model the reading equals the analytic specific force
    and body rates exactly and the rng is never consumed, so streams stay
    reproducible across noise configurations per channel.
    """
    accel = specific_force_body(state, deriv, params) + noise.accel_bias
    gyro = state.omega + noise.gyro_bias
    if noise.accel_noise_std > 0.0:
        if rng is None:
            raise ValueError("accel noise enabled but no rng supplied")
        accel = accel + rng.normal(0.0, noise.accel_noise_std, 3)
    if noise.gyro_noise_std > 0.0:
        if rng is None:
            raise ValueError("gyro noise enabled but no rng supplied")
        gyro = gyro + rng.normal(0.0, noise.gyro_noise_std, 3)
    return ImuReading(accel=accel, gyro=gyro, t=state.t)
