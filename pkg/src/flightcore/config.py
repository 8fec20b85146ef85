"""Plain-text key/value configuration files shared by all modules.

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored. Keys are validated against the known-key registry so typos
fail loudly instead of silently falling back to defaults.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Mapping

ENV_CONFIG = "FLIGHTCORE_CONFIG"

# Vehicle parameters (dynamics-core).
VEHICLE_KEYS = frozenset({
    "mass", "arm_length",
    "inertia_xx", "inertia_yy", "inertia_zz",
    "drag_x", "drag_y", "drag_z",
    "kappa", "motor_tau", "thrust_min", "thrust_max",
})

# Body-rate controller gains.
GAIN_KEYS = frozenset({"rate_kp_x", "rate_kp_y", "rate_kp_z"})

# IMU noise model.
IMU_KEYS = frozenset({
    "imu_accel_std", "imu_gyro_std",
    "imu_accel_bias_x", "imu_accel_bias_y", "imu_accel_bias_z",
    "imu_gyro_bias_x", "imu_gyro_bias_y", "imu_gyro_bias_z",
})

# Simulation batch setup.
SIM_KEYS = frozenset({"n_envs", "n_workers", "dt", "method", "base_seed"})

# Task selection and per-task fields.
TASK_KEYS = frozenset({
    "task", "episode_length",
    "target_x", "target_y", "target_z",
    "reward_c1", "reward_c2", "reward_c3", "reward_c4",
    "gate_x", "gate_y", "gate_z",
    "gate_roll", "gate_pitch", "gate_yaw",
    "gate_radius", "gate_frame_width", "gate_margin",
    "failed_rotor", "stabilize_obs_layout",
    "init_pos_range", "init_att_range_deg", "init_vel_range",
    "init_omega_range", "gate_front_offset", "gate_box_halfwidth",
})

KNOWN_KEYS = VEHICLE_KEYS | GAIN_KEYS | IMU_KEYS | SIM_KEYS | TASK_KEYS


class ConfigError(ValueError):
    """Raised for malformed config files or unknown/invalid keys."""


def parse_config(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse key/value config text into a string-valued dict."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if not value:
            raise ConfigError(f"{source}:{lineno}: empty value for {key!r}")
        out[key] = value
    return out


def load_config(path: str | os.PathLike) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def load_default_config(explicit_path: str | None = None) -> dict[str, str]:
    """Load from an explicit path, else $FLIGHTCORE_CONFIG, else empty."""
    if explicit_path is not None:
        return load_config(explicit_path)
    env_path = os.environ.get(ENV_CONFIG)
    if env_path:
        return load_config(env_path)
    return {}


def get_float(cfg: Mapping[str, str], key: str, default: float) -> float:
    if key not in cfg:
        return default
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a number: {cfg[key]!r}") from exc


def get_int(cfg: Mapping[str, str], key: str, default: int) -> int:
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not an integer: {cfg[key]!r}") from exc
