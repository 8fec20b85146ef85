"""Vectorized simulation of N independent quadrotors with deterministic seeding.

Work is partitioned across numba worker threads inside a single batched
kernel call; every environment's arithmetic is independent of the others,
so results are bit-identical for any worker count. Per-env RNG streams are
spawned from (base_seed, env index) on the calling thread, keeping resets
and sensor noise independent of scheduling as well.

The external API is single-caller: do not invoke step from two threads at
once. Batches returned to the caller are copies and safe to hand off.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import config as _config
from . import kernels
from .control import BodyRateCommand, Command, RateGains, RotorThrustCommand
from .dynamics import Integrator, QuadParams, QuadState
from .sensing import ImuNoiseModel, ImuReading
from .tasks import (InitialStateSampler, TaskSpec, actions_to_commands,
                    check_termination_batch, observe_batch, reason_from_code,
                    reward_batch)

_METHOD_CODE = {Integrator.EULER: kernels.METHOD_EULER, Integrator.RK4: kernels.METHOD_RK4}


@dataclass
class VecSimConfig:
    n_envs: int = 1
    dt: float = 0.02
    method: Integrator = Integrator.RK4
    n_workers: int = 1
    base_seed: int = 0
    params: "QuadParams | Sequence[QuadParams]" = field(default_factory=QuadParams)
    gains: RateGains = field(default_factory=RateGains)
    noise: ImuNoiseModel = field(default_factory=ImuNoiseModel)
    task: Optional[TaskSpec] = None
    sampler: Optional[InitialStateSampler] = None

    def __post_init__(self):
        self.n_envs = int(self.n_envs)
        self.n_workers = int(self.n_workers)
        self.method = Integrator.parse(self.method)
        if self.n_envs < 1:
            raise ValueError(f"n_envs must be >= 1, got {self.n_envs}")
        if self.n_workers < 1:
            raise ValueError(f"n_workers must be >= 1, got {self.n_workers}")
        if not (self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.task is not None and self.task.dt != self.dt:
            raise ValueError(f"task dt {self.task.dt} != sim dt {self.dt}")

    def params_list(self) -> list[QuadParams]:
        if isinstance(self.params, QuadParams):
            return [self.params] * self.n_envs
        params = list(self.params)
        if len(params) != self.n_envs:
            raise ValueError(f"per-env params list has {len(params)} entries "
                             f"for {self.n_envs} envs")
        return params

    @classmethod
    def from_config(cls, cfg: Mapping[str, str], **overrides) -> "VecSimConfig":
        task = TaskSpec.from_config(cfg) if "task" in cfg else None
        sampler = InitialStateSampler.for_task(task, cfg) if task is not None else None
        base = dict(
            n_envs=_config.get_int(cfg, "n_envs", 1),
            dt=_config.get_float(cfg, "dt", 0.02),
            method=cfg.get("method", "rk4"),
            n_workers=_config.get_int(cfg, "n_workers", 1),
            base_seed=_config.get_int(cfg, "base_seed", 0),
            params=QuadParams.from_config(cfg),
            gains=RateGains.from_config(cfg),
            noise=ImuNoiseModel.from_config(cfg),
            task=task,
            sampler=sampler,
        )
        base.update(overrides)
        return cls(**base)


@dataclass
class BatchResult:
    """One batch step/reset outcome. Arrays are row-per-env copies."""

    positions: np.ndarray
    quats: np.ndarray
    vels: np.ndarray
    omegas: np.ndarray
    thrusts: np.ndarray
    times: np.ndarray
    imu_accel: np.ndarray
    imu_gyro: np.ndarray
    done: np.ndarray
    infos: list
    steps_per_second: float
    observations: Optional[np.ndarray] = None
    rewards: Optional[np.ndarray] = None

    @property
    def n_envs(self) -> int:
        return self.positions.shape[0]

    def state(self, i: int) -> QuadState:
        return QuadState(p=self.positions[i], q=self.quats[i], v=self.vels[i],
                         omega=self.omegas[i], f=self.thrusts[i], t=self.times[i])

    @property
    def states(self) -> list[QuadState]:
        return [self.state(i) for i in range(self.n_envs)]

    def imu_reading(self, i: int) -> ImuReading:
        return ImuReading(accel=self.imu_accel[i], gyro=self.imu_gyro[i], t=self.times[i])

    @property
    def imu(self) -> list[ImuReading]:
        return [self.imu_reading(i) for i in range(self.n_envs)]


class VecSim:
    """N independent quadrotors stepped as one batch."""

    def __init__(self, config: VecSimConfig):
        self.config = config
        n = config.n_envs
        self.n_envs = n
        self._workers = kernels.resolve_workers(config.n_workers)
        self._method_code = _METHOD_CODE[config.method]
        self._params = config.params_list()
        self._P = np.stack([kernels.params_row(p, config.gains) for p in self._params])
        self._S = np.zeros((n, kernels.STATE_DIM))
        self._S[:, 3] = 1.0
        self._S_next = np.empty_like(self._S)
        self._IMU = np.zeros((n, kernels.IMU_DIM))
        self._times = np.zeros(n)
        self._step_counts = np.zeros(n, dtype=np.int64)
        self._episode_returns = np.zeros(n)
        self._rngs: list[np.random.Generator] = []
        self._sampler: Optional[InitialStateSampler] = None
        self._was_reset = False

    # -- helpers -----------------------------------------------------------

    def _default_sampler(self) -> InitialStateSampler:
        if self.config.sampler is not None:
            return self.config.sampler
        if self.config.task is not None:
            return InitialStateSampler.for_task(self.config.task)
        return InitialStateSampler.fixed()

    def _state_row(self, i: int, state: QuadState):
        self._S[i, 0:3] = state.p
        self._S[i, 3:7] = state.q
        self._S[i, 7:10] = state.v
        self._S[i, 10:13] = state.omega
        self._S[i, 13:17] = state.f

    def _imu_row(self, i: int):
        """Noise-free IMU for env i at its current state (df from f_des = f)."""
        kernels.step_env_imu(self._S[i], self._S[i, 13:17].copy(), self._P[i], self._IMU[i])

    def _apply_noise(self, accel: np.ndarray, gyro: np.ndarray):
        noise = self.config.noise
        if noise.accel_bias.any():
            accel += noise.accel_bias
        if noise.gyro_bias.any():
            gyro += noise.gyro_bias
        if noise.accel_noise_std > 0.0:
            for i in range(self.n_envs):
                accel[i] += self._rngs[i].normal(0.0, noise.accel_noise_std, 3)
        if noise.gyro_noise_std > 0.0:
            for i in range(self.n_envs):
                gyro[i] += self._rngs[i].normal(0.0, noise.gyro_noise_std, 3)

    def _reset_env(self, i: int):
        state = self._sampler.sample(self._rngs[i], self._params[i])
        self._state_row(i, state)
        self._times[i] = 0.0
        self._step_counts[i] = 0
        self._episode_returns[i] = 0.0

    def _result(self, done: np.ndarray, infos: list, sps: float,
                observations=None, rewards=None) -> BatchResult:
        accel = self._IMU[:, 0:3].copy()
        gyro = self._IMU[:, 3:6].copy()
        self._apply_noise(accel, gyro)
        return BatchResult(
            positions=self._S[:, 0:3].copy(), quats=self._S[:, 3:7].copy(),
            vels=self._S[:, 7:10].copy(), omegas=self._S[:, 10:13].copy(),
            thrusts=self._S[:, 13:17].copy(), times=self._times.copy(),
            imu_accel=accel, imu_gyro=gyro, done=done, infos=infos,
            steps_per_second=sps, observations=observations, rewards=rewards)

    # -- public API --------------------------------------------------------

    def reset(self, sampler: Optional[InitialStateSampler] = None) -> BatchResult:
        """Seed per-env streams from (base_seed, i) and draw initial states.

        Deterministic for a fixed base_seed regardless of n_workers; calling
        reset again reproduces the same batch and stream states.
        """
        self._sampler = sampler or self._default_sampler()
        children = np.random.SeedSequence(self.config.base_seed).spawn(self.n_envs)
        self._rngs = [np.random.default_rng(s) for s in children]
        for i in range(self.n_envs):
            self._reset_env(i)
            self._imu_row(i)
        self._was_reset = True
        observations = None
        if self.config.task is not None:
            observations = observe_batch(self._S[:, 0:3], self._S[:, 3:7],
                                         self._S[:, 7:10], self._S[:, 10:13],
                                         self.config.task)
        done = np.zeros(self.n_envs, dtype=bool)
        return self._result(done, [{} for _ in range(self.n_envs)], 0.0,
                            observations=observations)

    def step(self, commands: Sequence[Command]) -> BatchResult:
        """Advance one dt from a per-env list of Command objects."""
        if len(commands) != self.n_envs:
            raise ValueError(f"got {len(commands)} commands for {self.n_envs} envs")
        cmd = np.empty((self.n_envs, 4))
        mode = np.empty(self.n_envs, dtype=np.uint8)
        for i, c in enumerate(commands):
            if isinstance(c, BodyRateCommand):
                cmd[i, 0] = c.c
                cmd[i, 1:4] = c.omega_des
                mode[i] = 1
            elif isinstance(c, RotorThrustCommand):
                cmd[i] = c.f_des
                mode[i] = 0
            else:
                raise TypeError(f"command {i} has unsupported type {type(c).__name__}")
        return self._step_arrays(cmd, mode)

    def step_thrusts(self, f_des: np.ndarray) -> BatchResult:
        """Advance one dt with desired rotor thrusts, shape (n_envs, 4)."""
        f_des = np.ascontiguousarray(f_des, dtype=np.float64)
        if f_des.shape != (self.n_envs, 4):
            raise ValueError(f"f_des shape {f_des.shape} != ({self.n_envs}, 4)")
        return self._step_arrays(f_des, np.zeros(self.n_envs, dtype=np.uint8))

    def step_bodyrate(self, c: np.ndarray, omega_des: np.ndarray) -> BatchResult:
        """Advance one dt with body-rate commands (collective c, rates omega_des)."""
        cmd = np.empty((self.n_envs, 4))
        cmd[:, 0] = np.asarray(c, dtype=np.float64).reshape(self.n_envs)
        cmd[:, 1:4] = np.asarray(omega_des, dtype=np.float64).reshape(self.n_envs, 3)
        return self._step_arrays(cmd, np.ones(self.n_envs, dtype=np.uint8))

    def step_actions(self, actions: np.ndarray) -> BatchResult:
        """Advance one dt from task-space actions (requires a task)."""
        if self.config.task is None:
            raise ValueError("step_actions requires a task")
        cmd, mode = actions_to_commands(np.asarray(actions, dtype=np.float64),
                                        self.config.task, self._params[0])
        return self._step_arrays(cmd, mode)

    def pose_batch(self) -> tuple[float, np.ndarray, np.ndarray]:
        """(sim_time, positions, quats) snapshot for state publishing."""
        return float(self._times.max(initial=0.0)), self._S[:, 0:3].copy(), self._S[:, 3:7].copy()

    # -- core --------------------------------------------------------------

    def _step_arrays(self, cmd: np.ndarray, mode: np.ndarray) -> BatchResult:
        if not self._was_reset:
            raise RuntimeError("step before reset")
        if not np.isfinite(cmd).all():
            raise ValueError("non-finite command batch")
        t0 = time.perf_counter()
        task = self.config.task
        prev_P = self._S[:, 0:3].copy() if (task is not None) else None

        kernels.set_worker_threads(self._workers)
        kernels.step_batch(self._S, cmd, mode, self._P, self.config.dt,
                           self._method_code, self._S_next, self._IMU)
        self._S, self._S_next = self._S_next, self._S
        self._step_counts += 1
        self._times += self.config.dt

        observations = None
        rewards = None
        infos = [{} for _ in range(self.n_envs)]
        if task is not None:
            codes = check_termination_batch(self._S[:, 0:3], prev_P,
                                            self._step_counts, task)
            rewards = reward_batch(self._S[:, 0:3], self._S[:, 3:7], self._S[:, 7:10],
                                   self._S[:, 10:13], codes, task)
            self._episode_returns += rewards
            done = codes != 0
            observations = observe_batch(self._S[:, 0:3], self._S[:, 3:7],
                                         self._S[:, 7:10], self._S[:, 10:13], task)
            for i in np.nonzero(done)[0]:
                infos[i] = {
                    "termination": reason_from_code(codes[i]).value,
                    "terminal_state": self.state_of(i),
                    "terminal_observation": observations[i].copy(),
                    "episode_return": float(self._episode_returns[i]),
                    "episode_steps": int(self._step_counts[i]),
                }
                self._reset_env(i)
                self._imu_row(i)
            if done.any():
                # refresh observations for the auto-reset rows
                ridx = np.nonzero(done)[0]
                observations[ridx] = observe_batch(
                    self._S[ridx, 0:3], self._S[ridx, 3:7], self._S[ridx, 7:10],
                    self._S[ridx, 10:13], task)
        else:
            done = np.zeros(self.n_envs, dtype=bool)

        elapsed = time.perf_counter() - t0
        sps = self.n_envs / elapsed if elapsed > 0 else float("inf")
        return self._result(done, infos, sps, observations=observations, rewards=rewards)

    def state_of(self, i: int) -> QuadState:
        return QuadState(p=self._S[i, 0:3], q=self._S[i, 3:7], v=self._S[i, 7:10],
                         omega=self._S[i, 10:13], f=self._S[i, 13:17], t=self._times[i])


def benchmark(n_envs: int, n_workers: int, dt: float = 0.02,
              method: "Integrator | str" = Integrator.RK4, duration: float = 1.0,
              seed: int = 0, params: Optional[QuadParams] = None) -> dict:
    """Measure raw stepping throughput with uniformly random rotor thrusts.

    Returns a dict with measured env-steps per second; the number is always
    a wall-clock measurement, never an estimate.
    """
    if not (duration > 0):
        raise ValueError(f"duration must be > 0, got {duration}")
    params = params or QuadParams()
    cfg = VecSimConfig(n_envs=n_envs, dt=dt, method=Integrator.parse(method),
                       n_workers=n_workers, base_seed=seed, params=params)
    sim = VecSim(cfg)
    sim.reset(InitialStateSampler.fixed())
    rng = np.random.default_rng(seed)
    lo, hi = params.thrust_min, params.thrust_max
    for _ in range(3):  # warm the JIT and caches outside the timed window
        sim.step_thrusts(rng.uniform(lo, hi, (n_envs, 4)))
    n_steps = 0
    t0 = time.perf_counter()
    while True:
        sim.step_thrusts(rng.uniform(lo, hi, (n_envs, 4)))
        n_steps += 1
        elapsed = time.perf_counter() - t0
        if elapsed >= duration:
            break
    return {
        "n_envs": n_envs,
        "n_workers": n_workers,
        "dt": dt,
        "method": Integrator.parse(method).value,
        "steps_per_second": n_envs * n_steps / elapsed,
        "vec_steps": n_steps,
        "elapsed": elapsed,
    }
