"""Numba-compiled batch stepping kernels: the hot path of the vectorized sim.

Each environment is advanced with pure scalar arithmetic and no heap
allocation inside the parallel loop, so results are independent of thread
count and chunk boundaries (bit-exact for any worker count). The operation
order mirrors dynamics.py / control.py / sensing.py exactly; the two paths
are cross-checked bit-for-bit in the test suite. Keep them in sync.

Array layouts
-------------
state row   (17): [px,py,pz, qw,qx,qy,qz, vx,vy,vz, wx,wy,wz, f1,f2,f3,f4]
params row  (16): [mass, arm, jx, jy, jz, dx, dy, dz, kappa, tau,
                   fmin, fmax, gz, kpx, kpy, kpz]
command row  (4): mode 0 (rotor thrusts): [f1d,f2d,f3d,f4d]
                  mode 1 (body rate):     [c, wdx, wdy, wdz]
imu row      (6): [ax, ay, az, gx, gy, gz]
"""

from . import _threads  # noqa: F401  (must precede the numba import)

import numba
import numpy as np
from numba import njit, prange

STATE_DIM = 17
PARAM_DIM = 16
IMU_DIM = 6

# params row indices
P_MASS, P_ARM, P_JX, P_JY, P_JZ, P_DX, P_DY, P_DZ = 0, 1, 2, 3, 4, 5, 6, 7
P_KAPPA, P_TAU, P_FMIN, P_FMAX, P_GZ, P_KPX, P_KPY, P_KPZ = 8, 9, 10, 11, 12, 13, 14, 15

METHOD_EULER = 0
METHOD_RK4 = 1

_SQRT2 = np.sqrt(2.0)


def max_workers() -> int:
    """Upper bound on usable worker threads in this process."""
    return int(numba.config.NUMBA_NUM_THREADS)


def resolve_workers(n_workers: int) -> int:
    return max(1, min(int(n_workers), max_workers()))


def set_worker_threads(n_workers: int) -> int:
    """Clamp and apply the numba thread count; returns the effective count."""
    n = resolve_workers(n_workers)
    numba.set_num_threads(n)
    return n


@njit
def _deriv(px, py, pz, qw, qx, qy, qz, vx, vy, vz, wx, wy, wz, f1, f2, f3, f4,
           fd1, fd2, fd3, fd4, mass, arm, jx, jy, jz, dx, dy, dz, kappa, tau, gz):
    r00 = 1.0 - 2.0 * (qy * qy + qz * qz)
    r01 = 2.0 * (qx * qy - qw * qz)
    r02 = 2.0 * (qx * qz + qw * qy)
    r10 = 2.0 * (qx * qy + qw * qz)
    r11 = 1.0 - 2.0 * (qx * qx + qz * qz)
    r12 = 2.0 * (qy * qz - qw * qx)
    r20 = 2.0 * (qx * qz - qw * qy)
    r21 = 2.0 * (qy * qz + qw * qx)
    r22 = 1.0 - 2.0 * (qx * qx + qy * qy)

    a = arm / _SQRT2
    eta_x = a * (((f1 - f2) - f3) + f4)
    eta_y = a * (((-f1 - f2) + f3) + f4)
    eta_z = kappa * (((f1 - f2) + f3) - f4)
    c = ((f1 + f2) + (f3 + f4)) / mass

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
    dvz = (c * r22 - gz) - awz

    dqw = 0.5 * (((-qx * wx) - qy * wy) - qz * wz)
    dqx = 0.5 * ((qw * wx + qy * wz) - qz * wy)
    dqy = 0.5 * ((qw * wy + qz * wx) - qx * wz)
    dqz = 0.5 * ((qw * wz + qx * wy) - qy * wx)

    dwx = (eta_x - (jz - jy) * (wy * wz)) / jx
    dwy = (eta_y - (jx - jz) * (wz * wx)) / jy
    dwz = (eta_z - (jy - jx) * (wx * wy)) / jz

    return (vx, vy, vz, dqw, dqx, dqy, dqz, dvx, dvy, dvz, dwx, dwy, dwz,
            (fd1 - f1) / tau, (fd2 - f2) / tau, (fd3 - f3) / tau, (fd4 - f4) / tau)


@njit
def _clamp(x, lo, hi):
    if x < lo:
        return lo
    elif x > hi:
        return hi
    return x


@njit
def _bodyrate_thrusts(c, wdx, wdy, wdz, wx, wy, wz,
                      mass, arm, jx, jy, jz, kappa, fmin, fmax, kpx, kpy, kpz):
    eta_x = jx * (kpx * (wdx - wx)) + (jz - jy) * (wy * wz)
    eta_y = jy * (kpy * (wdy - wy)) + (jx - jz) * (wz * wx)
    eta_z = jz * (kpz * (wdz - wz)) + (jy - jx) * (wx * wy)
    a = arm / _SQRT2
    t0 = (c * mass) / 4.0
    tx = eta_x / (4.0 * a)
    ty = eta_y / (4.0 * a)
    tz = eta_z / (4.0 * kappa)
    f1 = ((t0 + tx) - ty) + tz
    f2 = ((t0 - tx) - ty) - tz
    f3 = ((t0 - tx) + ty) + tz
    f4 = ((t0 + tx) + ty) - tz
    return (_clamp(f1, fmin, fmax), _clamp(f2, fmin, fmax),
            _clamp(f3, fmin, fmax), _clamp(f4, fmin, fmax))


@njit
def _advance(px, py, pz, qw, qx, qy, qz, vx, vy, vz, wx, wy, wz, f1, f2, f3, f4,
             fd1, fd2, fd3, fd4, mass, arm, jx, jy, jz, dx, dy, dz, kappa, tau, gz,
             fmin, fmax, dt, method):
    (k1_0, k1_1, k1_2, k1_3, k1_4, k1_5, k1_6, k1_7, k1_8,
     k1_9, k1_10, k1_11, k1_12, k1_13, k1_14, k1_15, k1_16) = _deriv(
        px, py, pz, qw, qx, qy, qz, vx, vy, vz, wx, wy, wz, f1, f2, f3, f4,
        fd1, fd2, fd3, fd4, mass, arm, jx, jy, jz, dx, dy, dz, kappa, tau, gz)

    if method == METHOD_EULER:
        n0 = px + dt * k1_0
        n1 = py + dt * k1_1
        n2 = pz + dt * k1_2
        n3 = qw + dt * k1_3
        n4 = qx + dt * k1_4
        n5 = qy + dt * k1_5
        n6 = qz + dt * k1_6
        n7 = vx + dt * k1_7
        n8 = vy + dt * k1_8
        n9 = vz + dt * k1_9
        n10 = wx + dt * k1_10
        n11 = wy + dt * k1_11
        n12 = wz + dt * k1_12
        n13 = f1 + dt * k1_13
        n14 = f2 + dt * k1_14
        n15 = f3 + dt * k1_15
        n16 = f4 + dt * k1_16
    else:
        hh = 0.5 * dt
        (k2_0, k2_1, k2_2, k2_3, k2_4, k2_5, k2_6, k2_7, k2_8,
         k2_9, k2_10, k2_11, k2_12, k2_13, k2_14, k2_15, k2_16) = _deriv(
            px + hh * k1_0, py + hh * k1_1, pz + hh * k1_2,
            qw + hh * k1_3, qx + hh * k1_4, qy + hh * k1_5, qz + hh * k1_6,
            vx + hh * k1_7, vy + hh * k1_8, vz + hh * k1_9,
            wx + hh * k1_10, wy + hh * k1_11, wz + hh * k1_12,
            f1 + hh * k1_13, f2 + hh * k1_14, f3 + hh * k1_15, f4 + hh * k1_16,
            fd1, fd2, fd3, fd4, mass, arm, jx, jy, jz, dx, dy, dz, kappa, tau, gz)
        (k3_0, k3_1, k3_2, k3_3, k3_4, k3_5, k3_6, k3_7, k3_8,
         k3_9, k3_10, k3_11, k3_12, k3_13, k3_14, k3_15, k3_16) = _deriv(
            px + hh * k2_0, py + hh * k2_1, pz + hh * k2_2,
            qw + hh * k2_3, qx + hh * k2_4, qy + hh * k2_5, qz + hh * k2_6,
            vx + hh * k2_7, vy + hh * k2_8, vz + hh * k2_9,
            wx + hh * k2_10, wy + hh * k2_11, wz + hh * k2_12,
            f1 + hh * k2_13, f2 + hh * k2_14, f3 + hh * k2_15, f4 + hh * k2_16,
            fd1, fd2, fd3, fd4, mass, arm, jx, jy, jz, dx, dy, dz, kappa, tau, gz)
        (k4_0, k4_1, k4_2, k4_3, k4_4, k4_5, k4_6, k4_7, k4_8,
         k4_9, k4_10, k4_11, k4_12, k4_13, k4_14, k4_15, k4_16) = _deriv(
            px + dt * k3_0, py + dt * k3_1, pz + dt * k3_2,
            qw + dt * k3_3, qx + dt * k3_4, qy + dt * k3_5, qz + dt * k3_6,
            vx + dt * k3_7, vy + dt * k3_8, vz + dt * k3_9,
            wx + dt * k3_10, wy + dt * k3_11, wz + dt * k3_12,
            f1 + dt * k3_13, f2 + dt * k3_14, f3 + dt * k3_15, f4 + dt * k3_16,
            fd1, fd2, fd3, fd4, mass, arm, jx, jy, jz, dx, dy, dz, kappa, tau, gz)
        h6 = dt / 6.0
        n0 = px + h6 * ((k1_0 + 2.0 * k2_0) + (2.0 * k3_0 + k4_0))
        n1 = py + h6 * ((k1_1 + 2.0 * k2_1) + (2.0 * k3_1 + k4_1))
        n2 = pz + h6 * ((k1_2 + 2.0 * k2_2) + (2.0 * k3_2 + k4_2))
        n3 = qw + h6 * ((k1_3 + 2.0 * k2_3) + (2.0 * k3_3 + k4_3))
        n4 = qx + h6 * ((k1_4 + 2.0 * k2_4) + (2.0 * k3_4 + k4_4))
        n5 = qy + h6 * ((k1_5 + 2.0 * k2_5) + (2.0 * k3_5 + k4_5))
        n6 = qz + h6 * ((k1_6 + 2.0 * k2_6) + (2.0 * k3_6 + k4_6))
        n7 = vx + h6 * ((k1_7 + 2.0 * k2_7) + (2.0 * k3_7 + k4_7))
        n8 = vy + h6 * ((k1_8 + 2.0 * k2_8) + (2.0 * k3_8 + k4_8))
        n9 = vz + h6 * ((k1_9 + 2.0 * k2_9) + (2.0 * k3_9 + k4_9))
        n10 = wx + h6 * ((k1_10 + 2.0 * k2_10) + (2.0 * k3_10 + k4_10))
        n11 = wy + h6 * ((k1_11 + 2.0 * k2_11) + (2.0 * k3_11 + k4_11))
        n12 = wz + h6 * ((k1_12 + 2.0 * k2_12) + (2.0 * k3_12 + k4_12))
        n13 = f1 + h6 * ((k1_13 + 2.0 * k2_13) + (2.0 * k3_13 + k4_13))
        n14 = f2 + h6 * ((k1_14 + 2.0 * k2_14) + (2.0 * k3_14 + k4_14))
        n15 = f3 + h6 * ((k1_15 + 2.0 * k2_15) + (2.0 * k3_15 + k4_15))
        n16 = f4 + h6 * ((k1_16 + 2.0 * k2_16) + (2.0 * k3_16 + k4_16))

    norm = np.sqrt((n3 * n3 + n4 * n4) + (n5 * n5 + n6 * n6))
    n3 = n3 / norm
    n4 = n4 / norm
    n5 = n5 / norm
    n6 = n6 / norm

    n13 = _clamp(n13, fmin, fmax)
    n14 = _clamp(n14, fmin, fmax)
    n15 = _clamp(n15, fmin, fmax)
    n16 = _clamp(n16, fmin, fmax)

    return (n0, n1, n2, n3, n4, n5, n6, n7, n8, n9, n10, n11, n12, n13, n14, n15, n16)


@njit
def _step_one(S, CMD, MODE, P, dt, method, S_out, IMU_out, i):
    px = S[i, 0]
    py = S[i, 1]
    pz = S[i, 2]
    qw = S[i, 3]
    qx = S[i, 4]
    qy = S[i, 5]
    qz = S[i, 6]
    vx = S[i, 7]
    vy = S[i, 8]
    vz = S[i, 9]
    wx = S[i, 10]
    wy = S[i, 11]
    wz = S[i, 12]
    f1 = S[i, 13]
    f2 = S[i, 14]
    f3 = S[i, 15]
    f4 = S[i, 16]

    mass = P[i, P_MASS]
    arm = P[i, P_ARM]
    jx = P[i, P_JX]
    jy = P[i, P_JY]
    jz = P[i, P_JZ]
    dx = P[i, P_DX]
    dy = P[i, P_DY]
    dz = P[i, P_DZ]
    kappa = P[i, P_KAPPA]
    tau = P[i, P_TAU]
    fmin = P[i, P_FMIN]
    fmax = P[i, P_FMAX]
    gz = P[i, P_GZ]

    if MODE[i] == 1:
        fd1, fd2, fd3, fd4 = _bodyrate_thrusts(
            CMD[i, 0], CMD[i, 1], CMD[i, 2], CMD[i, 3], wx, wy, wz,
            mass, arm, jx, jy, jz, kappa, fmin, fmax,
            P[i, P_KPX], P[i, P_KPY], P[i, P_KPZ])
    else:
        fd1 = CMD[i, 0]
        fd2 = CMD[i, 1]
        fd3 = CMD[i, 2]
        fd4 = CMD[i, 3]

    (n0, n1, n2, n3, n4, n5, n6, n7, n8, n9,
     n10, n11, n12, n13, n14, n15, n16) = _advance(
        px, py, pz, qw, qx, qy, qz, vx, vy, vz, wx, wy, wz, f1, f2, f3, f4,
        fd1, fd2, fd3, fd4, mass, arm, jx, jy, jz, dx, dy, dz, kappa, tau, gz,
        fmin, fmax, dt, method)

    S_out[i, 0] = n0
    S_out[i, 1] = n1
    S_out[i, 2] = n2
    S_out[i, 3] = n3
    S_out[i, 4] = n4
    S_out[i, 5] = n5
    S_out[i, 6] = n6
    S_out[i, 7] = n7
    S_out[i, 8] = n8
    S_out[i, 9] = n9
    S_out[i, 10] = n10
    S_out[i, 11] = n11
    S_out[i, 12] = n12
    S_out[i, 13] = n13
    S_out[i, 14] = n14
    S_out[i, 15] = n15
    S_out[i, 16] = n16

    # Noise-free IMU at the post-step state under the same applied command.
    (d0, d1, d2, d3, d4, d5, d6, dvx, dvy, dvz,
     d10, d11, d12, d13, d14, d15, d16) = _deriv(
        n0, n1, n2, n3, n4, n5, n6, n7, n8, n9, n10, n11, n12, n13, n14, n15, n16,
        fd1, fd2, fd3, fd4, mass, arm, jx, jy, jz, dx, dy, dz, kappa, tau, gz)
    r00 = 1.0 - 2.0 * (n5 * n5 + n6 * n6)
    r01 = 2.0 * (n4 * n5 - n3 * n6)
    r02 = 2.0 * (n4 * n6 + n3 * n5)
    r10 = 2.0 * (n4 * n5 + n3 * n6)
    r11 = 1.0 - 2.0 * (n4 * n4 + n6 * n6)
    r12 = 2.0 * (n5 * n6 - n3 * n4)
    r20 = 2.0 * (n4 * n6 - n3 * n5)
    r21 = 2.0 * (n5 * n6 + n3 * n4)
    r22 = 1.0 - 2.0 * (n4 * n4 + n5 * n5)
    sfx = dvx
    sfy = dvy
    sfz = dvz + gz
    IMU_out[i, 0] = (r00 * sfx + r10 * sfy) + r20 * sfz
    IMU_out[i, 1] = (r01 * sfx + r11 * sfy) + r21 * sfz
    IMU_out[i, 2] = (r02 * sfx + r12 * sfy) + r22 * sfz
    IMU_out[i, 3] = n10
    IMU_out[i, 4] = n11
    IMU_out[i, 5] = n12


@njit(parallel=True, cache=True)
def step_batch(S, CMD, MODE, P, dt, method, S_out, IMU_out):
    """Advance every environment by one dt. Writes S_out and IMU_out in place."""
    for i in prange(S.shape[0]):
        _step_one(S, CMD, MODE, P, dt, method, S_out, IMU_out, i)


@njit(cache=True)
def step_batch_serial(S, CMD, MODE, P, dt, method, S_out, IMU_out):
    """Single-threaded variant (identical arithmetic to step_batch)."""
    for i in range(S.shape[0]):
        _step_one(S, CMD, MODE, P, dt, method, S_out, IMU_out, i)


@njit(cache=True)
def step_env_imu(row, f_des, prow, imu_row):
    """Noise-free IMU of one packed state under desired thrusts; no stepping."""
    (d0, d1, d2, d3, d4, d5, d6, dvx, dvy, dvz,
     d10, d11, d12, d13, d14, d15, d16) = _deriv(
        row[0], row[1], row[2], row[3], row[4], row[5], row[6], row[7], row[8],
        row[9], row[10], row[11], row[12], row[13], row[14], row[15], row[16],
        f_des[0], f_des[1], f_des[2], f_des[3],
        prow[P_MASS], prow[P_ARM], prow[P_JX], prow[P_JY], prow[P_JZ],
        prow[P_DX], prow[P_DY], prow[P_DZ], prow[P_KAPPA], prow[P_TAU], prow[P_GZ])
    qw = row[3]
    qx = row[4]
    qy = row[5]
    qz = row[6]
    r00 = 1.0 - 2.0 * (qy * qy + qz * qz)
    r01 = 2.0 * (qx * qy - qw * qz)
    r02 = 2.0 * (qx * qz + qw * qy)
    r10 = 2.0 * (qx * qy + qw * qz)
    r11 = 1.0 - 2.0 * (qx * qx + qz * qz)
    r12 = 2.0 * (qy * qz - qw * qx)
    r20 = 2.0 * (qx * qz - qw * qy)
    r21 = 2.0 * (qy * qz + qw * qx)
    r22 = 1.0 - 2.0 * (qx * qx + qy * qy)
    gz = prow[P_GZ]
    sfx = dvx
    sfy = dvy
    sfz = dvz + gz
    imu_row[0] = (r00 * sfx + r10 * sfy) + r20 * sfz
    imu_row[1] = (r01 * sfx + r11 * sfy) + r21 * sfz
    imu_row[2] = (r02 * sfx + r12 * sfy) + r22 * sfz
    imu_row[3] = row[10]
    imu_row[4] = row[11]
    imu_row[5] = row[12]


@njit(cache=True)
def step_env_many(row, cmd, mode, prow, dt, method, n_steps):
    """Advance one env n_steps with a constant command; for reference trajectories."""
    S = row.reshape(1, STATE_DIM)
    CMD = cmd.reshape(1, 4)
    MODE = np.empty(1, dtype=np.uint8)
    MODE[0] = mode
    P = prow.reshape(1, PARAM_DIM)
    S_out = np.empty((1, STATE_DIM))
    IMU_out = np.empty((1, IMU_DIM))
    for _ in range(n_steps):
        _step_one(S, CMD, MODE, P, dt, method, S_out, IMU_out, 0)
        for k in range(STATE_DIM):
            S[0, k] = S_out[0, k]
    return S[0].copy()


def params_row(params, gains=None) -> np.ndarray:
    """Pack QuadParams (+ optional RateGains) into a kernel params row."""
    row = np.empty(PARAM_DIM)
    row[P_MASS] = params.mass
    row[P_ARM] = params.arm_length
    row[P_JX:P_JZ + 1] = params.inertia
    row[P_DX:P_DZ + 1] = params.drag
    row[P_KAPPA] = params.kappa
    row[P_TAU] = params.motor_tau
    row[P_FMIN] = params.thrust_min
    row[P_FMAX] = params.thrust_max
    row[P_GZ] = params.gravity
    if gains is not None:
        row[P_KPX:P_KPZ + 1] = gains.kp
    else:
        row[P_KPX:P_KPZ + 1] = 0.0
    return row


def warmup():
    """Force JIT compilation of the stepping kernels (cached on disk)."""
    S = np.zeros((2, STATE_DIM))
    S[:, 3] = 1.0
    CMD = np.zeros((2, 4))
    MODE = np.zeros(2, dtype=np.uint8)
    from .dynamics import QuadParams
    P = np.tile(params_row(QuadParams()), (2, 1))
    S_out = np.empty_like(S)
    IMU = np.empty((2, IMU_DIM))
    step_batch(S, CMD, MODE, P, 0.02, METHOD_RK4, S_out, IMU)
    step_batch(S, CMD, MODE, P, 0.02, METHOD_EULER, S_out, IMU)
    step_batch_serial(S, CMD, MODE, P, 0.02, METHOD_RK4, S_out, IMU)
    step_env_many(S[0], CMD[0], 0, P[0], 0.02, METHOD_RK4, 1)
    step_env_imu(S[0], CMD[0], P[0], IMU[0])
