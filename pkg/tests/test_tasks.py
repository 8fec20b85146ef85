import math

import numpy as np
import pytest

from flightcore import (QuadParams, QuadState, TaskKind, TaskSpec, TerminationReason,
                        check_termination, classify_gate_crossing, euler_zyx_from_quat,
                        observe, quat_from_euler_zyx, reward, reward_gate,
                        reward_motor_failure, reward_stabilize)
from flightcore.tasks import (InitialStateSampler, actions_to_commands,
                              check_termination_batch, observe_batch,
                              reason_from_code, reward_batch)


def spec_for(kind, **kw):
    return TaskSpec.for_task(kind, **kw)


class TestEuler:
    def test_identity_is_zero(self):
        np.testing.assert_array_equal(
            euler_zyx_from_quat(np.array([1.0, 0, 0, 0])), np.zeros(3))

    def test_round_trip(self, rng):
        for _ in range(50):
            e = rng.uniform([-np.pi + 0.1, -np.pi / 2 + 0.1, -np.pi + 0.1],
                            [np.pi - 0.1, np.pi / 2 - 0.1, np.pi - 0.1])
            back = euler_zyx_from_quat(quat_from_euler_zyx(e))
            np.testing.assert_allclose(back, e, atol=1e-12)


class TestObserve:
    def test_stabilize_dim10_with_pad(self):
        spec = spec_for("stabilize")
        obs = observe(QuadState.hover(QuadParams()), spec)
        assert obs.shape == (10,)
        np.testing.assert_array_equal(obs[3:6], np.zeros(3))  # zero Euler attitude
        assert obs[9] == 1.0

    def test_stabilize_quat_layout(self):
        spec = spec_for("stabilize", stabilize_obs_layout="quat")
        obs = observe(QuadState.hover(QuadParams()), spec)
        assert obs.shape == (10,)
        np.testing.assert_array_equal(obs[3:7], [1.0, 0, 0, 0])

    def test_motor_failure_dim12(self):
        obs = observe(QuadState.hover(QuadParams()), spec_for("motor_failure"))
        assert obs.shape == (12,)

    def test_gate_dim18_with_gate_pose_tail(self):
        spec = spec_for("gate", gate_position=[4.0, 1.0, 2.0], gate_euler=[0, 0, 0.3])
        obs = observe(QuadState.hover(QuadParams()), spec)
        assert obs.shape == (18,)
        np.testing.assert_array_equal(obs[12:15], [4.0, 1.0, 2.0])
        np.testing.assert_array_equal(obs[15:18], [0.0, 0.0, 0.3])

    def test_batch_matches_single(self, rng):
        # batch attitude extraction uses numpy's vectorized arctan2/arcsin,
        # which may differ from libm in the last bit: compare at 1e-14
        for kind in TaskKind:
            spec = spec_for(kind)
            states = []
            for _ in range(8):
                q = rng.normal(size=4)
                q /= np.linalg.norm(q)
                states.append(QuadState(p=rng.normal(size=3), q=q,
                                        v=rng.normal(size=3), omega=rng.normal(size=3)))
            P = np.stack([s.p for s in states])
            Q = np.stack([s.q for s in states])
            V = np.stack([s.v for s in states])
            W = np.stack([s.omega for s in states])
            batch = observe_batch(P, Q, V, W, spec)
            for i, s in enumerate(states):
                np.testing.assert_allclose(batch[i], observe(s, spec),
                                           rtol=0, atol=1e-14)


class TestRewardStabilize:
    def test_zero_at_target(self):
        spec = spec_for("stabilize")
        assert reward_stabilize(QuadState.hover(QuadParams()), spec) == 0.0

    def test_unit_position_offset(self):
        spec = spec_for("stabilize")
        s = QuadState(p=[1.0, 0.0, 0.0])
        assert reward_stabilize(s, spec) == pytest.approx(-2e-3, abs=1e-15)

    def test_velocity_ten(self):
        spec = spec_for("stabilize")
        s = QuadState(v=[0.0, 0.0, 10.0])
        assert reward_stabilize(s, spec) == pytest.approx(-2e-3, abs=1e-15)

    def test_never_positive(self, rng):
        spec = spec_for("stabilize")
        for _ in range(50):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            s = QuadState(p=rng.normal(size=3) * 5, q=q, v=rng.normal(size=3) * 5)
            assert reward_stabilize(s, spec) <= 0.0


class TestRewardMotorFailure:
    def test_yaw_and_yaw_rate_invariance_exact(self, rng):
        # level attitude spun to a random yaw: roll/pitch extraction is exactly
        # zero, so randomized yaw angle and yaw rate leave the reward bit-equal
        spec = spec_for("motor_failure")
        for _ in range(1000):
            p = rng.normal(size=3)
            v = rng.normal(size=3)
            wxy = rng.normal(size=2)
            base = reward_motor_failure(
                QuadState(p=p, v=v, omega=[wxy[0], wxy[1], 0.0]), spec)
            yaw = rng.uniform(-np.pi, np.pi)
            wz = rng.normal() * 10
            s = QuadState(p=p, q=quat_from_euler_zyx([0.0, 0.0, yaw]), v=v,
                          omega=[wxy[0], wxy[1], wz])
            assert reward_motor_failure(s, spec) == base

    def test_yaw_invariance_general_attitude(self, rng):
        # with nonzero roll/pitch the euler extraction re-rounds per yaw, so
        # invariance holds to floating-point extraction noise
        spec = spec_for("motor_failure")
        for _ in range(200):
            p = rng.normal(size=3)
            v = rng.normal(size=3)
            wxy = rng.normal(size=2)
            roll, pitch = rng.uniform(-0.4, 0.4, 2)
            vals = []
            for yaw in rng.uniform(-np.pi, np.pi, 3):
                for wz in (0.0, rng.normal() * 10):
                    s = QuadState(p=p, q=quat_from_euler_zyx([roll, pitch, yaw]),
                                  v=v, omega=[wxy[0], wxy[1], wz])
                    vals.append(reward_motor_failure(s, spec))
            assert max(vals) - min(vals) <= 1e-12

    def test_omega_xy_hand_evaluated(self):
        spec = spec_for("motor_failure")
        s = QuadState(omega=[1.0, 1.0, 0.0])
        assert reward_motor_failure(s, spec) == pytest.approx(-2e-4 * math.sqrt(2.0),
                                                              abs=1e-15)

    def test_roll_only_hand_evaluated(self):
        spec = spec_for("motor_failure")
        for yaw in (0.0, 1.0, -2.5):
            s = QuadState(q=quat_from_euler_zyx([0.1, 0.0, yaw]))
            assert reward_motor_failure(s, spec) == pytest.approx(-2e-3 * 0.1, abs=1e-12)

    def test_hover_spin_equals_static(self):
        spec = spec_for("motor_failure")
        static = reward_motor_failure(QuadState(), spec)
        for wz in (0.5, -3.0, 20.0):
            spinning = QuadState(omega=[0.0, 0.0, wz])
            assert reward_motor_failure(spinning, spec) == static


class TestRewardGate:
    def test_collision_is_minus_point_one(self):
        spec = spec_for("gate")
        assert reward_gate(QuadState(), spec, hit=True) == -0.1

    def test_at_target_no_collision(self):
        spec = spec_for("gate")
        s = QuadState(p=spec.p_target)
        assert reward_gate(s, spec, hit=False) == pytest.approx(0.1, abs=1e-15)

    def test_offset_hand_evaluated(self):
        spec = spec_for("gate")
        s = QuadState(p=spec.p_target + [1.0, 0.0, 0.0])
        assert reward_gate(s, spec, hit=False) == pytest.approx(0.1 - 2e-3, abs=1e-15)

    def test_reward_dispatch_uses_termination(self):
        spec = spec_for("gate")
        s = QuadState(p=spec.p_target)
        assert reward(s, spec, TerminationReason.GATE_HIT) == -0.1
        assert reward(s, spec, TerminationReason.GROUND_HIT) == -0.1
        assert reward(s, spec, None) == pytest.approx(0.1, abs=1e-15)
        # bounds crossing is not "hitting the gate or the ground"
        assert reward(s, spec, TerminationReason.BOUNDS) == pytest.approx(0.1, abs=1e-15)


def crossing_oracle(p0, p1, spec):
    """Independent plane-segment intersection + radius test (projection form)."""
    rot = spec.gate_rotation
    n = rot[:, 0]
    s0 = float(np.dot(n, p0 - spec.gate_position))
    s1 = float(np.dot(n, p1 - spec.gate_position))
    if not (s0 * s1 < 0.0):
        return None
    t = s0 / (s0 - s1)
    q = p0 + t * (p1 - p0)
    rel = q - spec.gate_position
    in_plane = rel - np.dot(rel, n) * n
    rho = float(np.linalg.norm(in_plane))
    if rho <= spec.gate_radius:
        return TerminationReason.GATE_PASS
    if rho <= spec.gate_margin:
        return TerminationReason.GATE_HIT
    return TerminationReason.BOUNDS


class TestGateCrossing:
    def test_through_center_passes(self):
        spec = spec_for("gate", gate_position=[5.0, 0.0, 2.0])
        r = classify_gate_crossing(np.array([4.0, 0.0, 2.0]), np.array([6.0, 0.0, 2.0]),
                                   spec)
        assert r is TerminationReason.GATE_PASS

    def test_off_axis_hits(self):
        spec = spec_for("gate", gate_position=[5.0, 0.0, 2.0])
        r = classify_gate_crossing(np.array([4.0, 1.5, 2.0]), np.array([6.0, 1.5, 2.0]),
                                   spec)
        assert r is TerminationReason.GATE_HIT

    def test_far_off_axis_is_bounds(self):
        spec = spec_for("gate", gate_position=[5.0, 0.0, 2.0])
        r = classify_gate_crossing(np.array([4.0, 8.0, 2.0]), np.array([6.0, 8.0, 2.0]),
                                   spec)
        assert r is TerminationReason.BOUNDS

    def test_no_crossing_none(self):
        spec = spec_for("gate", gate_position=[5.0, 0.0, 2.0])
        assert classify_gate_crossing(np.array([1.0, 0, 2]), np.array([2.0, 0, 2]),
                                      spec) is None

    def test_matches_oracle_on_random_segments(self, rng):
        spec = spec_for("gate", gate_position=[2.0, -1.0, 3.0],
                        gate_euler=[0.2, -0.3, 0.9])
        agree = 0
        for _ in range(1000):
            p0 = rng.uniform(-6, 6, 3) + spec.gate_position
            p1 = rng.uniform(-6, 6, 3) + spec.gate_position
            got = classify_gate_crossing(p0, p1, spec)
            want = crossing_oracle(p0, p1, spec)
            assert got is want
            agree += got is not None
        assert agree > 100  # sanity: plenty of actual crossings exercised


class TestTermination:
    def test_timeout_at_250_steps(self):
        spec = spec_for("stabilize")
        assert spec.max_steps == 250
        s = QuadState.hover(QuadParams())
        assert check_termination(s, None, spec, t=249 * 0.02) is None
        assert check_termination(s, None, spec, t=250 * 0.02) is TerminationReason.TIMEOUT

    def test_stabilize_never_terminates_on_ground(self):
        spec = spec_for("stabilize")
        s = QuadState(p=[0.0, 0.0, -5.0])
        assert check_termination(s, None, spec, t=0.02) is None

    def test_gate_ground_hit(self):
        spec = spec_for("gate")
        prev = QuadState(p=[-4.0, 0.0, 0.5])
        s = QuadState(p=[-4.0, 0.0, -0.1])
        assert check_termination(s, prev, spec, t=0.02) is TerminationReason.GROUND_HIT

    def test_gate_crossing_preempts_timeout(self):
        spec = spec_for("gate", gate_position=[0.0, 0.0, 2.0])
        prev = QuadState(p=[-0.5, 0.0, 2.0])
        s = QuadState(p=[0.5, 0.0, 2.0])
        r = check_termination(s, prev, spec, t=spec.episode_length)
        assert r is TerminationReason.GATE_PASS

    def test_batch_matches_single(self, rng):
        spec = spec_for("gate", gate_position=[1.0, 0.5, 2.0], gate_euler=[0, 0, 0.4])
        n = 200
        P_prev = rng.uniform(-5, 5, (n, 3)) + spec.gate_position
        P = rng.uniform(-5, 5, (n, 3)) + spec.gate_position
        counts = rng.integers(1, 260, n)
        codes = check_termination_batch(P, P_prev, counts, spec)
        for i in range(n):
            got = reason_from_code(codes[i])
            want = check_termination(QuadState(p=P[i]), QuadState(p=P_prev[i]), spec,
                                     t=counts[i] * spec.dt)
            assert got is want


class TestRewardBatch:
    def test_matches_single_path(self, rng):
        for kind in TaskKind:
            spec = spec_for(kind)
            n = 32
            Q = rng.normal(size=(n, 4))
            Q /= np.linalg.norm(Q, axis=1, keepdims=True)
            P = rng.normal(size=(n, 3)) * 3
            V = rng.normal(size=(n, 3))
            W = rng.normal(size=(n, 3))
            codes = np.zeros(n, dtype=np.int8)
            batch = reward_batch(P, Q, V, W, codes, spec)
            for i in range(n):
                s = QuadState(p=P[i], q=Q[i], v=V[i], omega=W[i])
                want = reward(s, spec, None)
                assert batch[i] == pytest.approx(want, rel=1e-12, abs=1e-15)


class TestActions:
    def test_motor_failure_forces_failed_rotor_zero(self):
        spec = spec_for("motor_failure", failed_rotor=3)
        cmd, mode = actions_to_commands(np.array([[1.0, 2.0, 3.0]]), spec, QuadParams())
        np.testing.assert_array_equal(cmd, [[1.0, 2.0, 3.0, 0.0]])
        assert mode[0] == 0

    def test_motor_failure_other_index(self):
        spec = spec_for("motor_failure", failed_rotor=0)
        cmd, _ = actions_to_commands(np.array([[1.0, 2.0, 3.0]]), spec, QuadParams())
        np.testing.assert_array_equal(cmd, [[0.0, 1.0, 2.0, 3.0]])

    def test_thrust_actions_clamped(self):
        spec = spec_for("gate")
        cmd, _ = actions_to_commands(np.array([[99.0, -5.0, 4.0, 8.0]]), spec,
                                     QuadParams())
        np.testing.assert_array_equal(cmd, [[8.0, 0.0, 4.0, 8.0]])

    def test_bodyrate_collective_nonnegative(self):
        spec = spec_for("stabilize")
        cmd, mode = actions_to_commands(np.array([[-3.0, 1.0, 2.0, 3.0]]), spec,
                                        QuadParams())
        assert cmd[0, 0] == 0.0 and mode[0] == 1

    def test_shape_mismatch_rejected(self):
        spec = spec_for("stabilize")
        with pytest.raises(ValueError):
            actions_to_commands(np.zeros((2, 3)), spec, QuadParams())

    def test_non_finite_rejected(self):
        spec = spec_for("gate")
        with pytest.raises(ValueError):
            actions_to_commands(np.array([[np.nan, 1, 1, 1]]), spec, QuadParams())


class TestSampler:
    def test_zero_width_gives_exact_values(self):
        sampler = InitialStateSampler.fixed([1.0, 2.0, 3.0])
        rng = np.random.default_rng(0)
        s = sampler.sample(rng, QuadParams())
        np.testing.assert_array_equal(s.p, [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(s.q, [1.0, 0, 0, 0])
        np.testing.assert_array_equal(s.f, np.full(4, 2.4525))

    def test_invalid_range_rejected(self):
        with pytest.raises(ValueError):
            InitialStateSampler(p_low=[1, 0, 0], p_high=[0, 0, 0])

    def test_gate_sampler_in_front_of_gate(self):
        spec = spec_for("gate", gate_position=[10.0, 0.0, 2.0])
        sampler = InitialStateSampler.for_task(spec)
        rng = np.random.default_rng(1)
        for _ in range(20):
            s = sampler.sample(rng, QuadParams())
            assert s.p[0] < spec.gate_position[0]  # front side along +x approach
            np.testing.assert_array_equal(s.q, [1.0, 0, 0, 0])

    def test_episode_step_count_invariant(self):
        for kind in TaskKind:
            spec = spec_for(kind)
            assert spec.max_steps == round(spec.episode_length / spec.dt) == 250


class TestSpecValidation:
    def test_unknown_task_rejected(self):
        with pytest.raises(ValueError):
            TaskSpec.for_task("nosuchtask")

    def test_dims_table(self):
        dims = {(spec_for(k).obs_dim, spec_for(k).act_dim) for k in TaskKind}
        assert dims == {(10, 4), (12, 3), (18, 4)}

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            spec_for("stabilize", c1=-1e-3)
