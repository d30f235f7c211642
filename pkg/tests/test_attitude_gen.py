import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fullact.attitude_gen import (AttitudeSetpointGenerator, FixedAttitude, FixedTilt, FullTilt,
                                  MinimumTilt, ZeroTilt, attitude_fixed, attitude_fixed_tilt,
                                  attitude_full_tilt, attitude_minimum_tilt, attitude_zero_tilt,
                                  generate_attitude, minimum_tilt_angle)
from fullact.frames import (FrameId, FrameVector, euler_from_rotation, orthonormality_defect,
                            tilt_angle)

from oracles import quat_rotate, rot_z, zyx

I = FrameId.INERTIAL
angles = st.floats(-math.pi, math.pi, allow_nan=False)
comp = st.floats(-50, 50, allow_nan=False)


def F(*xyz):
    return FrameVector(xyz, I)


def k_s(sp):
    return sp.r_is.m[:, 2]


def assert_rotation(m):
    assert orthonormality_defect(m) < 1e-9
    assert abs(np.linalg.det(m) - 1) < 1e-9


def heading_of_x_axis(m):
    return math.atan2(m[1, 0], m[0, 0])


def angle_diff(a, b):
    return abs(math.remainder(a - b, 2 * math.pi))


class TestValidation:
    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            MinimumTilt(0.0)
        with pytest.raises(ValueError):
            FixedTilt(math.pi / 2, 0.0)
        with pytest.raises(ValueError):
            FixedTilt(-0.1, 0.0)
        with pytest.raises(ValueError):
            FixedAttitude(math.pi / 2, 0.0)

    def test_body_frame_force_rejected(self):
        with pytest.raises(ValueError):
            attitude_full_tilt(FrameVector([0, 0, -10], FrameId.BODY), 0.0)


class TestZeroTilt:
    def test_identity(self):
        np.testing.assert_array_equal(attitude_zero_tilt(0.0).r_is.m, np.eye(3))

    def test_yaw_30(self):
        expected = [[0.8660, -0.5, 0], [0.5, 0.8660, 0], [0, 0, 1]]
        np.testing.assert_allclose(attitude_zero_tilt(math.radians(30)).r_is.m, expected, atol=1e-4)

    def test_half_turn(self):
        np.testing.assert_allclose(attitude_zero_tilt(math.pi).r_is.m, np.diag([-1, -1, 1]),
                                   atol=1e-15)

    @given(angles)
    def test_never_tilts_and_keeps_yaw(self, psi):
        sp = attitude_zero_tilt(psi)
        assert tilt_angle(sp.r_is) == 0.0
        assert angle_diff(euler_from_rotation(sp.r_is).yaw, psi) < 1e-12


class TestFullTilt:
    def test_vertical_thrust_gives_identity(self):
        np.testing.assert_allclose(attitude_full_tilt(F(0, 0, -10), 0.0).r_is.m, np.eye(3),
                                   atol=1e-15)

    def test_tilted_thrust(self):
        sp = attitude_full_tilt(F(6, 0, -8), 0.0)
        np.testing.assert_allclose(k_s(sp), [-0.6, 0, 0.8], atol=1e-15)
        oracle = math.acos(np.dot(k_s(sp), [0, 0, 1]))
        assert abs(tilt_angle(sp.r_is) - oracle) < 1e-12
        assert abs(math.degrees(tilt_angle(sp.r_is)) - 36.8699) < 1e-4

    def test_vertical_thrust_with_yaw(self):
        sp = attitude_full_tilt(F(0, 0, -10), math.radians(30))
        np.testing.assert_allclose(sp.r_is.m, rot_z(math.radians(30)), atol=1e-15)

    @given(comp, comp, st.floats(-50, -0.5), angles)
    def test_antiparallel_and_heading(self, fx, fy, fz, psi):
        f = np.array([fx, fy, fz])
        sp = attitude_full_tilt(F(*f), psi)
        assert_rotation(sp.r_is.m)
        n = np.linalg.norm(f)
        assert abs(k_s(sp) @ f + n) < 1e-9 * max(n, 1.0)
        # x axis projected on the horizontal plane points along the yaw heading
        assert angle_diff(heading_of_x_axis(sp.r_is.m), psi) < 1e-9
        assert not sp.degraded

    def test_tiny_force_falls_back_to_zero_tilt(self):
        sp = attitude_full_tilt(F(0, 0, -1e-9), 0.4)
        assert sp.degraded
        np.testing.assert_allclose(sp.r_is.m, rot_z(0.4), atol=1e-15)

    def test_upward_axis_uses_previous_setpoint(self):
        prev = attitude_full_tilt(F(2, 0, -10), 0.0)
        sp = attitude_full_tilt(F(1, 0, 5), 0.0, previous=prev)
        assert sp.degraded
        np.testing.assert_array_equal(sp.r_is.m, prev.r_is.m)
        start = attitude_full_tilt(F(1, 0, 5), 0.2)
        assert start.degraded
        np.testing.assert_allclose(start.r_is.m, rot_z(0.2), atol=1e-15)

    def test_yaw_axis_parallel_fallback(self):
        # thrust tilted by almost 90 deg toward east with yaw 0: heading-normal axis ~ k_s
        prev = attitude_full_tilt(F(0, 5, -10), 0.0)
        sp = attitude_full_tilt(F(0, 1e8, -1e-3), 0.0, previous=prev)
        assert sp.degraded
        assert_rotation(sp.r_is.m)
        f = np.array([0, 1e8, -1e-3])
        np.testing.assert_allclose(k_s(sp), -f / np.linalg.norm(f), atol=1e-9)


class TestMinimumTilt:
    def test_case1_small_horizontal(self):
        sp = attitude_minimum_tilt(F(1, 0, -10), 0.0, 3.0)
        np.testing.assert_array_equal(sp.r_is.m, np.eye(3))

    def test_case1_large_limit(self):
        sp = attitude_minimum_tilt(F(6, 0, -8), 0.3, 10.0)
        np.testing.assert_allclose(sp.r_is.m, rot_z(0.3), atol=1e-15)

    def test_case2_example(self):
        f = np.array([6.0, 0.0, -8.0])
        lam = minimum_tilt_angle(f, 3.0)
        assert abs(lam - (math.asin(0.6) - math.asin(0.3))) < 1e-15
        assert abs(lam - 0.3388) < 1e-4
        sp = attitude_minimum_tilt(F(*f), 0.0, 3.0)
        # independent route: rotate k_I about -y by lambda with quaternions
        np.testing.assert_allclose(k_s(sp), quat_rotate([0, 0, 1], [0, -1, 0], lam), atol=1e-12)
        np.testing.assert_allclose(k_s(sp), [-0.3324, 0, 0.9431], atol=1e-4)
        lateral = sp.r_is.m.T @ f
        assert abs(math.hypot(lateral[0], lateral[1]) - 3.0) < 1e-9
        assert abs(math.degrees(tilt_angle(sp.r_is)) - 19.41) < 0.01

    @given(angles, st.floats(1.0 + 1e-6, 10.0), st.floats(-50, -1), st.floats(0.1, 20), angles)
    def test_case2_properties(self, az, ratio, fz, f_lmax, psi):
        h = ratio * f_lmax
        fx, fy = h * math.cos(az), h * math.sin(az)
        f = np.array([fx, fy, fz])
        sp = attitude_minimum_tilt(F(*f), psi, f_lmax)
        full = attitude_full_tilt(F(*f), psi)
        assert_rotation(sp.r_is.m)
        lam = minimum_tilt_angle(f, f_lmax)
        assert lam >= 0.0
        assert abs(tilt_angle(sp.r_is) - lam) < 1e-9
        assert tilt_angle(sp.r_is) <= tilt_angle(full.r_is) + 1e-12
        lateral = sp.r_is.m.T @ f
        assert abs(math.hypot(lateral[0], lateral[1]) - f_lmax) < 1e-9 * max(1.0, np.linalg.norm(f))
        if lam > 1e-9:
            assert k_s(sp)[:2] @ k_s(full)[:2] > 0.0
        assert angle_diff(heading_of_x_axis(sp.r_is.m), psi) < 1e-9

    @given(angles, st.floats(0.0, 1.0), st.floats(-50, -1), st.floats(0.1, 20), angles)
    def test_case1_matches_zero_tilt(self, az, ratio, fz, f_lmax, psi):
        fx, fy = ratio * f_lmax * math.cos(az), ratio * f_lmax * math.sin(az)
        assume(math.hypot(fx, fy) <= f_lmax)
        sp = attitude_minimum_tilt(F(fx, fy, fz), psi, f_lmax)
        np.testing.assert_array_equal(sp.r_is.m, attitude_zero_tilt(psi).r_is.m)


class TestFixedTilt:
    def test_zero_tilt_any_direction(self):
        for kappa in (0.0, 1.0, -2.5):
            np.testing.assert_allclose(attitude_fixed_tilt(0.0, 0.0, kappa).r_is.m, np.eye(3),
                                       atol=1e-15)

    def test_yaw_sweep_keeps_tilt_varies_roll_pitch(self):
        lam = math.radians(7.5)
        rolls, pitches = [], []
        for psi in np.radians(np.linspace(0, 90, 19)):
            sp = attitude_fixed_tilt(psi, lam, 0.0)
            assert abs(tilt_angle(sp.r_is) - lam) < 1e-9
            e = euler_from_rotation(sp.r_is)
            rolls.append(e.roll)
            pitches.append(e.pitch)
        assert np.ptp(rolls) > math.radians(5)
        assert np.ptp(pitches) > math.radians(5)

    def test_east_direction_tilt_plane(self):
        lam = math.radians(10)
        sp = attitude_fixed_tilt(0.0, lam, math.pi / 2)
        assert abs(tilt_angle(sp.r_is) - lam) < 1e-12
        k = k_s(sp)
        # tilt plane spanned by east and down: no north component
        assert abs(k[0]) < 1e-15
        assert abs(abs(k[1]) - math.sin(lam)) < 1e-15

    @given(angles, st.floats(0, 1.5), angles)
    def test_tilt_and_direction(self, psi, lam, kappa):
        sp = attitude_fixed_tilt(psi, lam, kappa)
        assert_rotation(sp.r_is.m)
        assert abs(tilt_angle(sp.r_is) - lam) < 1e-9
        # the horizontal part of the setpoint z axis points away from kappa
        expected = -math.sin(lam) * np.array([math.cos(kappa), math.sin(kappa)])
        np.testing.assert_allclose(k_s(sp)[:2], expected, atol=1e-12)
        assert angle_diff(heading_of_x_axis(sp.r_is.m), psi) < 1e-9


class TestFixedAttitude:
    def test_identity(self):
        np.testing.assert_array_equal(attitude_fixed(0, 0, 0).r_is.m, np.eye(3))

    def test_pure_yaw(self):
        np.testing.assert_allclose(attitude_fixed(math.radians(30), 0, 0).r_is.m,
                                   rot_z(math.radians(30)), atol=1e-15)

    def test_roll_pitch_example(self):
        sp = attitude_fixed(0.0, math.radians(5), math.radians(-10))
        np.testing.assert_allclose(sp.r_is.m, zyx(math.radians(5), math.radians(-10), 0.0),
                                   atol=1e-15)
        e = euler_from_rotation(sp.r_is)
        np.testing.assert_allclose(e, (math.radians(5), math.radians(-10), 0.0), atol=1e-12)

    @given(angles, st.floats(-1.4, 1.4), st.floats(-1.4, 1.4), st.floats(-1.0, 1.0))
    def test_roll_pitch_held_and_direction_turns_with_yaw(self, psi, phi, theta, dpsi):
        a = attitude_fixed(psi, phi, theta)
        b = attitude_fixed(psi + dpsi, phi, theta)
        for sp, yaw in ((a, psi), (b, psi + dpsi)):
            e = euler_from_rotation(sp.r_is)
            assert abs(e.roll - phi) < 1e-9 and abs(e.pitch - theta) < 1e-9
        # horizontal projection of k_S rotated by exactly dpsi
        np.testing.assert_allclose(k_s(b)[:2], rot_z(dpsi)[:2, :2] @ k_s(a)[:2], atol=1e-12)


class TestDispatch:
    def test_zero_tilt_ignores_force(self):
        sp = generate_attitude(ZeroTilt(), F(30, -20, 5), 0.0)
        np.testing.assert_array_equal(sp.r_is.m, np.eye(3))

    def test_min_vs_full_example(self):
        f = F(6, 0, -8)
        mt = generate_attitude(MinimumTilt(3.0), f, 0.0)
        ft = generate_attitude(FullTilt(), f, 0.0)
        assert abs(math.degrees(tilt_angle(mt.r_is)) - 19.41) < 0.01
        assert abs(math.degrees(tilt_angle(ft.r_is)) - 36.87) < 0.01
        assert k_s(mt)[:2] @ k_s(ft)[:2] > 0

    def test_fixed_variants(self):
        sp = generate_attitude(FixedTilt(0.2, 0.5), F(0, 0, -1), 0.3)
        np.testing.assert_array_equal(sp.r_is.m, attitude_fixed_tilt(0.3, 0.2, 0.5).r_is.m)
        sp = generate_attitude(FixedAttitude(0.1, -0.1), F(0, 0, -1), 0.3)
        np.testing.assert_array_equal(sp.r_is.m, attitude_fixed(0.3, 0.1, -0.1).r_is.m)

    def test_zero_tilt_equals_fixed_attitude_zero(self):
        for psi in np.linspace(-3, 3, 13):
            np.testing.assert_array_equal(generate_attitude(ZeroTilt(), F(1, 2, -9), psi).r_is.m,
                                          generate_attitude(FixedAttitude(0, 0), F(1, 2, -9),
                                                            psi).r_is.m)

    def test_unknown_strategy(self):
        with pytest.raises(TypeError):
            generate_attitude("zero", F(0, 0, -1), 0.0)

    @given(st.sampled_from([ZeroTilt(), FullTilt(), MinimumTilt(4.0), FixedTilt(0.3, 1.0),
                            FixedAttitude(0.2, -0.3)]), comp, comp, comp, angles)
    def test_always_a_rotation_and_deterministic(self, strategy, fx, fy, fz, psi):
        a = generate_attitude(strategy, F(fx, fy, fz), psi)
        b = generate_attitude(strategy, F(fx, fy, fz), psi)
        assert_rotation(a.r_is.m)
        assert np.array_equal(a.r_is.m, b.r_is.m)

    def test_generator_remembers_last_setpoint(self):
        gen = AttitudeSetpointGenerator(FullTilt())
        first = gen(F(2, 0, -10), 0.0)
        second = gen(F(0, 0, 4), 0.0)
        assert second.degraded
        np.testing.assert_array_equal(second.r_is.m, first.r_is.m)
        override = gen(F(2, 0, -10), 0.0, FixedTilt(0.1, 0.0))
        assert isinstance(override.strategy_used, FixedTilt)
        gen.reset()
        assert gen.last is None
