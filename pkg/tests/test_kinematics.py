"""Tests for chain kinematics, the analytic Jacobian, and the camera."""

import numpy as np
import pytest

from jidm.kinematics import (
    BodyPoint,
    CameraModel,
    ChainConfig,
    ChainState,
    analytic_jacobian,
    clamp_action,
    clamp_state,
    default_chain,
    fit_camera,
    forward_kinematics,
    jacobian_at_world_points,
    joint_world_positions,
    project,
    unproject,
)


def two_link_unit() -> ChainConfig:
    return ChainConfig(
        link_lengths=[1.0, 1.0],
        link_radii=[0.1, 0.1],
        joint_limits=[(-3.0, 3.0), (-3.0, 3.0)],
    )


class TestForwardKinematics:
    def test_straight_chain_tip(self):
        cfg = two_link_unit()
        tip = forward_kinematics(cfg, ChainState([0.0, 0.0]), BodyPoint(1, 1.0, 0.0))
        np.testing.assert_allclose(tip, [2.0, 0.0], atol=1e-15)

    def test_rigid_rotation(self):
        cfg = two_link_unit()
        tip = forward_kinematics(cfg, ChainState([np.pi / 2, 0.0]), BodyPoint(1, 1.0, 0.0))
        np.testing.assert_allclose(tip, [0.0, 2.0], atol=1e-15)

    def test_three_link_trig_oracle(self):
        # Frozen from an independent step-by-step trig script:
        # phi = cumsum(q); walk links (1, 0.8, 0.6) from the origin.
        cfg = ChainConfig(
            link_lengths=[1.0, 0.8, 0.6],
            link_radii=[0.05, 0.05, 0.05],
            joint_limits=[(-3.0, 3.0)] * 3,
        )
        tip = forward_kinematics(cfg, ChainState([0.3, -0.5, 1.1]), BodyPoint(2, 1.0, 0.0))
        np.testing.assert_allclose(tip, [2.112355732360998, 0.6065808878017807], rtol=0, atol=1e-12)

    def test_lateral_offset(self):
        cfg = two_link_unit()
        p = forward_kinematics(cfg, ChainState([0.0, 0.0]), BodyPoint(0, 0.5, 1.0))
        np.testing.assert_allclose(p, [0.5, 0.1], atol=1e-15)

    def test_bad_link_index(self):
        cfg = two_link_unit()
        with pytest.raises(ValueError):
            forward_kinematics(cfg, ChainState([0.0, 0.0]), BodyPoint(2, 0.5, 0.0))

    def test_continuity_in_q(self):
        cfg = default_chain(4)
        q = np.array([0.4, -0.2, 0.9, -1.1])
        p0 = forward_kinematics(cfg, ChainState(q), BodyPoint(3, 0.7, -0.4))
        p1 = forward_kinematics(cfg, ChainState(q + 1e-9), BodyPoint(3, 0.7, -0.4))
        assert np.linalg.norm(p1 - p0) < 1e-7


class TestAnalyticJacobian:
    def test_single_link_tangent(self):
        cfg = ChainConfig(link_lengths=[1.0], link_radii=[0.1], joint_limits=[(-3, 3)])
        jac = analytic_jacobian(cfg, ChainState([0.0]), BodyPoint(0, 1.0, 0.0))
        np.testing.assert_allclose(jac, [[0.0], [1.0]], atol=1e-15)

    def test_proximal_columns_zero(self):
        cfg = default_chain(5)
        state = ChainState([0.3, -0.4, 0.8, 0.2, -1.0])
        for ell in range(4):
            jac = analytic_jacobian(cfg, state, BodyPoint(ell, 0.6, 0.3))
            np.testing.assert_array_equal(jac[:, ell + 1 :], 0.0)

    def test_matches_central_differences(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            cfg = default_chain(n)
            q = rng.uniform(-2.0, 2.0, n)
            point = BodyPoint(int(rng.integers(0, n)), float(rng.random()), float(rng.uniform(-1, 1)))
            jac = analytic_jacobian(cfg, ChainState(q), point)
            fd = np.empty_like(jac)
            h = 1e-6
            for j in range(n):
                e = np.zeros(n)
                e[j] = h
                fp = forward_kinematics(cfg, ChainState(q + e), point)
                fm = forward_kinematics(cfg, ChainState(q - e), point)
                fd[:, j] = (fp - fm) / (2 * h)
            err = np.max(np.abs(jac - fd)) / (1.0 + np.max(np.abs(jac)))
            assert err < 1e-6

    def test_chain_rule_locality(self):
        cfg = default_chain(4)
        q = np.array([0.5, -0.3, 0.7, 0.1])
        for j in range(1, 4):
            q2 = q.copy()
            q2[j] += 0.37
            for ell in range(j):
                p_before = forward_kinematics(cfg, ChainState(q), BodyPoint(ell, 0.8, 0.5))
                p_after = forward_kinematics(cfg, ChainState(q2), BodyPoint(ell, 0.8, 0.5))
                np.testing.assert_array_equal(p_before, p_after)

    def test_batched_world_point_form(self):
        cfg = default_chain(3)
        state = ChainState([0.2, 0.4, -0.6])
        pts = np.array([forward_kinematics(cfg, state, BodyPoint(i, 0.5, 0.0)) for i in range(3)])
        jac = jacobian_at_world_points(cfg, state, pts, np.arange(3))
        for i in range(3):
            single = analytic_jacobian(cfg, state, BodyPoint(i, 0.5, 0.0))
            np.testing.assert_allclose(jac[i], single, atol=1e-14)


class TestClamping:
    def test_idempotent(self):
        cfg = default_chain(3)
        q = np.array([5.0, -5.0, 0.3])
        once = clamp_state(cfg, q).q
        twice = clamp_state(cfg, once).q
        np.testing.assert_array_equal(once, twice)
        np.testing.assert_allclose(once, [2.4, -2.4, 0.3])

    def test_order_independent_per_coordinate(self):
        cfg = default_chain(3)
        q = np.array([3.1, -9.0, 1.0])
        full = clamp_state(cfg, q).q
        for perm in ([0, 1, 2], [2, 1, 0], [1, 0, 2]):
            out = q.copy()
            for j in perm:
                out[j] = np.clip(out[j], cfg.joint_limits[j, 0], cfg.joint_limits[j, 1])
            np.testing.assert_array_equal(out, full)

    def test_action_cap(self):
        a = clamp_action([0.5, -0.01, -3.0], 0.12)
        np.testing.assert_allclose(a, [0.12, -0.01, -0.12])


class TestCamera:
    def test_identity(self):
        cam = CameraModel(scale=1.0, offset=[0.0, 0.0], image_size=(32, 32))
        np.testing.assert_array_equal(project(cam, [3.25, -1.5]), [3.25, -1.5])

    def test_affine_arithmetic(self):
        cam = CameraModel(scale=32.0, offset=[64.0, 64.0], image_size=(128, 128))
        np.testing.assert_array_equal(project(cam, [1.0, 0.0]), [96.0, 64.0])

    def test_round_trip(self):
        cam = CameraModel(scale=17.3, offset=[40.2, 61.7], image_size=(128, 128))
        rng = np.random.default_rng(0)
        pts = rng.uniform(-3, 3, size=(50, 2))
        back = unproject(cam, project(cam, pts))
        assert np.max(np.abs(back - pts)) < 1e-12

    def test_pixel_jacobian_is_scaled_world_jacobian(self):
        cfg = default_chain(2)
        cam = fit_camera(cfg)
        state = ChainState([0.7, -0.3])
        jac_w = analytic_jacobian(cfg, state, BodyPoint(1, 1.0, 0.0))
        h = 1e-7
        point = BodyPoint(1, 1.0, 0.0)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            dpix = (
                project(cam, forward_kinematics(cfg, ChainState(state.q + e), point))
                - project(cam, forward_kinematics(cfg, ChainState(state.q - e), point))
            ) / (2 * h)
            np.testing.assert_allclose(dpix, cam.scale * jac_w[:, j], rtol=1e-6, atol=1e-6)

    def test_fit_camera_contains_reach_disc(self):
        for n in (2, 5, 16):
            cfg = default_chain(n)
            cam = fit_camera(cfg)
            h, w = cam.image_size
            base_px = project(cam, cfg.base_position)
            assert cam.scale * cfg.reach <= 0.5 * min(h, w)
            np.testing.assert_allclose(base_px, [(w - 1) / 2, (h - 1) / 2])

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            CameraModel(scale=0.0, offset=[0, 0], image_size=(128, 128))
        with pytest.raises(ValueError):
            CameraModel(scale=1.0, offset=[0, 0], image_size=(8, 128))
        with pytest.raises(ValueError):
            ChainConfig(link_lengths=[1.0, -1.0], link_radii=[0.1, 0.1], joint_limits=[(-1, 1)] * 2)
        with pytest.raises(ValueError):
            ChainConfig(link_lengths=[1.0], link_radii=[0.1], joint_limits=[(1.0, -1.0)])
        with pytest.raises(ValueError):
            BodyPoint(0, 1.5, 0.0)
