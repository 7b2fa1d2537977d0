"""Tests for the flow oracle, first-order flow, and the noise model."""

from dataclasses import replace

import numpy as np
import pytest

from jidm.flow import FlowNoiseModel, add_noise, first_order_flow, flow_between_states, oracle_flow
from jidm.kinematics import ChainConfig, ChainState, default_chain, fit_camera
from jidm.render import RenderStyle, covering_link_map, default_style, foreground_mask


@pytest.fixture
def scene():
    cfg = default_chain(3)
    cam = fit_camera(cfg)
    style = default_style(3)
    state = ChainState([0.5, -0.8, 0.9])
    return cfg, cam, style, state


class TestOracleFlow:
    def test_zero_action_zero_flow(self, scene):
        cfg, cam, style, state = scene
        f = oracle_flow(cfg, cam, style, state, np.zeros(3))
        np.testing.assert_array_equal(f.vectors, 0.0)
        np.testing.assert_array_equal(f.valid, foreground_mask(cfg, cam, style, state))

    def test_validity_equals_foreground(self, scene):
        cfg, cam, style, state = scene
        f = oracle_flow(cfg, cam, style, state, np.array([0.05, -0.1, 0.02]))
        np.testing.assert_array_equal(f.valid, foreground_mask(cfg, cam, style, state))
        np.testing.assert_array_equal(f.vectors[~f.valid], 0.0)

    def test_single_link_arc_magnitude(self):
        cfg = ChainConfig(link_lengths=[1.0], link_radii=[0.08], joint_limits=[(-3, 3)])
        cam = fit_camera(cfg)
        style = default_style(1)
        delta = 0.08
        f = oracle_flow(cfg, cam, style, ChainState([0.0]), np.array([delta]))
        # tip pixel: distance L from the base; chord length = 2 L sin(delta/2)
        tip_col = int(round(cam.offset[0] + cam.scale * 1.0))
        tip_row = int(round(cam.offset[1]))
        mag = np.linalg.norm(f.vectors[tip_row, tip_col])
        expected = cam.scale * 2.0 * np.sin(delta / 2)  # ~ scale * L * delta
        assert abs(mag - expected) / expected < 0.02

    def test_round_trip_composition_cancels(self, scene):
        # Flow of (q, da) composed with flow of (q+da, -da) vanishes at
        # persistent pixels. Within one link the reverse flow field is
        # affine in pixel position, so bilinear sampling is exact and the
        # residual collapses to rounding noise (well inside O(|da|^2)).
        cfg, cam, style, state = scene
        rng = np.random.default_rng(11)
        for delta_scale in (0.1, 0.05):
            delta = rng.uniform(-1, 1, 3) * delta_scale
            f_fwd = oracle_flow(cfg, cam, style, state, delta)
            state2 = ChainState(state.q + delta)
            f_back = flow_between_states(cfg, cam, state2, state)
            links_src = covering_link_map(cfg, cam, state)
            links_dst = covering_link_map(cfg, cam, state2)

            h, w = cam.image_size
            ys, xs = np.nonzero(f_fwd.valid & ~f_fwd.occluded)
            own = links_src[ys, xs]
            tx = xs + f_fwd.vectors[ys, xs, 0]
            ty = ys + f_fwd.vectors[ys, xs, 1]
            keep = (tx >= 0) & (tx <= w - 1) & (ty >= 0) & (ty <= h - 1)
            xs, ys, tx, ty, own = xs[keep], ys[keep], tx[keep], ty[keep], own[keep]
            x0, y0 = np.floor(tx).astype(int), np.floor(ty).astype(int)
            x1, y1 = np.minimum(x0 + 1, w - 1), np.minimum(y0 + 1, h - 1)
            ax, ay = (tx - x0)[:, None], (ty - y0)[:, None]
            back = (
                f_back.vectors[y0, x0] * (1 - ax) * (1 - ay)
                + f_back.vectors[y0, x1] * ax * (1 - ay)
                + f_back.vectors[y1, x0] * (1 - ax) * ay
                + f_back.vectors[y1, x1] * ax * ay
            )
            persistent = (
                (links_dst[y0, x0] == own)
                & (links_dst[y0, x1] == own)
                & (links_dst[y1, x0] == own)
                & (links_dst[y1, x1] == own)
            )
            assert persistent.sum() > 50
            comp = f_fwd.vectors[ys, xs] + back
            assert np.max(np.linalg.norm(comp[persistent], axis=1)) < 1e-9

    def test_cap_enforced(self, scene):
        cfg, cam, style, state = scene
        with pytest.raises(ValueError):
            oracle_flow(cfg, cam, style, state, np.array([0.3, 0.0, 0.0]))

    def test_equivariant_to_whole_pixel_shift(self, scene):
        cfg, cam, style, state = scene
        delta = np.array([0.06, -0.04, 0.09])
        f = oracle_flow(cfg, cam, style, state, delta)
        cam2 = replace(cam, offset=cam.offset + np.array([5.0, 2.0]))
        g = oracle_flow(cfg, cam2, style, state, delta)
        h, w = cam.image_size
        np.testing.assert_array_equal(g.vectors[2:, 5:], f.vectors[: h - 2, : w - 5])
        np.testing.assert_array_equal(g.valid[2:, 5:], f.valid[: h - 2, : w - 5])

    def test_occlusion_bit_set_when_link_folds_over(self):
        # Fat distal link sweeping across the proximal one hides material points.
        cfg = ChainConfig(
            link_lengths=[1.0, 1.0], link_radii=[0.3, 0.35], joint_limits=[(-2.4, 2.4)] * 2
        )
        cam = fit_camera(cfg)
        style = RenderStyle(per_link_base_intensity=[0.9, 0.4])
        state = ChainState([0.0, 2.0])
        f = oracle_flow(cfg, cam, style, state, np.array([0.0, 0.12]))
        assert f.occluded.sum() > 0
        assert np.all(f.valid[f.occluded])
        # occluded points still carry their true (here: zero) displacement
        np.testing.assert_array_equal(f.vectors[f.occluded], 0.0)


class TestFirstOrderFlow:
    def test_zero_action(self, scene):
        cfg, cam, _, state = scene
        f = first_order_flow(cfg, cam, state, np.zeros(3))
        np.testing.assert_array_equal(f.vectors, 0.0)

    def test_exact_linearity(self, scene):
        cfg, cam, _, state = scene
        delta = np.array([0.03, -0.02, 0.05])
        f1 = first_order_flow(cfg, cam, state, delta)
        f2 = first_order_flow(cfg, cam, state, 2 * delta)
        np.testing.assert_array_equal(f2.vectors, 2.0 * f1.vectors)

    def test_second_order_convergence_vs_oracle(self):
        cfg = default_chain(5)
        cam = fit_camera(cfg)
        style = default_style(5)
        rng = np.random.default_rng(23)
        for _ in range(20):
            q = rng.uniform(-1.5, 1.5, 5)
            state = ChainState(q)
            delta = rng.uniform(-1, 1, 5) * 0.1
            res = []
            for scale in (1.0, 0.5):
                d = delta * scale
                fo = oracle_flow(cfg, cam, style, state, d)
                fl = first_order_flow(cfg, cam, state, d)
                res.append(np.max(np.abs(fo.vectors - fl.vectors)[fo.valid]))
            assert res[1] <= res[0] / 3.5 + 1e-12


class TestNoise:
    def test_noiseless_is_bitwise_identity(self, scene):
        cfg, cam, style, state = scene
        f = oracle_flow(cfg, cam, style, state, np.array([0.05, 0.0, -0.07]))
        g = add_noise(f, FlowNoiseModel(sigma_pixels=0.0, dropout_rate=0.0, seed=1))
        np.testing.assert_array_equal(g.vectors, f.vectors)
        np.testing.assert_array_equal(g.valid, f.valid)

    def test_same_seed_identical(self, scene):
        cfg, cam, style, state = scene
        f = oracle_flow(cfg, cam, style, state, np.array([0.05, 0.0, -0.07]))
        m = FlowNoiseModel(sigma_pixels=0.3, dropout_rate=0.05, seed=42)
        a = add_noise(f, m)
        b = add_noise(f, m)
        np.testing.assert_array_equal(a.vectors, b.vectors)
        np.testing.assert_array_equal(a.valid, b.valid)

    def test_empirical_std_and_dropout(self):
        from jidm.flow import FlowField

        h = w = 400  # 160k valid pixels
        base = FlowField(vectors=np.zeros((h, w, 2)), valid=np.ones((h, w), bool))
        m = FlowNoiseModel(sigma_pixels=0.25, dropout_rate=0.02, seed=7)
        noisy = add_noise(base, m)
        per_component = noisy.vectors[noisy.valid]
        std = per_component.std(axis=0)
        assert np.all(np.abs(std - 0.25) / 0.25 < 0.03)
        drop_frac = 1.0 - noisy.valid.mean()
        assert abs(drop_frac - 0.02) < 0.005

    def test_invalid_pixels_zeroed(self, scene):
        cfg, cam, style, state = scene
        f = oracle_flow(cfg, cam, style, state, np.array([0.05, 0.0, -0.07]))
        g = add_noise(f, FlowNoiseModel(sigma_pixels=0.1, dropout_rate=0.3, seed=3))
        np.testing.assert_array_equal(g.vectors[~g.valid], 0.0)
