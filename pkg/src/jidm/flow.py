"""Dense optical flow between chain states.

``oracle_flow`` is exact material-point correspondence (the stand-in for
an off-the-shelf flow estimator), ``first_order_flow`` is the analytic
Jacobian times the action, and ``add_noise`` models estimator error.
Flow is anchored at the source frame: vectors live at the pixel centers
of the earlier observation, in pixels.
"""

from dataclasses import dataclass

import numpy as np

from .kinematics import (
    CameraModel,
    ChainConfig,
    ChainState,
    DELTA_MAX_DEFAULT,
    jacobian_at_world_points,
    joint_world_positions,
    link_frames,
)
from .render import RenderStyle, covering_link_map


@dataclass
class FlowField:
    """Per-pixel 2-vector motion with validity mask.

    ``vectors`` is (H, W, 2) in pixels, zero wherever ``valid`` is False.
    ``occluded`` (optional) marks material points hidden in the target
    frame; they still carry their true displacement.
    """

    vectors: np.ndarray
    valid: np.ndarray
    occluded: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.vectors.shape[0], self.vectors.shape[1]


@dataclass(frozen=True)
class FlowNoiseModel:
    sigma_pixels: float = 0.25
    dropout_rate: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.sigma_pixels < 0:
            raise ValueError("sigma_pixels must be >= 0")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must lie in [0, 1)")


def _pixel_world_grid(camera: CameraModel) -> tuple[np.ndarray, np.ndarray]:
    h, w = camera.image_size
    wx = (np.arange(w) - camera.offset[0]) / camera.scale
    wy = (np.arange(h) - camera.offset[1]) / camera.scale
    return np.broadcast_to(wx[None, :], (h, w)), np.broadcast_to(wy[:, None], (h, w))


def flow_between_states(
    config: ChainConfig,
    camera: CameraModel,
    state_from: ChainState,
    state_to: ChainState,
) -> FlowField:
    """Exact material flow from one state to another, no step-size cap.

    Each foreground pixel of the source frame is identified with the
    material point of its topmost covering link; the flow is the
    projected displacement of that point under the state change.
    """
    h, w = camera.image_size
    links = covering_link_map(config, camera, state_from)
    valid = links >= 0
    if np.array_equal(state_from.q, state_to.q):
        return FlowField(
            vectors=np.zeros((h, w, 2)), valid=valid, occluded=np.zeros((h, w), dtype=bool)
        )
    idx = np.flatnonzero(valid.ravel())
    link_idx = links.ravel()[idx]

    wx, wy = _pixel_world_grid(camera)
    pts = np.stack([wx.ravel()[idx], wy.ravel()[idx]], axis=1)   # (P, 2) world

    # Link-frame coordinates are rigid, so they transport the point exactly,
    # including pixels on the round end caps.
    joints0 = joint_world_positions(config, state_from)
    t0, n0 = link_frames(config, state_from)
    rel = pts - joints0[link_idx]
    xi_t = np.einsum("pi,pi->p", rel, t0[link_idx])
    xi_n = np.einsum("pi,pi->p", rel, n0[link_idx])

    joints1 = joint_world_positions(config, state_to)
    t1, n1 = link_frames(config, state_to)
    moved = joints1[link_idx] + xi_t[:, None] * t1[link_idx] + xi_n[:, None] * n1[link_idx]

    vectors = np.zeros((h, w, 2))
    vectors.reshape(-1, 2)[idx] = camera.scale * (moved - pts)

    occluded = np.zeros((h, w), dtype=bool)
    occluded.ravel()[idx] = _hidden_in_target(config, camera, state_to, moved, link_idx)
    return FlowField(vectors=vectors, valid=valid, occluded=occluded)


def _hidden_in_target(
    config: ChainConfig,
    camera: CameraModel,
    state_to: ChainState,
    moved: np.ndarray,
    link_idx: np.ndarray,
) -> np.ndarray:
    """A moved point is hidden if it leaves the frame or a more distal link covers it."""
    h, w = camera.image_size
    px = camera.scale * moved + camera.offset
    hidden = (px[:, 0] < -0.5) | (px[:, 0] >= w - 0.5) | (px[:, 1] < -0.5) | (px[:, 1] >= h - 0.5)
    joints = joint_world_positions(config, state_to)
    for ell in range(1, config.n_joints):
        behind = link_idx < ell
        if not np.any(behind):
            continue
        a, b = joints[ell], joints[ell + 1]
        ab = b - a
        denom = float(ab @ ab)
        d = moved[behind] - a
        t = np.clip((d @ ab) / denom, 0.0, 1.0) if denom > 0 else 0.0
        e = d - t[:, None] * ab if denom > 0 else d
        r = config.link_radii[ell]
        hidden[behind] |= np.einsum("pi,pi->p", e, e) <= r * r
    return hidden


def oracle_flow(
    config: ChainConfig,
    camera: CameraModel,
    style: RenderStyle,
    state: ChainState,
    delta_a: np.ndarray,
    delta_max: float = DELTA_MAX_DEFAULT,
) -> FlowField:
    """Ground-truth flow for one action step taken from ``state``."""
    del style  # validity is geometry-only; kept for call-site symmetry
    delta_a = np.asarray(delta_a, dtype=np.float64)
    if np.max(np.abs(delta_a)) > delta_max + 1e-12:
        raise ValueError("action exceeds the per-step cap")
    return flow_between_states(config, camera, state, ChainState(state.q + delta_a))


def first_order_flow(
    config: ChainConfig,
    camera: CameraModel,
    state: ChainState,
    delta_a: np.ndarray,
) -> FlowField:
    """Flow predicted by the analytic Jacobian at each pixel's material point."""
    h, w = camera.image_size
    delta_a = np.asarray(delta_a, dtype=np.float64)
    links = covering_link_map(config, camera, state)
    valid = links >= 0
    idx = np.flatnonzero(valid.ravel())

    wx, wy = _pixel_world_grid(camera)
    pts = np.stack([wx.ravel()[idx], wy.ravel()[idx]], axis=1)
    jac = jacobian_at_world_points(config, state, pts, links.ravel()[idx])   # (P, 2, n)

    vectors = np.zeros((h, w, 2))
    vectors.reshape(-1, 2)[idx] = camera.scale * np.einsum("pij,j->pi", jac, delta_a)
    return FlowField(vectors=vectors, valid=valid, occluded=np.zeros((h, w), dtype=bool))


def add_noise(flow: FlowField, model: FlowNoiseModel) -> FlowField:
    """Gaussian per-component noise plus validity dropout, deterministic per seed."""
    h, w = flow.shape
    rng = np.random.default_rng(model.seed)
    vectors = flow.vectors.copy()
    valid = flow.valid.copy()
    if model.sigma_pixels > 0:
        noise = rng.normal(0.0, model.sigma_pixels, size=(h, w, 2))
        vectors[valid] += noise[valid]
    if model.dropout_rate > 0:
        dropped = valid & (rng.random((h, w)) < model.dropout_rate)
        valid &= ~dropped
        vectors[dropped] = 0.0
    occluded = None if flow.occluded is None else flow.occluded.copy()
    return FlowField(vectors=vectors, valid=valid, occluded=occluded)
