"""Planar serial-chain kinematics: forward kinematics, the analytic
point Jacobian, and the affine camera that maps world points to pixels.

Everything here is closed-form and double precision; the rest of the
package treats these functions as ground truth.
"""

from dataclasses import dataclass, field

import numpy as np

# Per-step action cap (radians). Small enough that first-order flow is a
# good approximation, large enough to move distal pixels by >= 1 px at
# the default camera scales.
DELTA_MAX_DEFAULT = 0.12


def _as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class ChainConfig:
    """Geometry of a planar serial chain of capsule-shaped links.

    Link i spans from joint i to joint i+1; joint 0 sits at
    ``base_position``. Angles are absolute in the world frame with 0
    pointing along +x and accumulate along the chain.
    """

    link_lengths: np.ndarray      # (n,) world units
    link_radii: np.ndarray        # (n,) capsule half-widths, world units
    joint_limits: np.ndarray      # (n, 2) radians, [lo, hi] per joint
    base_position: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "link_lengths", _as_f64(self.link_lengths))
        object.__setattr__(self, "link_radii", _as_f64(self.link_radii))
        object.__setattr__(self, "joint_limits", _as_f64(self.joint_limits).reshape(-1, 2))
        object.__setattr__(self, "base_position", _as_f64(self.base_position))
        n = self.link_lengths.shape[0]
        if n < 1:
            raise ValueError("chain needs at least one link")
        if self.link_radii.shape != (n,) or self.joint_limits.shape != (n, 2):
            raise ValueError("link_lengths, link_radii and joint_limits disagree on joint count")
        if not (np.all(self.link_lengths > 0) and np.all(self.link_radii > 0)):
            raise ValueError("link lengths and radii must be positive")
        if not np.all(self.joint_limits[:, 0] < self.joint_limits[:, 1]):
            raise ValueError("joint limits must satisfy lo < hi")

    @property
    def n_joints(self) -> int:
        return self.link_lengths.shape[0]

    @property
    def reach(self) -> float:
        """Maximum distance of any material point from the base."""
        return float(np.sum(self.link_lengths) + self.link_radii[-1])


@dataclass(frozen=True)
class ChainState:
    """Joint angles of a chain, radians."""

    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", _as_f64(self.q))


@dataclass(frozen=True)
class BodyPoint:
    """A material point fixed to one link.

    ``arc_param`` is the fraction along the link axis in [0, 1];
    ``lateral`` is the signed fraction of the capsule radius in [-1, 1].
    """

    link_index: int
    arc_param: float = 1.0
    lateral: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.arc_param <= 1.0:
            raise ValueError("arc_param must lie in [0, 1]")
        if not -1.0 <= self.lateral <= 1.0:
            raise ValueError("lateral must lie in [-1, 1]")


def default_chain(n_joints: int) -> ChainConfig:
    """Default experiment chain: geometrically tapered links.

    Lengths 1.0 * 0.85**i, radii 0.09 * 0.9**i, limits (-2.4, 2.4) rad.
    """
    i = np.arange(n_joints)
    return ChainConfig(
        link_lengths=0.85 ** i,
        link_radii=0.09 * 0.9 ** i,
        joint_limits=np.tile([-2.4, 2.4], (n_joints, 1)),
    )


def clamp_state(config: ChainConfig, q: np.ndarray) -> ChainState:
    """Clamp joint angles to the configured limits, per coordinate."""
    q = _as_f64(q)
    return ChainState(np.clip(q, config.joint_limits[:, 0], config.joint_limits[:, 1]))


def clamp_action(delta_a: np.ndarray, delta_max: float) -> np.ndarray:
    """Clamp a joint increment to the per-joint step cap."""
    return np.clip(_as_f64(delta_a), -delta_max, delta_max)


def joint_world_positions(config: ChainConfig, state: ChainState) -> np.ndarray:
    """(n+1, 2) array: joint 0 (= base) through the chain tip."""
    phi = np.cumsum(state.q)
    steps = config.link_lengths[:, None] * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    pts = np.empty((config.n_joints + 1, 2))
    pts[0] = config.base_position
    np.cumsum(steps, axis=0, out=pts[1:])
    pts[1:] += config.base_position
    return pts


def link_frames(config: ChainConfig, state: ChainState) -> tuple[np.ndarray, np.ndarray]:
    """Per-link unit tangent and normal vectors, each (n, 2)."""
    phi = np.cumsum(state.q)
    tangents = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    normals = np.stack([-np.sin(phi), np.cos(phi)], axis=1)
    return tangents, normals


def forward_kinematics(config: ChainConfig, state: ChainState, point: BodyPoint) -> np.ndarray:
    """World position of a material point. Continuous in q."""
    ell = point.link_index
    if not 0 <= ell < config.n_joints:
        raise ValueError(f"link_index {ell} out of range for {config.n_joints} links")
    joints = joint_world_positions(config, state)
    tangents, normals = link_frames(config, state)
    return (
        joints[ell]
        + point.arc_param * config.link_lengths[ell] * tangents[ell]
        + point.lateral * config.link_radii[ell] * normals[ell]
    )


def jacobian_at_world_points(
    config: ChainConfig, state: ChainState, points: np.ndarray, link_index: np.ndarray
) -> np.ndarray:
    """Analytic Jacobian d(world position)/dq for world points on known links.

    ``points`` is (P, 2), ``link_index`` (P,) ints. Returns (P, 2, n) in
    world units per radian. Column j of a point on link ell is the 90-degree
    rotation of (point - joint_j) for j <= ell and zero otherwise: joint j
    rotates the whole distal sub-chain rigidly about its own pivot.
    """
    points = _as_f64(points).reshape(-1, 2)
    link_index = np.asarray(link_index, dtype=np.intp).reshape(-1)
    n = config.n_joints
    joints = joint_world_positions(config, state)[:n]          # (n, 2) pivots
    rel = points[:, None, :] - joints[None, :, :]              # (P, n, 2)
    jac = np.empty((points.shape[0], 2, n))
    jac[:, 0, :] = -rel[:, :, 1]
    jac[:, 1, :] = rel[:, :, 0]
    mask = np.arange(n)[None, :] > link_index[:, None]         # joints distal to the point
    jac[:, 0, :][mask] = 0.0
    jac[:, 1, :][mask] = 0.0
    return jac


def analytic_jacobian(config: ChainConfig, state: ChainState, point: BodyPoint) -> np.ndarray:
    """(2, n) derivative of a body point's world position w.r.t. q."""
    pos = forward_kinematics(config, state, point)
    return jacobian_at_world_points(config, state, pos[None], np.array([point.link_index]))[0]


@dataclass(frozen=True)
class CameraModel:
    """Affine world-to-pixel map: pixel = scale * world + offset.

    Pixel (row r, col c) has pixel-space coordinates (x=c, y=r); the
    pixel-space Jacobian of any world map is scale times the world one.
    """

    scale: float
    offset: np.ndarray          # (2,) pixels, (x, y)
    image_size: tuple[int, int]  # (H, W)

    def __post_init__(self):
        object.__setattr__(self, "offset", _as_f64(self.offset))
        h, w = self.image_size
        if self.scale <= 0:
            raise ValueError("camera scale must be positive")
        if h < 16 or w < 16:
            raise ValueError("image must be at least 16x16")


def project(camera: CameraModel, world: np.ndarray) -> np.ndarray:
    """World point(s) to continuous pixel coordinates (x, y)."""
    return camera.scale * _as_f64(world) + camera.offset


def unproject(camera: CameraModel, pixel: np.ndarray) -> np.ndarray:
    """Inverse of :func:`project`."""
    return (_as_f64(pixel) - camera.offset) / camera.scale


def fit_camera(config: ChainConfig, image_size: tuple[int, int] = (128, 128), fill: float = 0.45) -> CameraModel:
    """Camera whose frame contains every pose of the chain.

    The base maps to the image center and the reach disc fills ``fill``
    of the short image side, so chains from 2 to 16 DoF stay in frame
    at any admissible q. Offsets land on 0.5-pixel lattice points,
    which keeps whole-pixel camera shifts bitwise exact.
    """
    h, w = image_size
    scale = fill * min(h, w) / config.reach
    center = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    offset = center - scale * config.base_position
    return CameraModel(scale=scale, offset=offset, image_size=(h, w))


def tip_pixel(config: ChainConfig, camera: CameraModel, state: ChainState) -> np.ndarray:
    """Pixel position of the chain tip (end of the last link axis)."""
    return project(camera, joint_world_positions(config, state)[-1])
