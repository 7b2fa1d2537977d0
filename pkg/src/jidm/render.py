"""Deterministic rasterization of the chain into observation images.

Links are drawn as capsules, distal over proximal, with per-link base
intensities and radial shading so that pixel motion identifies which
joint moved. Rendering is supersampled then box-filtered; all sample
positions are computed in world space from dyadic pixel offsets, which
makes whole-pixel camera shifts bitwise exact.
"""

from dataclasses import dataclass

import numpy as np

from .kinematics import CameraModel, ChainConfig, ChainState, joint_world_positions


@dataclass(frozen=True)
class RenderStyle:
    per_link_base_intensity: np.ndarray   # (n,) in (0, 1]
    radial_shading_gain: float = 0.6
    background_value: float = 0.06
    supersample_factor: int = 4

    def __post_init__(self):
        object.__setattr__(
            self, "per_link_base_intensity", np.asarray(self.per_link_base_intensity, dtype=np.float64)
        )
        b = self.per_link_base_intensity
        if np.any(b <= 0) or np.any(b > 1):
            raise ValueError("base intensities must lie in (0, 1]")
        if b.size > 1 and np.min(np.abs(np.diff(b))) < 0.08:
            raise ValueError("adjacent links must differ in base intensity by >= 0.08")
        if self.radial_shading_gain < 0:
            raise ValueError("radial_shading_gain must be >= 0")
        if not 0 <= self.background_value < 1:
            raise ValueError("background_value must lie in [0, 1)")
        if self.supersample_factor < 1:
            raise ValueError("supersample_factor must be >= 1")


def default_style(n_joints: int, supersample_factor: int = 4) -> RenderStyle:
    """Interleaved bright/dark intensity ramps; adjacent links differ by >= 0.3."""
    b = np.empty(n_joints)
    n_hi = (n_joints + 1) // 2
    n_lo = n_joints // 2
    b[0::2] = np.linspace(1.0, 0.62, n_hi)
    if n_lo:
        b[1::2] = np.linspace(0.5, 0.24, n_lo)
    return RenderStyle(per_link_base_intensity=b, supersample_factor=supersample_factor)


def _capsule_sq_distance(px: np.ndarray, py: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared distance from points to the segment a-b (all world units)."""
    ab = b - a
    denom = float(ab @ ab)
    dx = px - a[0]
    dy = py - a[1]
    if denom == 0.0:
        return dx * dx + dy * dy
    t = np.clip((dx * ab[0] + dy * ab[1]) / denom, 0.0, 1.0)
    ex = dx - t * ab[0]
    ey = dy - t * ab[1]
    return ex * ex + ey * ey


def _sample_world_grid(camera: CameraModel, supersample: int) -> tuple[np.ndarray, np.ndarray]:
    h, w = camera.image_size
    s = supersample
    sub = (np.arange(s) + 0.5) / s - 0.5
    px = (np.arange(w)[:, None] + sub[None, :]).reshape(-1)   # (w*s,)
    py = (np.arange(h)[:, None] + sub[None, :]).reshape(-1)   # (h*s,)
    wx = (px - camera.offset[0]) / camera.scale
    wy = (py - camera.offset[1]) / camera.scale
    return wx, wy


def render(
    config: ChainConfig,
    camera: CameraModel,
    style: RenderStyle,
    state: ChainState,
    channels: int = 1,
) -> np.ndarray:
    """Rasterize the chain at ``state`` into an (H, W, C) image in [0, 1].

    Deterministic: identical inputs give bitwise-identical arrays.
    """
    if channels not in (1, 3):
        raise ValueError("channels must be 1 or 3")
    h, w = camera.image_size
    s = style.supersample_factor
    wx, wy = _sample_world_grid(camera, s)
    gx = wx[None, :]
    gy = wy[:, None]

    joints = joint_world_positions(config, state)
    value = np.full((h * s, w * s), style.background_value)
    for ell in range(config.n_joints):
        r = config.link_radii[ell]
        d2 = _capsule_sq_distance(gx, gy, joints[ell], joints[ell + 1])
        covered = d2 <= r * r
        shade = style.per_link_base_intensity[ell] * np.clip(
            1.0 - style.radial_shading_gain * d2 / (r * r), 0.0, 1.0
        )
        value = np.where(covered, shade, value)

    image = value.reshape(h, s, w, s).mean(axis=(1, 3))
    np.clip(image, 0.0, 1.0, out=image)
    return np.repeat(image[:, :, None], channels, axis=2) if channels == 3 else image[:, :, None]


def covering_link_map(config: ChainConfig, camera: CameraModel, state: ChainState) -> np.ndarray:
    """(H, W) int map: topmost (most distal) link covering each pixel center, -1 if none.

    Geometry only; independent of intensities and supersampling.
    """
    h, w = camera.image_size
    wx, wy = _sample_world_grid(camera, 1)
    gx = wx[None, :]
    gy = wy[:, None]
    joints = joint_world_positions(config, state)
    links = np.full((h, w), -1, dtype=np.intp)
    for ell in range(config.n_joints):
        r = config.link_radii[ell]
        d2 = _capsule_sq_distance(gx, gy, joints[ell], joints[ell + 1])
        links[d2 <= r * r] = ell
    return links


def foreground_mask(
    config: ChainConfig, camera: CameraModel, style: RenderStyle, state: ChainState
) -> np.ndarray:
    """True exactly where some capsule covers the pixel center."""
    del style  # coverage is geometry-only; kept for call-site symmetry
    return covering_link_map(config, camera, state) >= 0


def save_ppm(image: np.ndarray, path: str) -> None:
    """Debug dump as binary PPM/PGM, 8-bit. The dataset binary is canonical."""
    arr = np.clip(np.asarray(image), 0.0, 1.0)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    data = (arr * 255.0 + 0.5).astype(np.uint8)
    h, w = data.shape[:2]
    magic = b"P6" if data.ndim == 3 else b"P5"
    with open(path, "wb") as f:
        f.write(magic + b"\n%d %d\n255\n" % (w, h))
        f.write(data.tobytes())
