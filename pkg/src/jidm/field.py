"""Dense per-pixel Jacobian fields and the analytic ground-truth field."""

from dataclasses import dataclass

import numpy as np

from .kinematics import CameraModel, ChainConfig, ChainState, jacobian_at_world_points
from .render import covering_link_map


@dataclass
class JacobianField:
    """(H, W, 2, n) per-pixel matrices, pixels per radian.

    Applying a field to an action is a per-pixel matrix-vector product;
    background pixels carry zero matrices.
    """

    matrices: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrices.shape[0], self.matrices.shape[1]

    @property
    def n_joints(self) -> int:
        return self.matrices.shape[3]

    def apply(self, delta_a: np.ndarray) -> np.ndarray:
        """Predicted flow vectors (H, W, 2) for an action increment."""
        return np.einsum("hwij,j->hwi", self.matrices, np.asarray(delta_a, dtype=np.float64))


def analytic_field(config: ChainConfig, camera: CameraModel, state: ChainState) -> JacobianField:
    """Ground-truth pixel-space Jacobian field at a state.

    Foreground pixels get scale times the world Jacobian of their
    material point; background pixels get zeros.
    """
    h, w = camera.image_size
    links = covering_link_map(config, camera, state)
    ys, xs = np.nonzero(links >= 0)
    world = np.stack(
        [(xs - camera.offset[0]) / camera.scale, (ys - camera.offset[1]) / camera.scale], axis=1
    )
    jac = camera.scale * jacobian_at_world_points(config, state, world, links[ys, xs])
    matrices = np.zeros((h, w, 2, config.n_joints))
    matrices[ys, xs] = jac
    return JacobianField(matrices=matrices)


def analytic_jacobians_at_pixels(
    config: ChainConfig, camera: CameraModel, state: ChainState, pixels: np.ndarray
) -> np.ndarray:
    """(P, 2, n) pixel-space Jacobians at integer pixel coords (x, y).

    Background pixels yield zero matrices, matching the dense field.
    """
    pixels = np.asarray(pixels)
    links = covering_link_map(config, camera, state)
    link_idx = links[pixels[:, 1], pixels[:, 0]]
    world = (pixels.astype(np.float64) - camera.offset) / camera.scale
    jac = camera.scale * jacobian_at_world_points(config, state, world, np.maximum(link_idx, 0))
    jac[link_idx < 0] = 0.0
    return jac
