"""Ridge-regularized action recovery from Jacobian fields and flow.

Two granularities: a per-pixel right pseudoinverse (the training-side
closed form) and the aggregated least squares over all pixels used at
inference, solved through the n x n normal equations with a symmetric
positive-definite factorization.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .flow import FlowField
from .kinematics import clamp_action


class ConditioningWarning(UserWarning):
    """Normal matrix nearly singular before regularization."""


@dataclass(frozen=True)
class RidgeParams:
    lam: float = 1e-3
    use_mask: bool = True
    weight_by_validity: bool = False

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")


def ridge_pinv(jac: np.ndarray, lam: float) -> np.ndarray:
    """Right pseudoinverse J^T (J J^T + lam I)^-1 of a 2 x n Jacobian.

    Equals (J^T J + lam I)^-1 J^T by the push-through identity, but only
    needs a 2 x 2 inverse. lam = 0 requires J J^T to be invertible.
    """
    jac = np.asarray(jac, dtype=np.float64)
    if jac.ndim != 2 or jac.shape[0] != 2:
        raise ValueError("expected a 2 x n Jacobian")
    a, b = jac[0] @ jac[0] + lam, jac[0] @ jac[1]
    d = jac[1] @ jac[1] + lam
    det = a * d - b * b
    if det <= 0 or (lam == 0.0 and det < 1e-14 * max(a * d, 1e-300)):
        raise ValueError("singular 2x2 system; use lam > 0")
    inv = np.array([[d, -b], [-b, a]]) / det
    return jac.T @ inv


def ridge_pinv_batch(jac: np.ndarray, lam: float) -> np.ndarray:
    """Vectorized :func:`ridge_pinv` for a (P, 2, n) stack; lam must be > 0."""
    if lam <= 0:
        raise ValueError("batched form requires lam > 0")
    a = np.einsum("pi,pi->p", jac[:, 0], jac[:, 0]) + lam
    b = np.einsum("pi,pi->p", jac[:, 0], jac[:, 1])
    d = np.einsum("pi,pi->p", jac[:, 1], jac[:, 1]) + lam
    det = a * d - b * b
    inv = np.empty((jac.shape[0], 2, 2))
    inv[:, 0, 0] = d / det
    inv[:, 0, 1] = -b / det
    inv[:, 1, 0] = -b / det
    inv[:, 1, 1] = a / det
    return np.einsum("pij,pik->pjk", jac, inv)  # J^T M, shape (P, n, 2)


def solve_normal_equations(jac: np.ndarray, vec: np.ndarray, lam: float) -> np.ndarray:
    """argmin_da sum_p |J_p da - v_p|^2 + lam |da|^2 for stacked (P, 2, n) / (P, 2)."""
    n = jac.shape[2]
    normal = np.einsum("pki,pkj->ij", jac, jac)
    rhs = np.einsum("pki,pk->i", jac, vec)
    trace = float(np.trace(normal))
    if trace > 0 and np.linalg.eigvalsh(normal)[0] < 1e-10 * trace:
        warnings.warn(
            "normal matrix is nearly singular before regularization", ConditioningWarning
        )
    return cho_solve(cho_factor(normal + lam * np.eye(n), lower=True), rhs)


def aggregate_invert(field, flow: FlowField, params: RidgeParams) -> np.ndarray:
    """Recover the action explaining a flow field under a Jacobian field.

    ``field`` is a JacobianField (H, W, 2, n); pixels are reduced in
    row-major order, so equal inputs give bitwise-equal outputs.
    """
    matrices = field.matrices
    h, w = flow.shape
    if matrices.shape[:2] != (h, w):
        raise ValueError("field and flow shapes disagree")
    if params.use_mask:
        sel = flow.valid.reshape(-1)
        jac = matrices.reshape(h * w, 2, -1)[sel]
        vec = flow.vectors.reshape(h * w, 2)[sel]
    else:
        jac = matrices.reshape(h * w, 2, -1)
        vec = flow.vectors.reshape(h * w, 2)
    if params.weight_by_validity:
        wgt = flow.valid.reshape(-1)[sel].astype(np.float64) if params.use_mask else flow.valid.reshape(-1).astype(np.float64)
        jac = jac * np.sqrt(wgt)[:, None, None]
        vec = vec * np.sqrt(wgt)[:, None]
    if not (np.all(np.isfinite(jac)) and np.all(np.isfinite(vec))):
        raise ValueError("non-finite entries in field or flow")
    if jac.shape[0] == 0:
        return np.zeros(matrices.shape[3])
    return solve_normal_equations(jac, vec, params.lam)


def translate_chunk(
    frames: list,
    field_provider,
    flow_fn,
    params: RidgeParams,
    delta_max: float,
) -> list[np.ndarray]:
    """Recover one action per adjacent frame pair of a visual chunk.

    ``frames`` holds the anchor observation followed by K planned
    frames. ``field_provider(i, image, pixels)`` returns (P, 2, n)
    Jacobians on the earlier frame of pair i; ``flow_fn(i, a, b)``
    returns the FlowField between the pair. Each recovered action is
    clamped per joint to ``delta_max``.
    """
    if len(frames) < 2:
        raise ValueError("need the anchor plus at least one planned frame")
    actions = []
    for i in range(len(frames) - 1):
        fl = flow_fn(i, frames[i], frames[i + 1])
        if params.use_mask:
            ys, xs = np.nonzero(fl.valid)
        else:
            h, w = fl.shape
            ys, xs = np.mgrid[0:h, 0:w]
            ys, xs = ys.reshape(-1), xs.reshape(-1)
        pixels = np.stack([xs, ys], axis=1)
        jac = field_provider(i, frames[i], pixels)
        vec = fl.vectors[ys, xs]
        if not (np.all(np.isfinite(jac)) and np.all(np.isfinite(vec))):
            raise ValueError("non-finite entries in field or flow")
        da = solve_normal_equations(jac, vec, params.lam)
        actions.append(clamp_action(da, delta_max))
    return actions
