"""Trainable inverse-dynamics models and their joint forward-inverse loss.

The field model maps (pixel coords, local patch of o_t) to a per-pixel
2 x n Jacobian; training combines a Charbonnier flow objective with a
ridge-pseudoinverse action-reconstruction term, both with exact
analytic gradients. Two parameter-matched direct regressors (image-pair
and flow-conditioned) share the trunk and serve as baselines.

All math runs in float64; float32 appears only at the storage boundary.
"""

import json
import struct
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .inversion import solve_normal_equations
from .mlp import Adam, Mlp

KIND_JIDM = "jidm"
KIND_UNIPI = "unipi"
KIND_DIDM_FLOW = "didm_flow"
MODEL_KINDS = (KIND_JIDM, KIND_UNIPI, KIND_DIDM_FLOW)


@dataclass(frozen=True)
class TrainConfig:
    w_a: float = 0.3
    charbonnier_eps: float = 1e-3
    ridge_lambda: float = 1e-4
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    steps: int = 4000
    batch_records: int = 16
    pixels_per_record: int = 512
    foreground_fraction: float = 0.5
    dense_pixels: bool = False
    seed: int = 0
    log_every: int = 50

    def __post_init__(self):
        if self.w_a < 0 or self.charbonnier_eps <= 0 or self.ridge_lambda <= 0:
            raise ValueError("need w_a >= 0, charbonnier_eps > 0, ridge_lambda > 0")


@dataclass(frozen=True)
class PatchFieldModel:
    """Dense Jacobian field conditioned on pixel coords and a local patch.

    The network predicts in normalized units; ``output_scale`` (pixels
    per radian, roughly the camera scale) maps net outputs to Jacobian
    entries so trained weights stay O(1).
    """

    n_joints: int
    params: np.ndarray
    patch_size: int = 9
    hidden: tuple[int, ...] = (128, 128)
    channels: int = 1
    output_scale: float = 16.0

    kind = KIND_JIDM

    @property
    def input_dim(self) -> int:
        return 2 + self.patch_size * self.patch_size * self.channels

    @property
    def sizes(self) -> list[int]:
        return [self.input_dim, *self.hidden, 2 * self.n_joints]

    def mlp(self) -> Mlp:
        return Mlp(self.sizes, self.params)

    def with_params(self, params: np.ndarray) -> "PatchFieldModel":
        return replace(self, params=params)


@dataclass(frozen=True)
class DirectIDM:
    """Direct action regressor with the same per-pixel trunk.

    Trunk features are mean-pooled over a fixed pixel grid; the head
    outputs the action in units of ``action_scale`` (the step cap), so
    trained weights stay O(1). Variant "unipi" consumes patches from
    both frames; variant "didm_flow" consumes the o_t patch plus the
    local flow vector.
    """

    n_joints: int
    params: np.ndarray
    variant: str
    patch_size: int = 9
    hidden: tuple[int, ...] = (128, 128)
    channels: int = 1
    action_scale: float = 0.12

    def __post_init__(self):
        if self.variant not in (KIND_UNIPI, KIND_DIDM_FLOW):
            raise ValueError(f"unknown direct variant {self.variant!r}")

    @property
    def kind(self) -> str:
        return self.variant

    @property
    def input_dim(self) -> int:
        per_patch = self.patch_size * self.patch_size * self.channels
        return 2 + (2 * per_patch if self.variant == KIND_UNIPI else per_patch + 2)

    @property
    def sizes(self) -> list[int]:
        return [self.input_dim, *self.hidden, self.n_joints]

    def mlp(self) -> Mlp:
        return Mlp(self.sizes, self.params)

    def with_params(self, params: np.ndarray) -> "DirectIDM":
        return replace(self, params=params)


def param_count(sizes: list[int]) -> int:
    return sum(sizes[i + 1] * (sizes[i] + 1) for i in range(len(sizes) - 1))


def matched_hidden_widths(input_dim: int, output_dim: int, target_params: int) -> tuple[int, int]:
    """Two hidden widths whose parameter count best matches the target.

    For each first width the best second width has a closed form, so the
    search is linear and typically lands within a handful of parameters.
    """
    candidates = []
    for h1 in range(1, 4096):
        rest = target_params - h1 * (input_dim + 1) - output_dim
        h2 = max(1, round(rest / (h1 + 1 + output_dim)))
        for cand in (h2 - 1, h2, h2 + 1):
            if cand < 1:
                continue
            err = abs(param_count([input_dim, h1, cand, output_dim]) - target_params)
            candidates.append((h1, cand, err))
    # prefer balanced trunks among close-enough counts; a bottleneck layer
    # would cripple the baseline and bias the comparison
    close = [c for c in candidates if c[2] <= 0.01 * target_params]
    pool = close if close else candidates
    h1, h2, _ = min(pool, key=lambda c: (abs(c[0] - c[1]), c[2]) if close else (c[2], abs(c[0] - c[1])))
    return h1, h2


def make_model(
    kind: str,
    n_joints: int,
    patch_size: int = 9,
    channels: int = 1,
    hidden: tuple[int, ...] = (128, 128),
    seed: int = 0,
    output_scale: float = 16.0,
    action_scale: float = 0.12,
):
    """Build a freshly initialized model; direct baselines are width-matched
    so their parameter counts fall within 2% of the field model's."""
    if kind == KIND_JIDM:
        proto = PatchFieldModel(
            n_joints, None, patch_size, tuple(hidden), channels, float(output_scale)
        )
    else:
        target = param_count(PatchFieldModel(n_joints, None, patch_size, tuple(hidden), channels).sizes)
        probe = DirectIDM(n_joints, None, kind, patch_size, tuple(hidden), channels)
        widths = matched_hidden_widths(probe.input_dim, n_joints, target)
        proto = replace(probe, hidden=widths, action_scale=float(action_scale))
        got = param_count(proto.sizes)
        if abs(got - target) / target > 0.02:
            raise ValueError(f"could not match parameter counts: {got} vs {target}")
    net = Mlp(proto.sizes)
    # the field head starts at zero (zero map is a safe fixed point for the
    # ridge-inverted term); the direct heads start small-random so pooled
    # trunk gradients flow from the first step
    net.init(np.random.default_rng(seed), zero_head=kind == KIND_JIDM)
    return proto.with_params(net.params)


# --- patch extraction and model inputs ---------------------------------------


def extract_patches(image: np.ndarray, pixels: np.ndarray, patch_size: int) -> np.ndarray:
    """(Q, P*P*C) flattened patches centered at pixel coords (x, y).

    Zero padding outside the frame; bilinear interpolation for
    fractional centers (integer centers reduce to a direct gather).
    """
    image = np.asarray(image, dtype=np.float64)
    h, w, c = image.shape
    m = patch_size // 2
    padded = np.zeros((h + 2 * m + 1, w + 2 * m + 1, c))
    padded[: h + 2 * m, : w + 2 * m][m : m + h, m : m + w] = image

    x = np.asarray(pixels[:, 0], dtype=np.float64)
    y = np.asarray(pixels[:, 1], dtype=np.float64)
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    fx = (x - x0)[:, None, None, None]
    fy = (y - y0)[:, None, None, None]

    def gather(cx, cy):
        rows = (cy[:, None] + np.arange(patch_size))[:, :, None]
        cols = (cx[:, None] + np.arange(patch_size))[:, None, :]
        return padded[rows, cols]  # (Q, P, P, C)

    if np.all(fx == 0.0) and np.all(fy == 0.0):
        out = gather(x0, y0)
    else:
        out = (
            gather(x0, y0) * (1 - fx) * (1 - fy)
            + gather(x0 + 1, y0) * fx * (1 - fy)
            + gather(x0, y0 + 1) * (1 - fx) * fy
            + gather(x0 + 1, y0 + 1) * fx * fy
        )
    return out.reshape(out.shape[0], -1)


def _norm_coords(pixels: np.ndarray, h: int, w: int) -> np.ndarray:
    x = np.asarray(pixels[:, 0], dtype=np.float64)
    y = np.asarray(pixels[:, 1], dtype=np.float64)
    return np.stack([2.0 * x / (w - 1) - 1.0, 2.0 * y / (h - 1) - 1.0], axis=1)


def field_inputs(model: PatchFieldModel, image: np.ndarray, pixels: np.ndarray) -> np.ndarray:
    h, w = image.shape[:2]
    return np.concatenate(
        [_norm_coords(pixels, h, w), extract_patches(image, pixels, model.patch_size)], axis=1
    )


def direct_inputs(
    model: DirectIDM,
    o_t: np.ndarray,
    pixels: np.ndarray,
    o_next: np.ndarray | None = None,
    flow_vectors: np.ndarray | None = None,
) -> np.ndarray:
    h, w = o_t.shape[:2]
    parts = [_norm_coords(pixels, h, w), extract_patches(o_t, pixels, model.patch_size)]
    if model.variant == KIND_UNIPI:
        if o_next is None:
            raise ValueError("unipi variant needs the next frame")
        parts.append(extract_patches(o_next, pixels, model.patch_size))
    else:
        if flow_vectors is None:
            raise ValueError("flow variant needs per-pixel flow vectors")
        parts.append(np.asarray(flow_vectors, dtype=np.float64))
    return np.concatenate(parts, axis=1)


def pooling_grid(h: int, w: int) -> np.ndarray:
    """Fixed (G, 2) pixel grid over which direct models pool trunk features."""
    stride = max(4, min(h, w) // 16)
    xs = np.arange(stride // 2, w, stride)
    ys = np.arange(stride // 2, h, stride)
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


# --- forward passes -----------------------------------------------------------


def evaluate_field(model: PatchFieldModel, image: np.ndarray, pixels: np.ndarray) -> np.ndarray:
    """Per-pixel (2, n) matrices at the queried pixel coords.

    Batched evaluation is bitwise equal to per-pixel evaluation: queries
    run through fixed-size padded chunks.
    """
    pixels = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    h, w = image.shape[:2]
    if np.any(pixels[:, 0] < 0) or np.any(pixels[:, 0] > w - 1) or np.any(
        pixels[:, 1] < 0
    ) or np.any(pixels[:, 1] > h - 1):
        raise ValueError("pixel coordinates out of image bounds")
    out = model.mlp().evaluate_chunked(field_inputs(model, image, pixels))
    return model.output_scale * out.reshape(-1, 2, model.n_joints)


def _direct_trunk_forward(net: Mlp, x: np.ndarray, grid_size: int):
    v = net.views()
    n_layers = len(net.sizes) - 1
    acts = [x]
    hcur = x
    for i in range(n_layers - 1):
        hcur = np.tanh(hcur @ v[f"W{i}"].T + v[f"b{i}"])
        acts.append(hcur)
    pooled = hcur.reshape(-1, grid_size, hcur.shape[1]).mean(axis=1)
    out = pooled @ v[f"W{n_layers - 1}"].T + v[f"b{n_layers - 1}"]
    return out, pooled, acts


def predict_direct(
    model: DirectIDM,
    o_t: np.ndarray,
    o_next: np.ndarray | None = None,
    flow_vectors_grid: np.ndarray | None = None,
) -> np.ndarray:
    """Action prediction for one observation (pair); returns (n,)."""
    grid = pooling_grid(*o_t.shape[:2])
    x = direct_inputs(model, np.asarray(o_t, np.float64), grid,
                      None if o_next is None else np.asarray(o_next, np.float64),
                      flow_vectors_grid)
    out, _, _ = _direct_trunk_forward(model.mlp(), x, grid.shape[0])
    return out[0]


# --- losses -------------------------------------------------------------------


@dataclass
class FieldBatch:
    inputs: np.ndarray    # (Np, d)
    actions: np.ndarray   # (Np, n) per-pixel copy of the record action
    targets: np.ndarray   # (Np, 2) flow vectors (zero on background)


@dataclass
class DirectBatch:
    inputs: np.ndarray    # (B*G, d)
    actions: np.ndarray   # (B, n)
    grid_size: int


def loss_jidm(model: PatchFieldModel, batch: FieldBatch, cfg: TrainConfig):
    """Charbonnier flow loss plus ridge-inverted action loss, exact gradient.

    loss = mean_p rho(|J_p da - v_p|) + w_a mean_p |da - J_p^{+,lam} v_p|^2
    with rho(x) = sqrt(x^2 + eps^2) and the right pseudoinverse
    J^T (J J^T + lam I)^{-1}; the gradient flows through both terms,
    including the matrix inverse. ``ridge_lambda`` is expressed in
    normalized pixel/radian units (relative to output_scale^2).
    """
    net = model.mlp()
    out, acts = net.forward(batch.inputs)
    np_, n = batch.actions.shape
    scale = model.output_scale
    jac = scale * out.reshape(np_, 2, n)
    v = batch.targets
    a = batch.actions
    lam = cfg.ridge_lambda * scale * scale
    eps = cfg.charbonnier_eps

    r = np.einsum("pij,pj->pi", jac, a) - v
    rho = np.sqrt(np.einsum("pi,pi->p", r, r) + eps * eps)
    loss_fwd = rho.mean()

    j00 = np.einsum("pi,pi->p", jac[:, 0], jac[:, 0]) + lam
    j01 = np.einsum("pi,pi->p", jac[:, 0], jac[:, 1])
    j11 = np.einsum("pi,pi->p", jac[:, 1], jac[:, 1]) + lam
    det = j00 * j11 - j01 * j01
    minv = np.empty((np_, 2, 2))
    minv[:, 0, 0] = j11 / det
    minv[:, 0, 1] = -j01 / det
    minv[:, 1, 0] = -j01 / det
    minv[:, 1, 1] = j00 / det

    g = np.einsum("pij,pj->pi", minv, v)          # (J J^T + lam I)^-1 v
    a_hat = np.einsum("pij,pi->pj", jac, g)       # J^T g
    e = a - a_hat
    loss_inv = np.einsum("pi,pi->p", e, e).mean()
    loss = loss_fwd + cfg.w_a * loss_inv

    d_jac = (r / (rho[:, None] * np_))[:, :, None] * a[:, None, :]
    u = (-2.0 * cfg.w_a / np_) * e                # dL/d(a_hat) transposed in
    ju = np.einsum("pij,pj->pi", jac, u)
    mju = np.einsum("pij,pj->pi", minv, ju)
    d_jac += g[:, :, None] * u[:, None, :]
    d_jac -= mju[:, :, None] * a_hat[:, None, :]
    d_jac -= g[:, :, None] * np.einsum("pij,pi->pj", jac, mju)[:, None, :]

    grad = net.backward(acts, d_jac.reshape(np_, 2 * n))
    return float(loss), grad


def loss_direct(model: DirectIDM, batch: DirectBatch):
    """Per-coordinate mean squared error of the pooled action head."""
    net = model.mlp()
    out, pooled, acts = _direct_trunk_forward(net, batch.inputs, batch.grid_size)
    b, n = batch.actions.shape
    err = out - batch.actions
    loss = float(np.einsum("bi,bi->", err, err) / (b * n))

    v = net.views()
    grad = np.zeros_like(model.params)
    gv = net.views(grad)
    n_layers = len(net.sizes) - 1
    d_out = 2.0 * err / (b * n)
    gv[f"W{n_layers - 1}"][:] = d_out.T @ pooled
    gv[f"b{n_layers - 1}"][:] = d_out.sum(axis=0)
    d_pooled = d_out @ v[f"W{n_layers - 1}"]
    delta = np.repeat(d_pooled / batch.grid_size, batch.grid_size, axis=0)
    for i in range(n_layers - 2, -1, -1):
        delta = delta * (1.0 - acts[i + 1] * acts[i + 1])
        gv[f"W{i}"][:] = delta.T @ acts[i]
        gv[f"b{i}"][:] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ v[f"W{i}"]
    return loss, grad


# --- batch sampling -----------------------------------------------------------


def sample_field_batch(
    dataset: Dataset, model: PatchFieldModel, cfg: TrainConfig, rng: np.random.Generator
) -> FieldBatch:
    """Half foreground / half background pixel samples per record.

    Background pixels carry zero-flow targets that anchor the field;
    ``dense_pixels`` switches to all-pixel sums for parity checks.
    """
    recs = dataset.take(rng.integers(0, len(dataset), cfg.batch_records))
    inputs, actions, targets = [], [], []
    for rec in recs:
        image = rec["o_t"].astype(np.float64)
        h, w = image.shape[:2]
        valid = rec["valid"].astype(bool)
        flat_valid = valid.ravel()
        if cfg.dense_pixels:
            sel = np.arange(h * w)
        else:
            fg_pool = np.flatnonzero(flat_valid)
            bg_pool = np.flatnonzero(~flat_valid)
            n_fg = int(round(cfg.pixels_per_record * cfg.foreground_fraction))
            n_bg = cfg.pixels_per_record - n_fg
            sel = np.concatenate(
                [
                    fg_pool[rng.integers(0, fg_pool.size, n_fg)],
                    bg_pool[rng.integers(0, bg_pool.size, n_bg)],
                ]
            )
        ys, xs = np.divmod(sel, w)
        pixels = np.stack([xs, ys], axis=1)
        tgt = rec["flow"].reshape(-1, 2)[sel].astype(np.float64)
        tgt[~flat_valid[sel]] = 0.0
        inputs.append(field_inputs(model, image, pixels))
        targets.append(tgt)
        actions.append(np.tile(rec["delta_a"].astype(np.float64), (sel.size, 1)))
    return FieldBatch(
        inputs=np.concatenate(inputs),
        actions=np.concatenate(actions),
        targets=np.concatenate(targets),
    )


def sample_direct_batch(
    dataset: Dataset, model: DirectIDM, cfg: TrainConfig, rng: np.random.Generator
) -> DirectBatch:
    recs = dataset.take(rng.integers(0, len(dataset), cfg.batch_records))
    h, w = recs[0]["o_t"].shape[:2]
    grid = pooling_grid(h, w)
    inputs, actions = [], []
    for rec in recs:
        o_t = rec["o_t"].astype(np.float64)
        if model.variant == KIND_UNIPI:
            x = direct_inputs(model, o_t, grid, o_next=rec["o_next"].astype(np.float64))
        else:
            fv = rec["flow"][grid[:, 1], grid[:, 0]].astype(np.float64)
            fv[~rec["valid"][grid[:, 1], grid[:, 0]].astype(bool)] = 0.0
            x = direct_inputs(model, o_t, grid, flow_vectors=fv)
        inputs.append(x)
        actions.append(rec["delta_a"].astype(np.float64))
    return DirectBatch(
        inputs=np.concatenate(inputs), actions=np.stack(actions), grid_size=grid.shape[0]
    )


# --- training loop ------------------------------------------------------------


def train(model, dataset: Dataset, cfg: TrainConfig):
    """Adam on the model's loss; deterministic per (params, data, cfg).

    Returns (trained model, loss curve as list of (step, loss)).
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1,)))
    params = np.array(model.params, dtype=np.float64, copy=True)
    work = model.with_params(params)
    opt = Adam(params.size, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps)
    curve = []
    for step in range(cfg.steps):
        if work.kind == KIND_JIDM:
            batch = sample_field_batch(dataset, work, cfg, rng)
            loss, grad = loss_jidm(work, batch, cfg)
        else:
            batch = sample_direct_batch(dataset, work, cfg, rng)
            loss, grad = loss_direct(work, batch)
        if not np.isfinite(loss):
            raise RuntimeError(
                f"training diverged: non-finite loss at step {step}, "
                f"parameter norm {np.linalg.norm(params):.6e}"
            )
        if step % cfg.log_every == 0 or step == cfg.steps - 1:
            curve.append((step, loss))
        opt.step(params, grad)
    return work.with_params(params), curve


# --- evaluation ---------------------------------------------------------------


def recover_action_jidm(model: PatchFieldModel, record, lam: float) -> np.ndarray:
    valid = record["valid"].astype(bool)
    ys, xs = np.nonzero(valid)
    if ys.size == 0:
        return np.zeros(model.n_joints)
    pixels = np.stack([xs, ys], axis=1)
    jac = evaluate_field(model, record["o_t"].astype(np.float64), pixels)
    vec = record["flow"][ys, xs].astype(np.float64)
    return solve_normal_equations(jac, vec, lam)


def recover_action_direct(model: DirectIDM, record) -> np.ndarray:
    o_t = record["o_t"].astype(np.float64)
    if model.variant == KIND_UNIPI:
        return predict_direct(model, o_t, o_next=record["o_next"].astype(np.float64))
    grid = pooling_grid(*o_t.shape[:2])
    fv = record["flow"][grid[:, 1], grid[:, 0]].astype(np.float64)
    fv[~record["valid"][grid[:, 1], grid[:, 0]].astype(bool)] = 0.0
    return predict_direct(model, o_t, flow_vectors_grid=fv)


def eval_action_mse(model, dataset: Dataset, lam: float = 1e-3) -> float:
    """Held-out action reconstruction error.

    Per-coordinate MSE of the recovered action against the true one,
    actions normalized to unit step cap, averaged over records.
    """
    delta_max = dataset.manifest.delta_max
    total = 0.0
    for i in range(len(dataset)):
        rec = dataset.record(i)
        truth = rec["delta_a"].astype(np.float64)
        if model.kind == KIND_JIDM:
            guess = recover_action_jidm(model, rec, lam)
        else:
            guess = recover_action_direct(model, rec)
        err = (guess - truth) / delta_max
        total += float(err @ err) / truth.size
    return total / len(dataset)


def eval_flow_epe(model: PatchFieldModel, dataset: Dataset) -> float:
    """Mean endpoint error of field-predicted flow on valid pixels."""
    total = 0.0
    for i in range(len(dataset)):
        rec = dataset.record(i)
        ys, xs = np.nonzero(rec["valid"].astype(bool))
        pixels = np.stack([xs, ys], axis=1)
        jac = evaluate_field(model, rec["o_t"].astype(np.float64), pixels)
        pred = np.einsum("pij,j->pi", jac, rec["delta_a"].astype(np.float64))
        err = pred - rec["flow"][ys, xs].astype(np.float64)
        total += float(np.linalg.norm(err, axis=1).mean())
    return total / len(dataset)


# --- checkpoints ----------------------------------------------------------------

CKPT_MAGIC = b"JPRM"
CKPT_VERSION = 1
_KIND_TAG = {KIND_JIDM: 1, KIND_UNIPI: 2, KIND_DIDM_FLOW: 3}
_TAG_KIND = {v: k for k, v in _KIND_TAG.items()}
_CKPT_HEADER = struct.Struct("<4sIII")


def save_checkpoint(path: str, model) -> None:
    """Binary checkpoint: header, JSON layout descriptor, float64 params."""
    arch = {
        "kind": model.kind,
        "n_joints": model.n_joints,
        "patch_size": model.patch_size,
        "hidden": list(model.hidden),
        "channels": model.channels,
    }
    blob = json.dumps(arch, sort_keys=True).encode("utf-8")
    params = np.ascontiguousarray(model.params, dtype="<f8")
    with open(path, "wb") as f:
        f.write(_CKPT_HEADER.pack(CKPT_MAGIC, CKPT_VERSION, _KIND_TAG[model.kind], len(blob)))
        f.write(blob)
        f.write(struct.pack("<Q", params.size))
        f.write(params.tobytes())


def load_checkpoint(path: str):
    with open(path, "rb") as f:
        magic, version, tag, blob_len = _CKPT_HEADER.unpack(f.read(_CKPT_HEADER.size))
        if magic != CKPT_MAGIC:
            raise ValueError(f"{path}: not a parameter checkpoint")
        if version != CKPT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        arch = json.loads(f.read(blob_len).decode("utf-8"))
        (count,) = struct.unpack("<Q", f.read(8))
        params = np.frombuffer(f.read(count * 8), dtype="<f8").astype(np.float64)
    if arch["kind"] != _TAG_KIND[tag]:
        raise ValueError(f"{path}: kind tag disagrees with layout descriptor")
    if arch["kind"] == KIND_JIDM:
        return PatchFieldModel(
            n_joints=arch["n_joints"],
            params=params,
            patch_size=arch["patch_size"],
            hidden=tuple(arch["hidden"]),
            channels=arch["channels"],
        )
    return DirectIDM(
        n_joints=arch["n_joints"],
        params=params,
        variant=arch["kind"],
        patch_size=arch["patch_size"],
        hidden=tuple(arch["hidden"]),
        channels=arch["channels"],
    )
