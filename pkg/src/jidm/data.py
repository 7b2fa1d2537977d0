"""Self-play transition generation and the bit-exact binary record format.

File layout, little-endian:
  header: magic "JIDM", version u32, H u32, W u32, C u32, n u32, record_count u64
  record: o_t (H*W*C f32) | delta_a (n f32) | o_next (H*W*C f32) |
          flow (H*W*2 f32) | valid (H*W u8) | occluded (H*W u8) | state_q (n f32)

A UTF-8 manifest sidecar (shared sectioned text format) carries the
generator provenance and per-shard byte offsets.
"""

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from . import configio
from .flow import flow_between_states
from .kinematics import CameraModel, ChainConfig, ChainState, DELTA_MAX_DEFAULT, clamp_state
from .render import RenderStyle, render

MAGIC = b"JIDM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4s5IQ")


def record_dtype(h: int, w: int, c: int, n: int) -> np.dtype:
    return np.dtype(
        [
            ("o_t", "<f4", (h, w, c)),
            ("delta_a", "<f4", (n,)),
            ("o_next", "<f4", (h, w, c)),
            ("flow", "<f4", (h, w, 2)),
            ("valid", "u1", (h, w)),
            ("occluded", "u1", (h, w)),
            ("state_q", "<f4", (n,)),
        ]
    )


@dataclass
class DatasetManifest:
    record_count: int
    episodes: int
    steps_per_episode: int
    action_law: str
    rho: float
    delta_max: float
    seed: int
    format_version: int = FORMAT_VERSION
    shards: list[tuple[str, int, int]] = field(default_factory=list)  # (path, offset, count)

    def validate(self):
        offsets = [s[1] for s in self.shards]
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("shard offsets must be strictly increasing")
        if self.shards and sum(s[2] for s in self.shards) != self.record_count:
            raise ValueError("record_count does not match shard counts")


@dataclass
class Dataset:
    """Transition records plus the provenance needed to regenerate them.

    ``base`` may be a memmap; ``rows`` selects which base records belong
    to this (possibly split) view, so record bytes are only pulled into
    memory when a batch asks for them.
    """

    base: np.ndarray               # structured array or memmap, record_dtype
    rows: np.ndarray               # (R,) indices into base
    episode_ids: np.ndarray        # (R,) int, aligned with rows
    config: ChainConfig
    camera: CameraModel
    style: RenderStyle
    manifest: DatasetManifest

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def n_joints(self) -> int:
        return self.config.n_joints

    @property
    def actions(self) -> np.ndarray:
        """(R, n) float32 effective joint increments."""
        return self.base["delta_a"][self.rows]

    def take(self, idx) -> np.ndarray:
        """Materialize the selected records (copy)."""
        return self.base[self.rows[np.asarray(idx)]]

    def record(self, i: int) -> np.void:
        return self.base[self.rows[i]]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            base=self.base,
            rows=self.rows[idx],
            episode_ids=self.episode_ids[idx],
            config=self.config,
            camera=self.camera,
            style=self.style,
            manifest=self.manifest,
        )


def _episode_rng(seed: int, episode: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(episode,)))


def _draw_actions(rng, steps, n, law, rho, delta_max):
    u = rng.uniform(-delta_max, delta_max, size=(steps, n))
    if law == "uniform":
        return u
    if law == "correlated":
        out = np.empty_like(u)
        prev = np.zeros(n)
        mix = np.sqrt(1.0 - rho * rho)
        for t in range(steps):
            prev = rho * prev + mix * u[t]
            out[t] = np.clip(prev, -delta_max, delta_max)
        return out
    raise ValueError(f"unknown action law: {law}")


def generate_selfplay(
    config: ChainConfig,
    camera: CameraModel,
    style: RenderStyle,
    episodes: int,
    steps_per_episode: int,
    action_law: str = "uniform",
    rho: float = 0.0,
    delta_max: float = DELTA_MAX_DEFAULT,
    seed: int = 0,
    channels: int = 1,
    out_path: str | None = None,
) -> Dataset:
    """Random-motion episodes rendered into transition records.

    Episodes start at uniform-random feasible q; actions follow the
    chosen law and are clamped so states respect joint limits. The
    stored delta_a is the effective (post-clamp) increment, so stored
    flow always equals the oracle flow of (state_q, delta_a). Fully
    reproducible from the seed; per-episode RNG streams keep the bytes
    independent of any episode-level parallelism.
    """
    if episodes < 1 or steps_per_episode < 1:
        raise ValueError("episodes and steps_per_episode must be >= 1")
    h, w = camera.image_size
    n = config.n_joints
    dtype = record_dtype(h, w, channels, n)
    lo, hi = config.joint_limits[:, 0], config.joint_limits[:, 1]

    manifest = DatasetManifest(
        record_count=episodes * steps_per_episode,
        episodes=episodes,
        steps_per_episode=steps_per_episode,
        action_law=action_law,
        rho=rho,
        delta_max=delta_max,
        seed=seed,
    )

    writer = open(out_path, "wb") if out_path else None
    if writer:
        writer.write(_HEADER.pack(MAGIC, FORMAT_VERSION, h, w, channels, n, manifest.record_count))
    chunks = []
    for e in range(episodes):
        rng = _episode_rng(seed, e)
        q = rng.uniform(lo, hi)
        deltas = _draw_actions(rng, steps_per_episode, n, action_law, rho, delta_max)
        block = np.empty(steps_per_episode, dtype=dtype)
        obs = render(config, camera, style, ChainState(q), channels).astype(np.float32)
        for t in range(steps_per_episode):
            q_next = clamp_state(config, q + deltas[t]).q
            effective = q_next - q
            fl = flow_between_states(config, camera, ChainState(q), ChainState(q_next))
            obs_next = render(config, camera, style, ChainState(q_next), channels).astype(np.float32)
            rec = block[t]
            rec["o_t"] = obs
            rec["delta_a"] = effective.astype(np.float32)
            rec["o_next"] = obs_next
            rec["flow"] = fl.vectors.astype(np.float32)
            rec["valid"] = fl.valid.astype(np.uint8)
            rec["occluded"] = fl.occluded.astype(np.uint8)
            rec["state_q"] = q.astype(np.float32)
            q, obs = q_next, obs_next
        if writer:
            writer.write(block.tobytes())
        else:
            chunks.append(block)

    if writer:
        writer.close()
        manifest.shards = [(os.path.basename(out_path), _HEADER.size, manifest.record_count)]
        write_manifest(manifest, config, camera, style, None, _manifest_path(out_path))
        base = np.memmap(
            out_path, dtype=dtype, mode="r", offset=_HEADER.size, shape=(manifest.record_count,)
        )
    else:
        base = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]

    episode_ids = np.repeat(np.arange(episodes), steps_per_episode)
    return Dataset(base, np.arange(len(base)), episode_ids, config, camera, style, manifest)


def split(dataset: Dataset, train_fraction: float, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Episode-level split: no episode contributes to both halves."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    episodes = np.unique(dataset.episode_ids)
    n_train = int(round(train_fraction * episodes.size))
    if n_train == 0 or n_train == episodes.size:
        raise ValueError("degenerate split: one side would be empty")
    order = np.random.default_rng(seed).permutation(episodes)
    in_train = np.isin(dataset.episode_ids, order[:n_train])
    return dataset.subset(np.flatnonzero(in_train)), dataset.subset(np.flatnonzero(~in_train))


def _manifest_path(data_path: str) -> str:
    return data_path + ".manifest.txt"


def write_manifest(
    manifest: DatasetManifest,
    config: ChainConfig,
    camera: CameraModel,
    style: RenderStyle,
    episode_ids: np.ndarray | None,
    path: str,
) -> None:
    manifest.validate()
    msec = {
        "format_version": manifest.format_version,
        "record_count": manifest.record_count,
        "episodes": manifest.episodes,
        "steps_per_episode": manifest.steps_per_episode,
        "action_law": manifest.action_law,
        "rho": manifest.rho,
        "delta_max": manifest.delta_max,
        "seed": manifest.seed,
    }
    if episode_ids is not None:
        msec["episode_ids"] = episode_ids
    sections = {
        "manifest": msec,
        "shards": {
            f"shard_{i}": f"{p}, {off}, {cnt}" for i, (p, off, cnt) in enumerate(manifest.shards)
        },
        "chain": configio.chain_to_section(config),
        "camera": configio.camera_to_section(camera),
        "style": configio.style_to_section(style),
    }
    with open(path, "w", encoding="utf-8") as f:
        f.write(configio.format_sections(sections))


def write_dataset(dataset: Dataset, path: str, chunk: int = 256) -> None:
    """Persist this view's records and manifest."""
    rec0 = dataset.base[dataset.rows[0]] if len(dataset) else dataset.base[0]
    h, w, c = rec0["o_t"].shape
    n = rec0["delta_a"].shape[0]
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, h, w, c, n, len(dataset)))
        for start in range(0, len(dataset), chunk):
            f.write(dataset.take(np.arange(start, min(start + chunk, len(dataset)))).tobytes())
    m = dataset.manifest
    manifest = DatasetManifest(
        record_count=len(dataset),
        episodes=m.episodes,
        steps_per_episode=m.steps_per_episode,
        action_law=m.action_law,
        rho=m.rho,
        delta_max=m.delta_max,
        seed=m.seed,
        shards=[(os.path.basename(path), _HEADER.size, len(dataset))],
    )
    # subsets lose the regular episode structure; persist ids explicitly then
    regular = len(dataset) == m.episodes * m.steps_per_episode and np.array_equal(
        dataset.episode_ids, np.repeat(np.arange(m.episodes), m.steps_per_episode)
    )
    write_manifest(
        manifest,
        dataset.config,
        dataset.camera,
        dataset.style,
        None if regular else dataset.episode_ids,
        _manifest_path(path),
    )


def read_dataset(path: str, mmap: bool = True) -> Dataset:
    with open(path, "rb") as f:
        magic, version, h, w, c, n, count = _HEADER.unpack(f.read(_HEADER.size))
    if magic != MAGIC:
        raise ValueError(f"{path}: not a JIDM dataset")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    dtype = record_dtype(h, w, c, n)
    if mmap:
        base = np.memmap(path, dtype=dtype, mode="r", offset=_HEADER.size, shape=(count,))
    else:
        base = np.fromfile(path, dtype=dtype, count=count, offset=_HEADER.size)

    sections = configio.parse_sections(open(_manifest_path(path), encoding="utf-8").read())
    m = sections["manifest"]
    manifest = DatasetManifest(
        record_count=int(m["record_count"]),
        episodes=int(m["episodes"]),
        steps_per_episode=int(m["steps_per_episode"]),
        action_law=m["action_law"],
        rho=float(m["rho"]),
        delta_max=float(m["delta_max"]),
        seed=int(m["seed"]),
        format_version=int(m["format_version"]),
        shards=[
            (p.strip(), int(off), int(cnt))
            for p, off, cnt in (v.split(",") for v in sections.get("shards", {}).values())
        ],
    )
    manifest.validate()
    if manifest.record_count != count:
        raise ValueError(f"{path}: manifest record_count disagrees with header")
    if "episode_ids" in m:
        episode_ids = np.array(configio.parse_ints(m["episode_ids"]))
    else:
        episode_ids = np.repeat(np.arange(manifest.episodes), manifest.steps_per_episode)
    if episode_ids.shape[0] != count:
        raise ValueError(f"{path}: episode structure disagrees with record count")
    return Dataset(
        base=base,
        rows=np.arange(count),
        episode_ids=episode_ids,
        config=configio.chain_from_section(sections["chain"]),
        camera=configio.camera_from_section(sections["camera"]),
        style=configio.style_from_section(sections["style"]),
        manifest=manifest,
    )
