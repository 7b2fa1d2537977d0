"""Shared sectioned text format: `[section]` headers with `key = value` lines.

Used for run configs and dataset manifests. Parsing is strict about
structure; semantic key validation happens at the consumer.
"""

import numpy as np

from .kinematics import CameraModel, ChainConfig
from .render import RenderStyle


def format_sections(sections: dict[str, dict]) -> str:
    lines = []
    for name, kv in sections.items():
        lines.append(f"[{name}]")
        for key, value in kv.items():
            lines.append(f"{key} = {_format_value(value)}")
        lines.append("")
    return "\n".join(lines)


def parse_sections(text: str) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise ValueError(f"line {lineno}: empty section name")
            sections.setdefault(current, {})
        else:
            if current is None:
                raise ValueError(f"line {lineno}: key outside any [section]")
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            sections[current][key.strip()] = value.strip()
    return sections


def _format_value(value) -> str:
    if isinstance(value, (list, tuple, np.ndarray)):
        return ", ".join(_format_value(v) for v in np.asarray(value).ravel().tolist())
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_floats(value: str) -> np.ndarray:
    return np.array([float(v) for v in value.split(",")], dtype=np.float64)


def parse_ints(value: str) -> list[int]:
    return [int(v) for v in value.split(",")]


def parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


# Section converters for the geometry types that persist in manifests.

def chain_to_section(config: ChainConfig) -> dict:
    return {
        "n_joints": config.n_joints,
        "link_lengths": config.link_lengths,
        "link_radii": config.link_radii,
        "joint_limits_lo": config.joint_limits[:, 0],
        "joint_limits_hi": config.joint_limits[:, 1],
        "base_position": config.base_position,
    }


def chain_from_section(kv: dict[str, str]) -> ChainConfig:
    n = int(kv["n_joints"])
    lengths = parse_floats(kv["link_lengths"])
    if lengths.shape[0] != n:
        raise ValueError("n_joints does not match link_lengths")
    return ChainConfig(
        link_lengths=lengths,
        link_radii=parse_floats(kv["link_radii"]),
        joint_limits=np.stack(
            [parse_floats(kv["joint_limits_lo"]), parse_floats(kv["joint_limits_hi"])], axis=1
        ),
        base_position=parse_floats(kv["base_position"]),
    )


def camera_to_section(camera: CameraModel) -> dict:
    return {
        "scale": camera.scale,
        "offset": camera.offset,
        "image_height": camera.image_size[0],
        "image_width": camera.image_size[1],
    }


def camera_from_section(kv: dict[str, str]) -> CameraModel:
    return CameraModel(
        scale=float(kv["scale"]),
        offset=parse_floats(kv["offset"]),
        image_size=(int(kv["image_height"]), int(kv["image_width"])),
    )


def style_to_section(style: RenderStyle) -> dict:
    return {
        "per_link_base_intensity": style.per_link_base_intensity,
        "radial_shading_gain": style.radial_shading_gain,
        "background_value": style.background_value,
        "supersample_factor": style.supersample_factor,
    }


def style_from_section(kv: dict[str, str]) -> RenderStyle:
    return RenderStyle(
        per_link_base_intensity=parse_floats(kv["per_link_base_intensity"]),
        radial_shading_gain=float(kv["radial_shading_gain"]),
        background_value=float(kv["background_value"]),
        supersample_factor=int(kv["supersample_factor"]),
    )
