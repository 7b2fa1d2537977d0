"""Typed run configuration over the shared sectioned text format.

Every module's knobs live in a named section; unknown sections or keys
are rejected so config typos fail loudly. `defaults_text()` prints the
full default configuration.
"""

from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import configio
from .control import ControllerConfig
from .flow import FlowNoiseModel
from .inversion import RidgeParams
from .kinematics import CameraModel, ChainConfig, DELTA_MAX_DEFAULT, default_chain, fit_camera
from .models import TrainConfig
from .render import RenderStyle, default_style


@dataclass
class DataParams:
    episodes: int = 100
    steps_per_episode: int = 20
    action_law: str = "uniform"
    rho: float = 0.0
    delta_max: float = DELTA_MAX_DEFAULT
    channels: int = 1
    train_fraction: float = 0.8


@dataclass
class PlannerParams:
    mode: str = "oracle"
    delta_plan: float = DELTA_MAX_DEFAULT
    noise_sigma: float = 0.03


@dataclass
class GoalParams:
    kind: str = "tip_pixel"
    tolerance: float = 2.0
    min_pixels: float = 10.0
    margin: float = 0.75


@dataclass
class SweepParams:
    dofs: list[int] = field(default_factory=lambda: [2, 3, 5, 8, 12, 16])
    budgets: list[int] = field(default_factory=lambda: [250, 500, 1000, 2000, 4000, 8000])
    kinds: list[str] = field(default_factory=lambda: ["jidm", "unipi", "didm_flow"])
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    fixed_dof: int = 5
    fixed_budget: int = 2000


@dataclass
class RunConfig:
    seed: int = 0
    out_dir: str = "out"
    n_joints: int = 5
    image_size: tuple[int, int] = (128, 128)
    chain: ChainConfig | None = None        # default chain of n_joints if None
    camera: CameraModel | None = None       # fit to the chain if None
    style: RenderStyle | None = None        # default style if None
    data: DataParams = field(default_factory=DataParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    ridge: RidgeParams = field(default_factory=RidgeParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    planner: PlannerParams = field(default_factory=PlannerParams)
    goal: GoalParams = field(default_factory=GoalParams)
    sweep: SweepParams = field(default_factory=SweepParams)

    def resolved(self) -> tuple[ChainConfig, CameraModel, RenderStyle]:
        chain = self.chain if self.chain is not None else default_chain(self.n_joints)
        camera = self.camera if self.camera is not None else fit_camera(chain, self.image_size)
        style = self.style if self.style is not None else default_style(chain.n_joints)
        return chain, camera, style


_SIMPLE_SECTIONS = {
    "data": (DataParams, "data"),
    "planner": (PlannerParams, "planner"),
    "goal": (GoalParams, "goal"),
    "sweep": (SweepParams, "sweep"),
}

_INT_LIST_KEYS = {"dofs", "budgets", "seeds"}
_STR_LIST_KEYS = {"kinds"}


def _coerce(value: str, spec_type):
    if spec_type is bool:
        return configio.parse_bool(value)
    if spec_type is int:
        return int(value)
    if spec_type is float:
        return float(value)
    return value


def _parse_dataclass(cls, kv: dict[str, str], section: str):
    known = {f.name: f for f in fields(cls)}
    out = {}
    for key, value in kv.items():
        if key not in known:
            raise ValueError(f"unknown key {key!r} in section [{section}]")
        f = known[key]
        if key in _INT_LIST_KEYS:
            out[key] = configio.parse_ints(value)
        elif key in _STR_LIST_KEYS:
            out[key] = [v.strip() for v in value.split(",")]
        else:
            out[key] = _coerce(value, f.type if isinstance(f.type, type) else type(getattr(cls(), key)))
    return cls(**{**{f.name: getattr(cls(), f.name) for f in fields(cls)}, **out})


def parse_run_config(text: str) -> RunConfig:
    sections = configio.parse_sections(text)
    cfg = RunConfig()
    for name, kv in sections.items():
        if name == "run":
            for key, value in kv.items():
                if key == "seed":
                    cfg.seed = int(value)
                elif key == "out_dir":
                    cfg.out_dir = value
                elif key == "n_joints":
                    cfg.n_joints = int(value)
                elif key == "image_height":
                    cfg.image_size = (int(value), cfg.image_size[1])
                elif key == "image_width":
                    cfg.image_size = (cfg.image_size[0], int(value))
                else:
                    raise ValueError(f"unknown key {key!r} in section [run]")
        elif name == "chain":
            cfg.chain = configio.chain_from_section(kv)
        elif name == "camera":
            cfg.camera = configio.camera_from_section(kv)
        elif name == "style":
            cfg.style = configio.style_from_section(kv)
        elif name == "train":
            cfg.train = _parse_dataclass(TrainConfig, kv, name)
        elif name == "ridge":
            cfg.ridge = _parse_dataclass(RidgeParams, kv, name)
        elif name == "controller":
            allowed = {f.name for f in fields(ControllerConfig)} - {"replan_noise"}
            noise_keys = {"replan_noise_sigma", "replan_noise_dropout", "replan_noise_seed"}
            plain = {k: v for k, v in kv.items() if k in allowed}
            unknown = set(kv) - allowed - noise_keys
            if unknown:
                raise ValueError(f"unknown keys {sorted(unknown)} in section [controller]")
            base = _parse_dataclass(ControllerConfig, plain, name)
            if noise_keys & set(kv):
                base = replace(
                    base,
                    replan_noise=FlowNoiseModel(
                        sigma_pixels=float(kv.get("replan_noise_sigma", 0.0)),
                        dropout_rate=float(kv.get("replan_noise_dropout", 0.0)),
                        seed=int(kv.get("replan_noise_seed", 0)),
                    ),
                )
            cfg.controller = base
        elif name in _SIMPLE_SECTIONS:
            cls, attr = _SIMPLE_SECTIONS[name]
            setattr(cfg, attr, _parse_dataclass(cls, kv, name))
        else:
            raise ValueError(f"unknown section [{name}]")
    return cfg


def load_run_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as f:
        return parse_run_config(f.read())


def _dataclass_section(obj, skip=()) -> dict:
    out = {}
    for f in fields(obj):
        if f.name in skip:
            continue
        out[f.name] = getattr(obj, f.name)
    return out


def defaults_text() -> str:
    cfg = RunConfig()
    chain, camera, style = cfg.resolved()
    sections = {
        "run": {
            "seed": cfg.seed,
            "out_dir": cfg.out_dir,
            "n_joints": cfg.n_joints,
            "image_height": cfg.image_size[0],
            "image_width": cfg.image_size[1],
        },
        "chain": configio.chain_to_section(chain),
        "camera": configio.camera_to_section(camera),
        "style": configio.style_to_section(style),
        "data": _dataclass_section(cfg.data),
        "train": _dataclass_section(cfg.train),
        "ridge": _dataclass_section(cfg.ridge),
        "controller": _dataclass_section(cfg.controller, skip=("replan_noise",)),
        "planner": _dataclass_section(cfg.planner),
        "goal": _dataclass_section(cfg.goal),
        "sweep": _dataclass_section(cfg.sweep),
    }
    return configio.format_sections(sections)
