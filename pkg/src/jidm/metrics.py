"""Append-only metrics table: comma-separated text with a fixed header."""

import os
from dataclasses import dataclass

import numpy as np

HEADER = [
    "experiment_id",
    "model_kind",
    "dof",
    "budget",
    "seed",
    "action_mse",
    "flow_epe",
    "success_rate",
    "progress",
    "wall_time",
]


@dataclass
class MetricsRow:
    experiment_id: str
    model_kind: str
    dof: int
    budget: int
    seed: int
    action_mse: float = float("nan")
    flow_epe: float = float("nan")
    success_rate: float = float("nan")
    progress: float = float("nan")
    wall_time: float = float("nan")

    def to_line(self) -> str:
        vals = [
            self.experiment_id,
            self.model_kind,
            str(self.dof),
            str(self.budget),
            str(self.seed),
            repr(float(self.action_mse)),
            repr(float(self.flow_epe)),
            repr(float(self.success_rate)),
            repr(float(self.progress)),
            repr(float(self.wall_time)),
        ]
        return ",".join(vals)


def append_rows(path: str, rows: list[MetricsRow]) -> None:
    """Raw rows are append-only; aggregation happens at plot/report time."""
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8") as f:
        if fresh:
            f.write(",".join(HEADER) + "\n")
        for row in rows:
            f.write(row.to_line() + "\n")


def read_rows(path: str) -> list[MetricsRow]:
    with open(path, encoding="utf-8") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or lines[0].split(",") != HEADER:
        raise ValueError(f"{path}: missing or wrong metrics header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        rows.append(
            MetricsRow(
                experiment_id=parts[0],
                model_kind=parts[1],
                dof=int(parts[2]),
                budget=int(parts[3]),
                seed=int(parts[4]),
                action_mse=float(parts[5]),
                flow_epe=float(parts[6]),
                success_rate=float(parts[7]),
                progress=float(parts[8]),
                wall_time=float(parts[9]),
            )
        )
    return rows


def median_over_seeds(rows: list[MetricsRow], key: str, value: str = "action_mse") -> dict:
    """Median of a metric grouped by (model_kind, <key>)."""
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault((r.model_kind, getattr(r, key)), []).append(getattr(r, value))
    return {k: float(np.median(v)) for k, v in groups.items()}
