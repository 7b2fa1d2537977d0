"""Experiment cells and sweeps: train/eval grids over DoF and data budget.

A cell = (kind, dof, budget, seed). Datasets are generated once per
(dof, budget, seed) and shared across model kinds; checkpoints and
metrics rows land in the output directory. Cells can run in a process
pool; results merge deterministically by cell key.
"""

import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .data import generate_selfplay, read_dataset, split
from .kinematics import default_chain, fit_camera
from .metrics import MetricsRow
from .models import (
    KIND_JIDM,
    eval_action_mse,
    eval_flow_epe,
    make_model,
    save_checkpoint,
    train,
)
from .render import default_style


def dataset_path(out_dir: str, dof: int, budget: int, seed: int) -> str:
    return os.path.join(out_dir, f"data_dof{dof}_b{budget}_s{seed}.bin")


def ensure_dataset(run_cfg, dof: int, budget: int, seed: int) -> str:
    """Generate (or reuse) the self-play dataset for one grid point."""
    path = dataset_path(run_cfg.out_dir, dof, budget, seed)
    if os.path.exists(path):
        return path
    chain = default_chain(dof)
    camera = fit_camera(chain, run_cfg.image_size)
    style = default_style(dof)
    steps = run_cfg.data.steps_per_episode
    episodes = max(2, int(np.ceil(budget / steps)))
    generate_selfplay(
        chain,
        camera,
        style,
        episodes=episodes,
        steps_per_episode=steps,
        action_law=run_cfg.data.action_law,
        rho=run_cfg.data.rho,
        delta_max=run_cfg.data.delta_max,
        seed=seed * 100003 + dof * 31 + budget,
        channels=run_cfg.data.channels,
        out_path=path,
    )
    return path


def run_cell(run_cfg, kind: str, dof: int, budget: int, seed: int) -> MetricsRow:
    """Train one model on one dataset and report held-out metrics."""
    t0 = time.time()
    path = ensure_dataset(run_cfg, dof, budget, seed)
    ds = read_dataset(path)
    usable = ds.subset(np.arange(min(budget, len(ds))))
    train_ds, val_ds = split(usable, run_cfg.data.train_fraction, seed=seed)
    model = make_model(kind, dof, channels=run_cfg.data.channels, seed=seed)
    cfg = replace(run_cfg.train, seed=seed)
    trained, _ = train(model, train_ds, cfg)
    ckpt = os.path.join(run_cfg.out_dir, f"model_{kind}_dof{dof}_b{budget}_s{seed}.ckpt")
    save_checkpoint(ckpt, trained)
    row = MetricsRow(
        experiment_id=f"{kind}_dof{dof}_b{budget}_s{seed}",
        model_kind=kind,
        dof=dof,
        budget=budget,
        seed=seed,
        action_mse=eval_action_mse(trained, val_ds, run_cfg.ridge.lam),
        flow_epe=eval_flow_epe(trained, val_ds) if kind == KIND_JIDM else float("nan"),
        wall_time=time.time() - t0,
    )
    return row


def _cell_wrapper(args):
    run_cfg, kind, dof, budget, seed = args
    try:
        return run_cell(run_cfg, kind, dof, budget, seed), None
    except Exception:  # cell failure is recorded; the sweep continues
        return (
            MetricsRow(
                experiment_id=f"{kind}_dof{dof}_b{budget}_s{seed}",
                model_kind=kind,
                dof=dof,
                budget=budget,
                seed=seed,
            ),
            traceback.format_exc(),
        )


def run_cells(run_cfg, cells: list[tuple], jobs: int = 1):
    """Execute cells, in a process pool when jobs > 1; deterministic order."""
    os.makedirs(run_cfg.out_dir, exist_ok=True)
    args = [(run_cfg, kind, dof, budget, seed) for kind, dof, budget, seed in cells]
    if jobs > 1:
        # pre-generate datasets serially so parallel cells never race on files
        for kind, dof, budget, seed in cells:
            ensure_dataset(run_cfg, dof, budget, seed)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell_wrapper, args))
    else:
        results = [_cell_wrapper(a) for a in args]
    rows, errors = [], []
    for (row, err), cell in zip(results, cells):
        rows.append(row)
        if err:
            errors.append((cell, err))
    rows.sort(key=lambda r: (r.model_kind, r.dof, r.budget, r.seed))
    return rows, errors


def sweep_dof(run_cfg, dofs=None, budget=None, kinds=None, seeds=None, jobs: int = 1):
    sw = run_cfg.sweep
    dofs = dofs or sw.dofs
    budget = budget or sw.fixed_budget
    kinds = kinds or sw.kinds
    seeds = seeds if seeds is not None else sw.seeds
    cells = [(k, d, budget, s) for k in kinds for d in dofs for s in seeds]
    return run_cells(run_cfg, cells, jobs)


def sweep_data(run_cfg, budgets=None, dof=None, kinds=None, seeds=None, jobs: int = 1):
    sw = run_cfg.sweep
    budgets = budgets or sw.budgets
    dof = dof or sw.fixed_dof
    kinds = kinds or sw.kinds
    seeds = seeds if seeds is not None else sw.seeds
    cells = [(k, dof, b, s) for k in kinds for b in budgets for s in seeds]
    return run_cells(run_cfg, cells, jobs)


def dof_gap_curve(rows) -> list[tuple[int, float]]:
    """Per-DoF gap: (best direct-IDM median MSE) - (field model median MSE)."""
    from .metrics import median_over_seeds

    med = median_over_seeds(rows, "dof")
    dofs = sorted({r.dof for r in rows})
    out = []
    for d in dofs:
        direct = [v for (k, dd), v in med.items() if dd == d and k != KIND_JIDM]
        ours = med.get((KIND_JIDM, d))
        if direct and ours is not None:
            out.append((d, min(direct) - ours))
    return out


def data_efficiency_summary(rows) -> dict:
    """Smallest field-model budget whose median MSE beats the best direct
    baseline at the largest budget."""
    from .metrics import median_over_seeds

    med = median_over_seeds(rows, "budget")
    budgets = sorted({r.budget for r in rows})
    largest = budgets[-1]
    direct_best = min(
        v for (k, b), v in med.items() if b == largest and k != KIND_JIDM
    )
    crossing = None
    for b in budgets:
        ours = med.get((KIND_JIDM, b))
        if ours is not None and ours <= direct_best:
            crossing = b
            break
    return {"direct_best_at_largest": direct_best, "jidm_matching_budget": crossing}
