"""Command-line front end: data generation, training, evaluation, rollouts,
sweeps, and plots. Every command is reproducible from (config bytes, seed)."""

import argparse
import os
import sys
import time

import numpy as np

from . import runconfig
from .control import (
    ControllerConfig,
    GoalSpec,
    LearnedTranslator,
    OracleTranslator,
    ScriptedPlanner,
    chunk_sweep,
    rollout,
    sample_reach_goal,
)
from .data import generate_selfplay, read_dataset, split
from .kinematics import ChainState
from .metrics import MetricsRow, append_rows, median_over_seeds, read_rows
from .models import (
    KIND_JIDM,
    eval_action_mse,
    eval_flow_epe,
    load_checkpoint,
    make_model,
    save_checkpoint,
    train,
)
from .plot import render_plot
from .sweeps import data_efficiency_summary, dof_gap_curve, sweep_data, sweep_dof


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def cmd_defaults(args) -> int:
    print(runconfig.defaults_text(), end="")
    return 0


def cmd_gen_data(args) -> int:
    cfg = runconfig.load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    chain, camera, style = cfg.resolved()
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    ds = generate_selfplay(
        chain,
        camera,
        style,
        episodes=cfg.data.episodes,
        steps_per_episode=cfg.data.steps_per_episode,
        action_law=cfg.data.action_law,
        rho=cfg.data.rho,
        delta_max=cfg.data.delta_max,
        seed=cfg.seed,
        channels=cfg.data.channels,
        out_path=args.out,
    )
    if args.dump_frames:
        from .render import save_ppm

        rec = ds.record(0)
        save_ppm(rec["o_t"].astype(np.float64), args.out + ".frame0.ppm")
    print(f"wrote {len(ds)} records to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = runconfig.load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    ds = read_dataset(args.data)
    train_ds, _ = split(ds, cfg.data.train_fraction, seed=cfg.seed)
    model = make_model(
        args.kind, ds.n_joints, channels=cfg.data.channels, seed=cfg.seed
    )
    from dataclasses import replace

    t0 = time.time()
    trained, curve = train(model, train_ds, replace(cfg.train, seed=cfg.seed))
    save_checkpoint(args.out, trained)
    with open(args.out + ".loss.csv", "w", encoding="utf-8") as f:
        f.write("step,loss\n")
        for step, loss in curve:
            f.write(f"{step},{loss!r}\n")
    print(f"trained {args.kind} for {cfg.train.steps} steps in {time.time() - t0:.1f}s -> {args.out}")
    return 0


def cmd_eval_idm(args) -> int:
    cfg = runconfig.load_run_config(args.config)
    model = load_checkpoint(args.checkpoint)
    ds = read_dataset(args.data)
    _, val = split(ds, cfg.data.train_fraction, seed=cfg.seed if args.seed is None else args.seed)
    t0 = time.time()
    lam = args.lam if args.lam is not None else cfg.ridge.lam
    row = MetricsRow(
        experiment_id=args.experiment_id or os.path.basename(args.checkpoint),
        model_kind=model.kind,
        dof=ds.n_joints,
        budget=len(ds),
        seed=cfg.seed if args.seed is None else args.seed,
        action_mse=eval_action_mse(model, val, lam),
        flow_epe=eval_flow_epe(model, val) if model.kind == KIND_JIDM else float("nan"),
        wall_time=time.time() - t0,
    )
    append_rows(args.out, [row])
    print(f"action_mse={row.action_mse!r} flow_epe={row.flow_epe!r}")
    return 0


def _build_translator(cfg, chain, camera, checkpoint):
    if checkpoint == "oracle":
        return OracleTranslator(chain, camera, cfg.ridge, cfg.controller.delta_max)
    model = load_checkpoint(checkpoint)
    if model.kind != KIND_JIDM:
        raise ValueError("rollouts need a field-model checkpoint or 'oracle'")
    return LearnedTranslator(model, chain, camera, cfg.ridge, cfg.controller.delta_max)


def cmd_rollout(args) -> int:
    cfg = runconfig.load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    chain, camera, style = cfg.resolved()
    translator = _build_translator(cfg, chain, camera, args.checkpoint)
    os.makedirs(args.out, exist_ok=True)
    rows = []
    successes = 0
    for episode in range(args.episodes):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(7, episode))
        )
        start, goal = sample_reach_goal(
            chain,
            camera,
            rng,
            tolerance=cfg.goal.tolerance,
            margin=cfg.goal.margin,
            min_pixels=cfg.goal.min_pixels,
        )
        planner = ScriptedPlanner(
            chain,
            camera,
            style,
            mode=cfg.planner.mode,
            delta_plan=cfg.planner.delta_plan,
            noise_sigma=cfg.planner.noise_sigma,
            seed=int(rng.integers(0, 2**63 - 1)),
        )
        log = rollout(planner, translator, chain, camera, style, start, goal, cfg.controller)
        successes += int(log.success)
        with open(os.path.join(args.out, f"rollout_{episode:03d}.csv"), "w", encoding="utf-8") as f:
            f.write(log.to_csv())
        rows.append(
            MetricsRow(
                experiment_id=f"rollout_{episode:03d}",
                model_kind="oracle" if args.checkpoint == "oracle" else KIND_JIDM,
                dof=chain.n_joints,
                budget=0,
                seed=cfg.seed,
                success_rate=float(log.success),
                progress=log.progress,
                wall_time=float(log.n_steps),
            )
        )
    append_rows(os.path.join(args.out, "metrics.csv"), rows)
    print(f"success {successes}/{args.episodes}")
    return 0


def _sweep_common(args, sweep_fn, label):
    cfg = runconfig.load_run_config(args.config)
    if args.out is not None:
        cfg.out_dir = args.out
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows, errors = sweep_fn(cfg, args)
    metrics_path = os.path.join(cfg.out_dir, f"{label}_metrics.csv")
    append_rows(metrics_path, rows)
    for cell, err in errors:
        print(f"cell {cell} failed:\n{err}", file=sys.stderr)
    print(f"wrote {len(rows)} rows to {metrics_path} ({len(errors)} failed cells)")
    return rows, cfg, metrics_path


def cmd_sweep_dof(args) -> int:
    def fn(cfg, a):
        return sweep_dof(
            cfg,
            dofs=a.dofs and [int(x) for x in a.dofs.split(",")],
            budget=a.budget,
            kinds=a.kinds and a.kinds.split(","),
            seeds=a.seeds and [int(x) for x in a.seeds.split(",")],
            jobs=a.jobs,
        )

    rows, cfg, _ = _sweep_common(args, fn, "sweep_dof")
    med = median_over_seeds(rows, "dof")
    kinds = sorted({r.model_kind for r in rows})
    series = []
    for kind in kinds:
        pts = sorted((d, v) for (k, d), v in med.items() if k == kind)
        series.append((kind, [p[0] for p in pts], [p[1] for p in pts]))
    svg = render_plot(series, title="held-out action MSE vs DoF", x_label="DoF", y_label="MSE")
    plot_path = os.path.join(cfg.out_dir, "sweep_dof.svg")
    open(plot_path, "w", encoding="utf-8").write(svg)
    gaps = dof_gap_curve(rows)
    print("gap curve (best direct - field):", " ".join(f"{d}:{g:.5f}" for d, g in gaps))
    return 0


def cmd_sweep_data(args) -> int:
    def fn(cfg, a):
        return sweep_data(
            cfg,
            budgets=a.budgets and [int(x) for x in a.budgets.split(",")],
            dof=a.dof,
            kinds=a.kinds and a.kinds.split(","),
            seeds=a.seeds and [int(x) for x in a.seeds.split(",")],
            jobs=a.jobs,
        )

    rows, cfg, _ = _sweep_common(args, fn, "sweep_data")
    med = median_over_seeds(rows, "budget")
    kinds = sorted({r.model_kind for r in rows})
    series = []
    for kind in kinds:
        pts = sorted((b, v) for (k, b), v in med.items() if k == kind)
        series.append((kind, [p[0] for p in pts], [p[1] for p in pts]))
    svg = render_plot(
        series,
        title="held-out action MSE vs data budget",
        x_label="transitions",
        y_label="MSE",
        log_x=True,
    )
    open(os.path.join(cfg.out_dir, "sweep_data.svg"), "w", encoding="utf-8").write(svg)
    print("data efficiency:", data_efficiency_summary(rows))
    return 0


def cmd_chunk_sweep(args) -> int:
    cfg = runconfig.load_run_config(args.config)
    chain, camera, style = cfg.resolved()
    translator = _build_translator(cfg, chain, camera, args.checkpoint)

    def planner_factory(seed):
        return ScriptedPlanner(
            chain,
            camera,
            style,
            mode=cfg.planner.mode,
            delta_plan=cfg.planner.delta_plan,
            noise_sigma=cfg.planner.noise_sigma,
            seed=seed,
        )

    k_values = [int(x) for x in args.k_values.split(",")]
    rows = chunk_sweep(
        planner_factory,
        translator,
        chain,
        camera,
        style,
        cfg.controller,
        k_values,
        trials=args.trials,
        seed=cfg.seed,
    )
    for row in rows:
        print(
            f"K={row['k']} success={row['success_rate']:.3f} "
            f"progress={row['progress']:.3f} plans={row['plans_issued']:.1f}"
        )
    return 0


def cmd_plot(args) -> int:
    rows = read_rows(args.metrics)
    filters = {}
    for flt in args.filter or []:
        key, _, value = flt.partition("=")
        filters[key] = value
    rows = [
        r
        for r in rows
        if all(str(getattr(r, k)) == v for k, v in filters.items())
    ]
    if not rows:
        raise ValueError("empty selection after filters")
    groups = sorted({getattr(r, args.group) for r in rows})
    series = []
    for g in groups:
        pts = sorted(
            (getattr(r, args.x), getattr(r, args.y)) for r in rows if getattr(r, args.group) == g
        )
        series.append((str(g), [p[0] for p in pts], [p[1] for p in pts]))
    svg = render_plot(
        series,
        title=args.title or f"{args.y} vs {args.x}",
        x_label=args.x,
        y_label=args.y,
        log_x=args.logx,
        log_y=args.logy,
    )
    open(args.out, "w", encoding="utf-8").write(svg)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jidm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("defaults", help="print the full default config").set_defaults(fn=cmd_defaults)

    g = sub.add_parser("gen-data", help="generate a self-play dataset")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--dump-frames", action="store_true")
    g.set_defaults(fn=cmd_gen_data)

    t = sub.add_parser("train", help="train a model on a dataset")
    t.add_argument("--config", required=True)
    t.add_argument("--kind", required=True, choices=["jidm", "unipi", "didm_flow"])
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int)
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval-idm", help="held-out action reconstruction metrics")
    e.add_argument("--config", required=True)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--lam", type=float)
    e.add_argument("--out", required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--experiment-id")
    e.set_defaults(fn=cmd_eval_idm)

    r = sub.add_parser("rollout", help="closed-loop reaching episodes")
    r.add_argument("--config", required=True)
    r.add_argument("--checkpoint", required=True, help="checkpoint path or 'oracle'")
    r.add_argument("--episodes", type=int, default=10)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int)
    r.set_defaults(fn=cmd_rollout)

    sd = sub.add_parser("sweep-dof", help="train/eval grid over DoF")
    sd.add_argument("--config", required=True)
    sd.add_argument("--dofs")
    sd.add_argument("--budget", type=int)
    sd.add_argument("--kinds")
    sd.add_argument("--seeds")
    sd.add_argument("--jobs", type=int, default=1)
    sd.add_argument("--out")
    sd.set_defaults(fn=cmd_sweep_dof)

    sb = sub.add_parser("sweep-data", help="train/eval grid over data budget")
    sb.add_argument("--config", required=True)
    sb.add_argument("--budgets")
    sb.add_argument("--dof", type=int)
    sb.add_argument("--kinds")
    sb.add_argument("--seeds")
    sb.add_argument("--jobs", type=int, default=1)
    sb.add_argument("--out")
    sb.set_defaults(fn=cmd_sweep_data)

    cs = sub.add_parser("chunk-sweep", help="success rate vs commit length K")
    cs.add_argument("--config", required=True)
    cs.add_argument("--checkpoint", default="oracle")
    cs.add_argument("--k-values", default="1,2,4")
    cs.add_argument("--trials", type=int, default=100)
    cs.set_defaults(fn=cmd_chunk_sweep)

    pl = sub.add_parser("plot", help="plot metrics columns as SVG")
    pl.add_argument("--metrics", required=True)
    pl.add_argument("--x", required=True)
    pl.add_argument("--y", required=True)
    pl.add_argument("--group", default="model_kind")
    pl.add_argument("--filter", action="append")
    pl.add_argument("--logx", action="store_true")
    pl.add_argument("--logy", action="store_true")
    pl.add_argument("--title")
    pl.add_argument("--out", required=True)
    pl.set_defaults(fn=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, RuntimeError) as err:
        return _fail(str(err))


if __name__ == "__main__":
    sys.exit(main())
