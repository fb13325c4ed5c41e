"""Command-line entry points for the full pipeline."""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import drl as drl_mod
from . import expert as expert_mod
from .config import RunConfig, load_config
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .trajlog import TrajectoryWriter


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hgdrive", description="intersection left-turn decision pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *flags):
        if "seed" in flags:
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if "episodes" in flags:
            p.add_argument("--episodes", type=int, default=None)
        if "config" in flags:
            p.add_argument("--config", default=None, help="INI run configuration")
        if "out" in flags:
            p.add_argument("--out", default=None, help="output path")
        if "checkpoint" in flags:
            p.add_argument("--checkpoint", default=None)

    p = sub.add_parser("collect", help="roll out the scripted demonstrator into a dataset")
    common(p, "config", "seed", "episodes", "out")
    p.add_argument("--source", choices=("scripted", "human"), default="scripted")

    p = sub.add_parser("train-expert", help="supervised training on a demonstration dataset")
    common(p, "config", "seed", "out")
    p.add_argument("--dataset", default=None)
    p.add_argument("--epochs", type=int, default=None)

    p = sub.add_parser("train", help="DDQN training against the simulator")
    common(p, "config", "seed", "episodes", "out")
    p.add_argument("--expert-checkpoint", default=None)
    p.add_argument("--metrics", default=None)
    p.add_argument("--beta-override", type=float, default=None)

    p = sub.add_parser("eval", help="greedy evaluation of a trained checkpoint")
    common(p, "config", "seed", "episodes", "checkpoint", "out")
    p.add_argument("--expert-checkpoint", default=None)
    p.add_argument("--trajectories", default=None, help="optional trajectory log output")

    p = sub.add_parser("serve", help="websocket session service for the browser UI")
    common(p, "config", "seed", "out")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--realtime-factor", type=float, default=1.0)

    p = sub.add_parser("replay", help="stream a trajectory log without simulating")
    common(p, "config")
    p.add_argument("--log", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--realtime-factor", type=float, default=1.0)
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    return cfg


def cmd_collect(args) -> int:
    cfg = _config(args)
    seed = args.seed if args.seed is not None else cfg.expert.seed
    episodes = args.episodes if args.episodes is not None else 100
    out = args.out or cfg.paths.dataset
    records = expert_mod.collect_demonstrations(episodes, seed, cfg.scenario, source=args.source)
    _ensure_parent(out)
    expert_mod.write_dataset(out, records, cfg.scales)
    print(f"wrote {len(records)} demonstrations from {episodes} episodes to {out}")
    return 0


def cmd_train_expert(args) -> int:
    cfg = _config(args)
    dataset = args.dataset or cfg.paths.dataset
    if not os.path.exists(dataset):
        print(f"dataset not found: {dataset}", file=sys.stderr)
        return 1
    records, scales = expert_mod.read_dataset(dataset)
    train_cfg = cfg.expert
    if args.seed is not None:
        train_cfg = dataclasses.replace(train_cfg, seed=args.seed)
    if args.epochs is not None:
        train_cfg = dataclasses.replace(train_cfg, epochs=args.epochs)
    train_split, test_split = expert_mod.split_records(records)
    params, _ = expert_mod.train_expert(train_split, train_cfg, cfg.network, scales, log=print)
    acc = expert_mod.eval_expert_accuracy(params, test_split, scales) if test_split else float("nan")
    out = args.out or cfg.paths.expert_checkpoint
    _ensure_parent(out)
    save_checkpoint(out, params, train_steps=train_cfg.epochs, extra={"held_out_accuracy": acc})
    print(f"expert checkpoint -> {out} (held-out accuracy {acc:.4f})")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    expert_ckpt = args.expert_checkpoint or cfg.paths.expert_checkpoint
    if not os.path.exists(expert_ckpt):
        print(f"expert checkpoint not found: {expert_ckpt}", file=sys.stderr)
        return 1
    drl_cfg = cfg.drl
    if args.seed is not None:
        drl_cfg = dataclasses.replace(drl_cfg, seed=args.seed)
    if args.episodes is not None:
        drl_cfg = dataclasses.replace(drl_cfg, episodes=args.episodes)
    if args.beta_override is not None:
        drl_cfg = dataclasses.replace(drl_cfg, beta_override=args.beta_override)
    out_dir = args.out or cfg.paths.checkpoint_dir
    os.makedirs(out_dir, exist_ok=True)
    params, result = drl_mod.train(
        expert_ckpt, drl_cfg, cfg.scenario, cfg.network, cfg.scales, checkpoint_dir=out_dir, log=print
    )
    metrics_path = args.metrics or cfg.paths.metrics
    _ensure_parent(metrics_path)
    drl_mod.write_metrics(metrics_path, result.stats)
    drl_mod.write_summary(metrics_path + ".summary.json", result.summary())
    print(f"training metrics -> {metrics_path}")
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    if not args.checkpoint:
        print("--checkpoint is required for eval", file=sys.stderr)
        return 1
    expert_ckpt = args.expert_checkpoint or cfg.paths.expert_checkpoint
    if not os.path.exists(expert_ckpt):
        print(f"expert checkpoint not found: {expert_ckpt}", file=sys.stderr)
        return 1
    params, _ = load_checkpoint(args.checkpoint)
    expert_params, _ = load_checkpoint(expert_ckpt)
    seed = args.seed if args.seed is not None else cfg.drl.seed
    episodes = args.episodes if args.episodes is not None else cfg.drl.test_episodes
    sink = TrajectoryWriter(args.trajectories) if args.trajectories else None
    result = drl_mod.evaluate(
        params, expert_params, episodes, seed, cfg.scenario, cfg.scales,
        beta_override=cfg.drl.beta_override, trajectory_sink=sink,
    )
    out = args.out or cfg.paths.metrics
    _ensure_parent(out)
    drl_mod.write_metrics(out, result.stats)
    drl_mod.write_summary(out + ".summary.json", result.summary())
    if sink is not None:
        _ensure_parent(sink.path)
        sink.close()
    s = result.summary()
    print(
        f"eval: episodes={s['episodes']} success={s['success_rate']:.2%} "
        f"collisions={s['collision_rate']:.2%} mean_reward={s['mean_reward']:.3f} "
        f"wall_ms_per_step={s['wall_ms_per_step']:.2f}"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = _config(args)
    app = create_app(cfg, seed=args.seed, realtime_factor=args.realtime_factor, dataset_path=args.out)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


def cmd_replay(args) -> int:
    import uvicorn

    from .service import create_replay_app

    cfg = _config(args)
    if not os.path.exists(args.log):
        print(f"trajectory log not found: {args.log}", file=sys.stderr)
        return 1
    app = create_replay_app(cfg, args.log, realtime_factor=args.realtime_factor)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


_COMMANDS = {
    "collect": cmd_collect,
    "train-expert": cmd_train_expert,
    "train": cmd_train,
    "eval": cmd_eval,
    "serve": cmd_serve,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
