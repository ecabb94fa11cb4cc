"""Command-line interface: generate, train, eval, predict, plot.

Exit codes are a stable scripting contract: 0 success, 2 config problems,
3 training numerics, 4 missing ground truth, 5 bad scene index, 6 prediction
and scene horizon mismatch. Every command is deterministic given its flags.
"""

from __future__ import annotations

import argparse
import collections
import json
import sys

import numpy as np

from .config_io import ConfigError, load_config
from .metrics import MissingGroundTruth, constant_velocity_baseline, evaluate_dataset
from .plotting import HorizonMismatch, render_scene_svg
from .scenes.features import DEFAULT_LIMITS
from .scenes.serialize import ParseError, load_dataset, save_dataset
from .scenes.generate import generate_dataset
from .scenes.transform import to_agent_frame
from .scenes.types import FRAME_TARGET, Scene
from .training.checkpoint import (FormatError, load_checkpoint, restore_model,
                                  save_checkpoint)
from .training.loop import NonFiniteLoss, TrainLog, fit


class IndexOutOfRange(IndexError):
    """Scene index beyond the dataset file's length."""


def _load_scene(path: str, index: int) -> Scene:
    scenes = load_dataset(path)
    if not 0 <= index < len(scenes):
        raise IndexOutOfRange(
            f"index {index} out of range for {len(scenes)} scenes in {path}")
    return scenes[index]


def _scene_limits(scene: Scene) -> tuple[int, int]:
    return (max(DEFAULT_LIMITS[0], len(scene.neighbors)),
            max(DEFAULT_LIMITS[1], len(scene.graph.nodes)))


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    scenes = generate_dataset(args.seed, args.scenes, cfg.gen)
    save_dataset(args.out, scenes)
    mix = collections.Counter(s.meta.get("topology", "?") for s in scenes)
    summary = " ".join(f"{k}:{mix[k]}" for k in sorted(mix))
    print(f"wrote {len(scenes)} scenes to {args.out} ({summary})")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    train_scenes = load_dataset(args.data)
    val_scenes = load_dataset(args.val)
    log_path = args.log if args.log else args.out + ".log"
    ckpt, log = fit(train_scenes, val_scenes, cfg.model, cfg.train,
                    log_path=log_path)
    save_checkpoint(ckpt, args.out)
    final = log.records[-1] if log.records else None
    if final is not None:
        print(TrainLog.format_record(final))
    print(f"wrote checkpoint to {args.out} (log: {log_path})")
    return 0


def cmd_eval(args) -> int:
    scenes = load_dataset(args.data)
    scenes = [s if s.frame == FRAME_TARGET else to_agent_frame(s) for s in scenes]
    if args.baseline:
        f = len(scenes[0].future.points) if scenes and scenes[0].future is not None \
            else None
        predict_fn = lambda s, sd: constant_velocity_baseline(s, f)
        name = args.baseline
    else:
        if not args.ckpt:
            raise ConfigError("either --ckpt or --baseline is required")
        model, _ = restore_model(load_checkpoint(args.ckpt))
        predict_fn = lambda s, sd: model.predict(s, sd, _scene_limits(s))
        name = args.ckpt
    report = evaluate_dataset(predict_fn, scenes, ks=(1, 5, 10),
                              eval_seed=args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    k = max(report.min_ade)
    print(f"evaluated {name} on {report.scene_count} scenes: "
          f"minADE{k}={report.min_ade[k]:.4f} minFDE{k}={report.min_fde[k]:.4f} "
          f"miss_rate{k}={report.miss_rate[k]:.4f} "
          f"mean_inference_ms={report.mean_inference_ms:.3f}")
    return 0


def cmd_predict(args) -> int:
    scene = _load_scene(args.scene_file, args.index)
    if scene.frame != FRAME_TARGET:
        scene = to_agent_frame(scene)
    model, _ = restore_model(load_checkpoint(args.ckpt))
    pred, goal_weights = model.predict_with_goals(scene, args.seed,
                                                  _scene_limits(scene))
    obj = {
        "pi": pred.pi.tolist(),
        "mu": pred.mu.tolist(),
        "b": pred.b.tolist(),
        "goal_weights": np.asarray(goal_weights).tolist(),
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")
    print(f"wrote {pred.pi.shape[0]}-mode prediction for scene {args.index} "
          f"to {args.out}")
    return 0


def cmd_plot(args) -> int:
    scene = _load_scene(args.scene_file, args.index)
    if scene.frame != FRAME_TARGET:
        scene = to_agent_frame(scene)
    try:
        with open(args.pred, encoding="utf-8") as fh:
            obj = json.load(fh)
        pi = np.asarray(obj["pi"], dtype=float)
        mu = np.asarray(obj["mu"], dtype=float)
        b = np.asarray(obj["b"], dtype=float)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
        raise ConfigError(f"cannot read prediction file {args.pred}: {e}") from e
    svg = render_scene_svg(scene, pi, mu, b)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(svg + "\n")
    print(f"wrote plot for scene {args.index} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goalgraph",
        description="Multimodal trajectory prediction on synthetic lane graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset file")
    p.add_argument("--out", required=True)
    p.add_argument("--scenes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="fit a model and write a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint or baseline on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", default=None)
    p.add_argument("--baseline", choices=["constant_velocity"], default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="predict one scene from a dataset file")
    p.add_argument("--scene-file", required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("plot", help="render a scene and prediction to SVG")
    p.add_argument("--scene-file", required=True)
    p.add_argument("--index", type=int, required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NonFiniteLoss as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except MissingGroundTruth as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except IndexOutOfRange as e:
        print(f"error: {e}", file=sys.stderr)
        return 5
    except HorizonMismatch as e:
        print(f"error: {e}", file=sys.stderr)
        return 6
    except (ConfigError, ParseError, FormatError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
