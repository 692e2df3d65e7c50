"""Command-line surface: preprocess | train | eval | summary | gradcheck."""

import argparse
import hashlib
import os
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt_io
from . import kernels
from .config import RunConfig, load_config
from .data import index_dataset, split
from .errors import CheckpointError, ConfigError, DataError, NumericError
from .metrics import format_matrix
from .model import (PUBLISHED_METRICS, SwiSENet, load_checkpoint,
                    render_summary)
from .preprocess import load_image, preprocess_stages, save_image
from .train import evaluate, train
from .verify import TOLERANCE, gradcheck_suite


def _content_hash(path, pp_cfg):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        h.update(f.read())
    h.update(pp_cfg.key().encode())
    return h.hexdigest()


def _cache_path(cache_dir, dataset_root, path):
    rel = os.path.relpath(path, dataset_root)
    return Path(cache_dir) / (rel + ".swt")


def _cached_tensor(cache_dir, dataset_root, path, pp_cfg):
    """Return (array, was_cache_hit); computes and stores on miss."""
    cpath = _cache_path(cache_dir, dataset_root, path)
    digest = _content_hash(path, pp_cfg)
    if cpath.exists():
        try:
            arrays, meta, _ = ckpt_io.load_arrays(cpath)
            if meta.get("content_hash") == digest:
                return arrays["image"], True
        except CheckpointError:
            pass  # stale or corrupt cache entry: recompute
    stages = preprocess_stages(load_image(path), pp_cfg)
    arr = stages["normalized"].astype(np.float32)
    cpath.parent.mkdir(parents=True, exist_ok=True)
    ckpt_io.save_arrays(
        cpath, {"image": arr},
        {"content_hash": digest, "source": str(path)},
        ckpt_io.config_digest(pp_cfg.key()),
    )
    return arr, False


def _load_set(index, pp_cfg, dataset_root, cache_dir=None):
    images = []
    labels = []
    for path, ci in index.samples:
        if cache_dir:
            arr, _ = _cached_tensor(cache_dir, dataset_root, path, pp_cfg)
        else:
            arr = preprocess_stages(load_image(path), pp_cfg)["normalized"]
        images.append(np.asarray(arr, dtype=np.float32))
        labels.append(ci)
    return np.stack(images), np.asarray(labels, dtype=np.int64)


def _echo_config(cfg):
    os.makedirs(cfg.output_dir, exist_ok=True)
    with open(os.path.join(cfg.output_dir, "config.echo.txt"), "w") as f:
        f.write(cfg.to_text())


def _require_dataset(cfg):
    if not cfg.dataset_root:
        raise ConfigError("dataset_root is not set (use --dataset or the config file)")


# -- subcommands -----------------------------------------------------------

def cmd_preprocess(cfg):
    _require_dataset(cfg)
    _echo_config(cfg)
    index = index_dataset(cfg.dataset_root, verify=False)
    pp_cfg = cfg.preprocess_cfg()
    cache_dir = cfg.cache_dir or os.path.join(cfg.output_dir, "cache")
    stages_dir = os.path.join(cfg.output_dir, "stages")
    os.makedirs(stages_dir, exist_ok=True)
    processed = cached = 0
    failures = []
    stage_dumps = 0
    for path, _ in index.samples:
        try:
            arr, hit = _cached_tensor(cache_dir, cfg.dataset_root, path, pp_cfg)
        except (CheckpointError, ConfigError):
            raise
        except Exception as exc:
            failures.append(f"{path}: {exc}")
            continue
        cached += hit
        processed += not hit
        if stage_dumps < cfg.sample_stage_images:
            stages = preprocess_stages(load_image(path), pp_cfg)
            stem = Path(path).stem
            for stage_name in ("resized", "equalized", "smoothed", "normalized"):
                save_image(
                    stages[stage_name].astype(np.float64) / 255.0
                    if stage_name in ("resized", "equalized")
                    else stages[stage_name],
                    os.path.join(stages_dir, f"{stage_dumps:02d}_{stem}_{stage_name}.png"),
                )
            stage_dumps += 1
    print(f"preprocessed {processed} image(s), {cached} cache hit(s), "
          f"{len(failures)} failure(s); cache at {cache_dir}")
    if failures:
        raise DataError("failed to preprocess:\n" + "\n".join(failures))
    return 0


def _split_sets(cfg):
    index = index_dataset(cfg.dataset_root, verify=False)
    return index, split(index, cfg.split_cfg())


def cmd_train(cfg):
    _require_dataset(cfg)
    _echo_config(cfg)
    _, (train_idx, val_idx) = _split_sets(cfg)
    pp_cfg = cfg.preprocess_cfg()
    cache_dir = cfg.cache_dir or None
    x_train, y_train = _load_set(train_idx, pp_cfg, cfg.dataset_root, cache_dir)
    x_val, y_val = _load_set(val_idx, pp_cfg, cfg.dataset_root, cache_dir)
    model_cfg = cfg.model_cfg()
    start_epoch = 0
    optimizer_state = None
    if cfg.checkpoint:
        model, start_epoch, optimizer_state = load_checkpoint(
            cfg.checkpoint, expected_cfg=model_cfg
        )
        print(f"resumed from {cfg.checkpoint} at epoch {start_epoch}")
    else:
        model = SwiSENet(model_cfg)
    result = train(
        model, (x_train, y_train), (x_val, y_val), cfg.train_cfg(),
        out_dir=cfg.output_dir, start_epoch=start_epoch,
        optimizer_state=optimizer_state, log=print,
    )
    if cfg.plots:
        from .plots import plot_metric_curves

        plot_metric_curves(result.rows, os.path.join(cfg.output_dir, "plots"))
    print(f"best val accuracy {result.best_val_accuracy:.4f} "
          f"at epoch {result.best_epoch}")
    return 0


def cmd_eval(cfg, split_name):
    _require_dataset(cfg)
    if not cfg.checkpoint:
        raise ConfigError("eval needs --checkpoint")
    _echo_config(cfg)
    model, _, _ = load_checkpoint(cfg.checkpoint)
    index, (train_idx, val_idx) = _split_sets(cfg)
    if tuple(index.class_names) != tuple(model.cfg.class_names):
        raise DataError(
            f"dataset classes {index.class_names} do not match the "
            f"checkpoint's classes {model.cfg.class_names}"
        )
    chosen = {"train": train_idx, "val": val_idx, "all": index}[split_name]
    pp = cfg.preprocess_cfg()
    pp.target_h = pp.target_w = model.cfg.input_size
    images, labels = _load_set(chosen, pp, cfg.dataset_root,
                               cfg.cache_dir or None)
    result, cm = evaluate(model, images, labels, cfg.batch_size,
                          cfg.metric_average)
    print(f"split: {split_name} ({len(labels)} samples)")
    for key in ("accuracy", "precision", "recall", "f1", "loss"):
        ref = PUBLISHED_METRICS.get(key)
        ref_txt = f"  (published reference {ref:.4f})" if ref else ""
        print(f"{key:>10}: {result[key]:.6f}{ref_txt}")
    print("normalized confusion matrix (rows = true class):")
    print(format_matrix(cm.normalized))
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, f"metrics_eval_{split_name}.tsv"), "w") as f:
        f.write("metric\tvalue\n")
        for key in ("accuracy", "precision", "recall", "f1", "loss"):
            f.write(f"{key}\t{result[key]:.6f}\n")
    with open(os.path.join(out, f"confusion_counts_{split_name}.tsv"), "w") as f:
        f.write(format_matrix(cm.counts, fmt="{:d}") + "\n")
    with open(os.path.join(out, f"confusion_normalized_{split_name}.tsv"), "w") as f:
        f.write(format_matrix(cm.normalized) + "\n")
    return 0


def cmd_summary(cfg):
    model = SwiSENet(cfg.model_cfg())
    rows, totals = model.summarize()
    print(render_summary(rows, totals))
    return 0


def cmd_gradcheck(cfg):
    results = gradcheck_suite(seed=cfg.seed)
    failing = []
    for name, err in results:
        status = "ok" if err <= TOLERANCE else "FAIL"
        print(f"{name:<24} max rel err {err:.3e}  {status}")
        if err > TOLERANCE:
            failing.append(name)
    if failing:
        raise NumericError(
            f"gradient check failed for: {', '.join(failing)}"
        )
    print(f"all gradient checks within {TOLERANCE:g}")
    return 0


# -- argument parsing ------------------------------------------------------

def _add_common(sp):
    sp.add_argument("--config", help="path to a key=value config file")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--dataset", help="dataset root (folder per class)")
    sp.add_argument("--checkpoint", help="checkpoint file to load/resume")
    sp.add_argument("--output", help="output directory")
    sp.add_argument("--image-size", type=int, dest="image_size")
    sp.add_argument("--reduced", action="store_true", default=None,
                    help="desk-scale model (small channels, 64 px input)")
    sp.add_argument("--strict", action="store_true", default=None,
                    help="single-threaded, bitwise-reproducible execution")


def build_parser():
    p = argparse.ArgumentParser(
        prog="swisenet",
        description="SwiSENet rice-leaf disease classifier "
                    f"(kernel backend: {kernels.BACKEND})",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, descr in (
        ("preprocess", "cache preprocessed tensors and stage-image audits"),
        ("train", "train the model, emit metrics and checkpoints"),
        ("eval", "evaluate a checkpoint, emit the confusion matrix"),
        ("summary", "print the layer/shape/parameter summary"),
        ("gradcheck", "finite-difference gradient verification"),
    ):
        sp = sub.add_parser(name, help=descr)
        _add_common(sp)
        if name == "eval":
            sp.add_argument("--split", choices=("train", "val", "all"),
                            default="val")
    return p


def _resolve_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {
        "seed": args.seed, "epochs": args.epochs,
        "dataset_root": args.dataset, "checkpoint": args.checkpoint,
        "output_dir": args.output, "image_size": args.image_size,
        "reduced": args.reduced, "strict": args.strict,
    }
    for key, value in overrides.items():
        if value is not None:
            cfg.set_key(key, str(value))
    return cfg.validate()


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "preprocess":
            return cmd_preprocess(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, args.split)
        if args.command == "summary":
            return cmd_summary(cfg)
        if args.command == "gradcheck":
            return cmd_gradcheck(cfg)
        raise ConfigError(f"unknown command {args.command}")
    except (ConfigError, DataError, NumericError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
