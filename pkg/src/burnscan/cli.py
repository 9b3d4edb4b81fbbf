"""Command-line pipeline: synth, tile, train, score, baseline, cluster,
evaluate, render.

Every command accepts `--config` (run config JSON), `--out` (output
directory, overriding the config's out_dir), `--seed` (overrides the
seed wherever the command uses one), and `--threads` (caps BLAS worker
threads; `--threads 1` makes runs bit-reproducible). Exit codes: 0
success, 2 configuration or usage error, 3 data error, 4 numerical
abort.

Artifact layout under the output directory:

    norm_stats.json        tile      per-band normalization ranges
    tiles/NNN-<scene>.tiles tile     one tile set per corpus scene
    encoder.ckpt, history.csv train  weights and per-epoch mean loss
    change_map.tif/.png    score     tile-grid scores (+ PNG preview)
    change_map_native.tif  score     scores on the native pixel grid
    dndvi.tif / dnbr.tif   baseline  index-difference maps (raw scenes)
    severity.tif/.png      cluster   severity labels
    report.json            evaluate  AUPRC / F1 / confusion counts

All commands are deterministic given identical inputs and seeds when
run with `--threads 1`; reruns produce byte-identical artifacts.
"""

import argparse
import dataclasses
import glob
import json
import os
import sys

import numpy as np

from .cluster import SeverityMap, classify_severity, save_severity_map
from .colormap import COLORMAPS, save_score_png, save_severity_png
from .config import load_run_config
from .errors import ConfigError, DataError, NumericalError
from .geotiff import read_raster, write_raster
from .indices import diff_index, nbr, ndvi
from .metrics import build_eval_report, load_mask, save_eval_report
from .nn import ArchDescriptor, init_encoder, load_checkpoint, save_checkpoint, train
from .raster import (clip, compute_norm_stats, load_norm_stats, normalize,
                     save_norm_stats, save_scene)
from .scoring import change_map, save_change_map, upsample_to_native
from .synth import SynthSpec, generate_pair
from .tiling import extract_tiles, load_tileset, save_tileset


def _out_dir(args, cfg=None) -> str:
    out = args.out or (cfg.out_dir if cfg is not None else ".")
    os.makedirs(out, exist_ok=True)
    return out


def _require_config(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    return load_run_config(args.config)


def _require_pair(cfg):
    if cfg.pre is None or cfg.post is None:
        raise ConfigError("config needs a pair with pre and post scene refs")
    return cfg.pre.load(), cfg.post.load()


def _require_file(path: str, hint: str) -> str:
    if not os.path.exists(path):
        raise DataError(f"missing {hint}: {path}")
    return path


def _read_single_band(path: str, hint: str):
    data, geo, crs_id, meta = read_raster(_require_file(path, hint))
    if data.shape[2] != 1:
        raise DataError(f"{hint} must be single-band, got {data.shape[2]} bands")
    return data[:, :, 0], geo, crs_id, meta


def _cmd_synth(args) -> int:
    with open(_require_file(args.spec, "generator spec"), "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed generator spec JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("generator spec root must be a JSON object")
    if args.seed is not None:
        doc["seed"] = args.seed
    spec = SynthSpec.from_doc(doc)
    out = _out_dir(args)
    pre, post, burned, severity = generate_pair(spec, repeat=args.repeat)
    save_scene(pre, os.path.join(out, "pre.tif"))
    save_scene(post, os.path.join(out, "post.tif"))
    mask_meta = {"spec": spec.to_doc(), "repeat": args.repeat}
    write_raster(os.path.join(out, "burned_mask.tif"), burned, pre.geo,
                 pre.crs_id, metadata=dict(mask_meta, kind="burned_mask"))
    write_raster(os.path.join(out, "severity_mask.tif"), severity, pre.geo,
                 pre.crs_id, metadata=dict(mask_meta, kind="severity_mask"))
    frac = float(burned.mean())
    print(f"wrote pre/post scenes and masks to {out} "
          f"(seed {spec.seed}, burned fraction {frac:.4f})")
    return 0


def _cmd_tile(args) -> int:
    cfg = _require_config(args)
    if not cfg.scenes:
        raise ConfigError("config lists no scenes to tile")
    out = _out_dir(args, cfg)
    scenes = [ref.load() for ref in cfg.scenes]
    if cfg.roi is not None:
        scenes = [clip(s, cfg.roi) for s in scenes]
    stats = compute_norm_stats(scenes)
    save_norm_stats(stats, os.path.join(out, cfg.norm_stats))
    tile_dir = os.path.join(out, "tiles")
    os.makedirs(tile_dir, exist_ok=True)
    total = 0
    for i, scene in enumerate(scenes):
        ts = extract_tiles(normalize(scene, stats), cfg.stride)
        save_tileset(ts, os.path.join(tile_dir, f"{i:03d}-{scene.scene_id}.tiles"))
        total += len(ts)
    print(f"wrote {total} tiles across {len(scenes)} scenes to {tile_dir} "
          f"(stride {cfg.stride})")
    return 0


def _cmd_train(args) -> int:
    cfg = _require_config(args)
    out = _out_dir(args, cfg)
    tile_dir = os.path.join(out, "tiles")
    paths = sorted(glob.glob(os.path.join(tile_dir, "*.tiles")))
    if not paths:
        raise DataError(f"no tile sets under {tile_dir} (run the tile command first)")
    stacks = []
    channels = None
    for p in paths:
        stack = load_tileset(p).pixel_stack()
        if channels is None:
            channels = stack.shape[3]
        elif stack.shape[3] != channels:
            raise DataError("tile sets disagree on channel count")
        stacks.append(stack)
    corpus = np.concatenate(stacks, axis=0)
    train_cfg = cfg.training
    if args.seed is not None:
        train_cfg = dataclasses.replace(train_cfg, seed=args.seed)
    params = init_encoder(ArchDescriptor(input_channels=channels), train_cfg.seed)

    def log(epoch, loss):
        print(f"epoch {epoch}: mean loss {loss:.6f}", file=sys.stderr)

    result = train(corpus, params, train_cfg, cfg.augmentation, log_fn=log)
    ckpt_path = os.path.join(out, cfg.checkpoint)
    save_checkpoint(result.params, ckpt_path)
    with open(os.path.join(out, "history.csv"), "w", encoding="utf-8") as fh:
        fh.write("epoch,mean_loss\n")
        for epoch, loss in enumerate(result.history):
            fh.write(f"{epoch},{loss!r}\n")
    print(f"trained on {corpus.shape[0]} tiles for {len(result.history)} epochs; "
          f"best epoch {result.best_epoch} "
          f"(loss {result.history[result.best_epoch]:.6f}); wrote {ckpt_path}")
    return 0


def _cmd_score(args) -> int:
    cfg = _require_config(args)
    out = _out_dir(args, cfg)
    pre, post = _require_pair(cfg)
    if cfg.roi is not None:
        pre, post = clip(pre, cfg.roi), clip(post, cfg.roi)
    params = load_checkpoint(
        _require_file(os.path.join(out, cfg.checkpoint), "checkpoint"),
        expected_channels=pre.channels)
    stats = load_norm_stats(
        _require_file(os.path.join(out, cfg.norm_stats), "normalization stats"))
    cm = change_map(params, normalize(pre, stats), normalize(post, stats),
                    cfg.stride, metric=cfg.metric,
                    representation=cfg.representation)
    save_change_map(cm, os.path.join(out, "change_map.tif"))
    save_change_map(cm, os.path.join(out, "change_map_native.tif"), native=True)
    native = upsample_to_native(cm, pre.height, pre.width)
    save_score_png(native, os.path.join(out, "change_map.png"),
                   colormap=args.colormap)
    rows, cols = cm.scores.shape
    print(f"wrote {rows}x{cols} change map (metric {cm.metric}, "
          f"representation {cm.representation}, stride {cm.stride}) to {out}")
    return 0


def _cmd_baseline(args) -> int:
    cfg = _require_config(args)
    out = _out_dir(args, cfg)
    pre, post = _require_pair(cfg)
    if cfg.roi is not None:
        pre, post = clip(pre, cfg.roi), clip(post, cfg.roi)
    index_fn = {"ndvi": ndvi, "nbr": nbr}[args.index]
    d = diff_index(index_fn(pre), index_fn(post))
    path = os.path.join(out, f"d{args.index}.tif")
    meta = {"kind": d.index_kind,
            "timestamps": [t.isoformat() for t in d.timestamps]}
    write_raster(path, d.values.astype(np.float32), d.geo, d.crs_id, metadata=meta)
    finite = d.values[np.isfinite(d.values)]
    lo = float(finite.min()) if finite.size else float("nan")
    hi = float(finite.max()) if finite.size else float("nan")
    print(f"wrote {path} (range [{lo:.4f}, {hi:.4f}], "
          f"{d.values.size - finite.size} undefined pixels)")
    return 0


def _cmd_cluster(args) -> int:
    cfg = load_run_config(args.config) if args.config else None
    out = _out_dir(args, cfg)
    scores_path = args.scores or os.path.join(out, "change_map_native.tif")
    scores, geo, crs_id, _ = _read_single_band(scores_path, "score map")
    seed = args.seed if args.seed is not None else 0
    severity, model = classify_severity(scores.astype(np.float64), k=3,
                                        seed=seed, geo=geo, crs_id=crs_id)
    save_severity_map(severity, os.path.join(out, "severity.tif"))
    save_severity_png(severity.labels, os.path.join(out, "severity.png"))
    fractions = ", ".join(f"{name}={value:.4f}"
                          for name, value in severity.class_fractions().items())
    centroids = [round(float(c), 6) for c in model.centroids.ravel().tolist()]
    print(f"wrote severity map to {out} (centroids {centroids}; {fractions})")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = load_run_config(args.config) if args.config else None
    out = _out_dir(args, cfg)
    scores, _, _, _ = _read_single_band(args.scores, "score map")
    scores = scores.astype(np.float64)
    burned_gt = load_mask(_require_file(args.mask, "burned mask"),
                          label_set=(0, 1), expected_shape=scores.shape)
    if (args.pred is None) != (args.severity_mask is None):
        raise ConfigError("severity scoring needs both --pred and --severity-mask")
    pred = severity_gt = None
    if args.pred is not None:
        labels, pgeo, pcrs, _ = _read_single_band(args.pred, "severity prediction")
        pred = SeverityMap(labels=labels.astype(np.uint8), geo=pgeo, crs_id=pcrs)
        severity_gt = load_mask(_require_file(args.severity_mask, "severity mask"),
                                label_set=(0, 1, 2), expected_shape=scores.shape)
    report = build_eval_report(scores, burned_gt.labels, pred=pred,
                               severity_gt=severity_gt)
    save_eval_report(report, os.path.join(out, "report.json"))
    print(f"AUPRC: {report.auprc:.6f}")
    if pred is not None:
        for name, value in report.f1.items():
            print(f"F1 {name}: {value:.6f}")
        macro = float(np.mean([v for v in report.f1.values()]))
        print(f"macro-F1: {macro:.6f}")
    print(f"ignored pixels: {report.ignored_pixels}")
    return 0


def _cmd_render(args) -> int:
    cfg = load_run_config(args.config) if args.config else None
    out = _out_dir(args, cfg)
    values, _, _, _ = _read_single_band(args.input, "score map")
    stem = os.path.splitext(os.path.basename(args.input))[0]
    path = os.path.join(out, stem + ".png")
    save_score_png(values.astype(np.float64), path, colormap=args.colormap)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run config JSON")
    common.add_argument("--out", metavar="DIR",
                        help="output directory (overrides the config's out_dir)")
    common.add_argument("--seed", type=int, metavar="N",
                        help="override the seed used by this command")
    common.add_argument("--threads", type=int, metavar="N",
                        help="cap BLAS threads; 1 gives bit-reproducible runs")

    parser = argparse.ArgumentParser(
        prog="burnscan",
        description="Unsupervised burned-area mapping from pre/post scene pairs.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic scene pair with ground truth")
    p.add_argument("--spec", required=True, metavar="PATH",
                   help="generator spec JSON")
    p.add_argument("--repeat", type=int, default=0, metavar="N",
                   help="acquisition index over the same geography")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("tile", parents=[common],
                       help="normalize the corpus scenes and extract tile sets")
    p.set_defaults(func=_cmd_tile)

    p = sub.add_parser("train", parents=[common],
                       help="train the contrastive encoder on saved tile sets")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("score", parents=[common],
                       help="score the scene pair with the trained encoder")
    p.add_argument("--colormap", default="grayscale", choices=sorted(COLORMAPS),
                   help="colormap for the PNG preview")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("baseline", parents=[common],
                       help="index-difference baseline map on the raw scene pair")
    p.add_argument("--index", default="ndvi", choices=("ndvi", "nbr"),
                   help="spectral index to difference")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("cluster", parents=[common],
                       help="cluster a score map into severity classes")
    p.add_argument("--scores", metavar="PATH",
                   help="score map GeoTIFF (default: <out>/change_map_native.tif)")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("evaluate", parents=[common],
                       help="AUPRC/F1 report for a score map against ground truth")
    p.add_argument("--scores", required=True, metavar="PATH",
                   help="score map GeoTIFF")
    p.add_argument("--mask", required=True, metavar="PATH",
                   help="binary burned-area mask GeoTIFF")
    p.add_argument("--pred", metavar="PATH",
                   help="predicted severity map GeoTIFF")
    p.add_argument("--severity-mask", metavar="PATH",
                   help="ground-truth severity mask GeoTIFF")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("render", parents=[common],
                       help="render a score map GeoTIFF to PNG")
    p.add_argument("--input", required=True, metavar="PATH",
                   help="single-band map GeoTIFF")
    p.add_argument("--colormap", default="grayscale", choices=sorted(COLORMAPS),
                   help="256-entry colormap to apply")
    p.set_defaults(func=_cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("threads must be at least 1")
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=args.threads):
                return args.func(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
