"""Run configuration: one JSON document drives every pipeline command.

Schema (all keys optional unless a command needs them):

```
{
  "scenes":  [<scene ref>, ...],          tile/train corpus, in order
  "pair":    {"pre": <scene ref>, "post": <scene ref>},
  "roi":     {"min_x", "min_y", "max_x", "max_y"},
  "stride":  8,
  "norm_stats": "norm_stats.json",        artifact, relative to the out dir
  "checkpoint": "encoder.ckpt",           artifact, relative to the out dir
  "metric": "cosine",
  "representation": "z",
  "augmentation": {...},                  view-sampling settings
  "training": {...},                      optimizer/loss settings
  "out_dir": "."
}
```

A scene ref is `{"path", "band_map", "timestamp", "scene_id"?, "scale"?}`.
Scene paths resolve relative to the config file's directory and must
exist when the config is loaded; artifact paths resolve relative to the
output directory at command time. Unknown keys are rejected so typos
fail loudly rather than silently falling back to defaults.
"""

import datetime
import json
import os
from dataclasses import dataclass
from typing import Optional

from .augment import AugmentationConfig
from .errors import ConfigError, DataError
from .nn import TrainConfig
from .raster import RegionOfInterest, Scene, load_scene
from .scoring import METRICS, REPRESENTATIONS
from .tiling import MAX_STRIDE


@dataclass(frozen=True)
class SceneRef:
    """Pointer to one on-disk scene plus the metadata needed to load it."""

    path: str
    band_map: dict
    timestamp: str
    scene_id: Optional[str] = None
    scale: float = 10000.0

    def load(self) -> Scene:
        return load_scene(self.path, self.band_map, self.timestamp,
                          scale=self.scale, scene_id=self.scene_id)


@dataclass(frozen=True)
class RunConfig:
    scenes: tuple = ()
    pre: Optional[SceneRef] = None
    post: Optional[SceneRef] = None
    roi: Optional[RegionOfInterest] = None
    stride: int = 8
    norm_stats: str = "norm_stats.json"
    checkpoint: str = "encoder.ckpt"
    metric: str = "cosine"
    representation: str = "z"
    augmentation: AugmentationConfig = AugmentationConfig()
    training: TrainConfig = TrainConfig()
    out_dir: str = "."


def _reject_unknown(doc: dict, allowed, context: str) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown {context} field: {unknown[0]}")


def _scene_ref(doc, base_dir: str, context: str) -> SceneRef:
    if not isinstance(doc, dict):
        raise ConfigError(f"{context} must be an object")
    _reject_unknown(doc, {"path", "band_map", "timestamp", "scene_id", "scale"},
                    context)
    for key in ("path", "band_map", "timestamp"):
        if key not in doc:
            raise ConfigError(f"{context} missing required field: {key}")
    path = os.path.normpath(os.path.join(base_dir, str(doc["path"])))
    if not os.path.exists(path):
        raise ConfigError(f"referenced scene does not exist: {path}")
    band_map = doc["band_map"]
    if (not isinstance(band_map, dict) or not band_map
            or not all(isinstance(v, int) for v in band_map.values())):
        raise ConfigError(f"{context} band_map must map role names to channel indices")
    try:
        datetime.date.fromisoformat(str(doc["timestamp"]))
    except ValueError as exc:
        raise ConfigError(f"{context} has a malformed timestamp: {exc}") from exc
    return SceneRef(path=path, band_map={str(k): int(v) for k, v in band_map.items()},
                    timestamp=str(doc["timestamp"]),
                    scene_id=doc.get("scene_id"),
                    scale=float(doc.get("scale", 10000.0)))


def _augmentation(doc: dict) -> AugmentationConfig:
    base = AugmentationConfig()
    _reject_unknown(doc, {"crop_scale_range", "blur_probability",
                          "blur_sigma_range", "flip_probability"}, "augmentation")
    return AugmentationConfig(
        crop_scale_range=tuple(doc.get("crop_scale_range", base.crop_scale_range)),
        blur_probability=float(doc.get("blur_probability", base.blur_probability)),
        blur_sigma_range=tuple(doc.get("blur_sigma_range", base.blur_sigma_range)),
        flip_probability=float(doc.get("flip_probability", base.flip_probability)),
    ).validate()


def _training(doc: dict) -> TrainConfig:
    base = TrainConfig()
    fields = {"temperature", "batch_size", "learning_rate", "beta1", "beta2",
              "eps", "max_epochs", "patience", "min_delta", "seed"}
    _reject_unknown(doc, fields, "training")
    return TrainConfig(
        temperature=float(doc.get("temperature", base.temperature)),
        batch_size=int(doc.get("batch_size", base.batch_size)),
        learning_rate=float(doc.get("learning_rate", base.learning_rate)),
        beta1=float(doc.get("beta1", base.beta1)),
        beta2=float(doc.get("beta2", base.beta2)),
        eps=float(doc.get("eps", base.eps)),
        max_epochs=int(doc.get("max_epochs", base.max_epochs)),
        patience=int(doc.get("patience", base.patience)),
        min_delta=float(doc.get("min_delta", base.min_delta)),
        seed=int(doc.get("seed", base.seed)),
    ).validate()


def _roi(doc: dict) -> RegionOfInterest:
    _reject_unknown(doc, {"min_x", "min_y", "max_x", "max_y"}, "roi")
    try:
        return RegionOfInterest(min_x=float(doc["min_x"]), min_y=float(doc["min_y"]),
                                max_x=float(doc["max_x"]), max_y=float(doc["max_y"]))
    except KeyError as exc:
        raise ConfigError(f"roi missing required field: {exc.args[0]}") from exc
    except DataError as exc:
        raise ConfigError(f"invalid roi: {exc}") from exc


def load_run_config(path) -> RunConfig:
    """Parse and validate a run config; every failure is a ConfigError."""
    path = str(path)
    if not os.path.exists(path):
        raise ConfigError(f"missing config file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    allowed = {"scenes", "pair", "roi", "stride", "norm_stats", "checkpoint",
               "metric", "representation", "augmentation", "training", "out_dir"}
    _reject_unknown(doc, allowed, "config")
    base_dir = os.path.dirname(os.path.abspath(path))

    scenes = doc.get("scenes", [])
    if not isinstance(scenes, list):
        raise ConfigError("scenes must be a list")
    refs = tuple(_scene_ref(s, base_dir, f"scenes[{i}]") for i, s in enumerate(scenes))

    pre = post = None
    if "pair" in doc:
        pair = doc["pair"]
        if not isinstance(pair, dict):
            raise ConfigError("pair must be an object")
        _reject_unknown(pair, {"pre", "post"}, "pair")
        if "pre" not in pair or "post" not in pair:
            raise ConfigError("pair needs both pre and post scene refs")
        pre = _scene_ref(pair["pre"], base_dir, "pair.pre")
        post = _scene_ref(pair["post"], base_dir, "pair.post")

    stride = int(doc.get("stride", 8))
    if not 1 <= stride <= MAX_STRIDE:
        raise ConfigError(f"stride must lie in [1, {MAX_STRIDE}], got {stride}")
    metric = str(doc.get("metric", "cosine"))
    if metric not in METRICS:
        raise ConfigError(f"unknown metric: {metric}")
    representation = str(doc.get("representation", "z"))
    if representation not in REPRESENTATIONS:
        raise ConfigError(f"unknown representation: {representation}")

    return RunConfig(
        scenes=refs, pre=pre, post=post,
        roi=_roi(doc["roi"]) if "roi" in doc else None,
        stride=stride,
        norm_stats=str(doc.get("norm_stats", "norm_stats.json")),
        checkpoint=str(doc.get("checkpoint", "encoder.ckpt")),
        metric=metric, representation=representation,
        augmentation=_augmentation(doc.get("augmentation", {})),
        training=_training(doc.get("training", {})),
        out_dir=str(doc.get("out_dir", ".")),
    )
