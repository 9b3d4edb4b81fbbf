"""Scenes, clipping, resampling and global min-max normalization.

A Scene is an immutable H x W x C reflectance grid plus a band-role map
(role name -> channel index), a square-pixel geotransform and a UTC
date. All operations return new scenes; pixel arrays are never mutated
in place.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import geotiff
from .errors import DataError, FormatError, MissingBandError

BAND_ROLES = ("red", "green", "blue", "nir", "swir")

NORM_STATS_VERSION = 1


@dataclass(frozen=True)
class Scene:
    """A georeferenced multiband reflectance grid at one timestamp."""

    pixels: np.ndarray                # (H, W, C) float32 or float64
    band_map: dict                    # role -> channel index
    geo: tuple                        # (origin_x, origin_y, pixel_size)
    crs_id: str
    timestamp: datetime.date
    scene_id: str
    norm_fingerprint: str | None = field(default=None)

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3:
            raise DataError(f"scene pixels must be (H, W, C), got shape {px.shape}")
        h, w, c = px.shape
        if h < 1 or w < 1 or c < 1:
            raise DataError(f"scene dimensions must be positive, got {px.shape}")
        if self.geo[2] <= 0:
            raise DataError(f"pixel_size must be > 0, got {self.geo[2]}")
        seen = {}
        for role, idx in self.band_map.items():
            if role not in BAND_ROLES:
                raise DataError(f"unknown band role: {role}")
            if not 0 <= idx < c:
                raise DataError(
                    f"band index out of range: {role} -> {idx} (C={c})")
            if idx in seen:
                raise DataError(
                    f"band roles {seen[idx]} and {role} map to the same channel {idx}")
            seen[idx] = role

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def channels(self):
        return self.pixels.shape[2]

    @property
    def pixel_size(self):
        return self.geo[2]

    def band(self, role):
        """Return the (H, W) view for a band role."""
        if role not in self.band_map:
            raise MissingBandError(f"missing band: {role}")
        return self.pixels[:, :, self.band_map[role]]

    def bounds(self):
        """(min_x, min_y, max_x, max_y) of the scene footprint in CRS units."""
        ox, oy, ps = self.geo
        h, w = self.pixels.shape[:2]
        return (ox, oy - h * ps, ox + w * ps, oy)


@dataclass(frozen=True)
class RegionOfInterest:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self):
        if not (self.max_x > self.min_x and self.max_y > self.min_y):
            raise DataError("region of interest must have positive extent")


@dataclass(frozen=True)
class NormStats:
    """Per-band global (min, max) pairs used for min-max normalization."""

    bands: dict                      # role -> (min, max)
    source_scene_ids: tuple = ()

    def __post_init__(self):
        for role, (lo, hi) in self.bands.items():
            if not hi > lo:
                raise DataError(f"degenerate band: {role} (min {lo} >= max {hi})")

    def fingerprint(self):
        """Stable content hash; scenes normalized with the same stats share it."""
        blob = json.dumps(_stats_doc(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def load_scene(path, band_map, timestamp, scale=10000.0, scene_id=None):
    """Load a multiband GeoTIFF as a Scene.

    Integer-encoded rasters are divided by `scale` (default 10000, the
    usual convention for scaled surface reflectance); float rasters are
    taken as-is. `band_map` assigns roles to the file's channel indices.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"missing file: {path}")
    arr, geo, crs_id, _meta = geotiff.read_raster(path)
    c = arr.shape[2]
    for role, idx in band_map.items():
        if not 0 <= idx < c:
            raise DataError(f"band index out of range: {role} -> {idx} (file has {c} bands)")
    if arr.dtype.kind == "u" or arr.dtype.kind == "i":
        pixels = arr.astype(np.float32) / np.float32(scale)
    elif arr.dtype == np.float64:
        pixels = arr
    else:
        pixels = arr.astype(np.float32)
    if scene_id is None:
        scene_id = os.path.splitext(os.path.basename(str(path)))[0]
    if isinstance(timestamp, str):
        timestamp = datetime.date.fromisoformat(timestamp)
    return Scene(pixels=pixels, band_map=dict(band_map), geo=geo,
                 crs_id=crs_id, timestamp=timestamp, scene_id=scene_id)


def save_scene(scene, path):
    """Write a Scene to a GeoTIFF, preserving roles and timestamp in metadata."""
    meta = {
        "band_map": scene.band_map,
        "timestamp": scene.timestamp.isoformat(),
        "scene_id": scene.scene_id,
    }
    geotiff.write_raster(path, scene.pixels.astype(np.float32, copy=False),
                         scene.geo, scene.crs_id, metadata=meta)


def clip(scene, roi):
    """Clip a scene to the pixel-aligned intersection with `roi`.

    Pixel values are copied bit-identically; the geotransform is shifted
    to the new top-left corner.
    """
    ox, oy, ps = scene.geo
    h, w = scene.height, scene.width
    c0 = max(0, math.floor((roi.min_x - ox) / ps))
    c1 = min(w, math.ceil((roi.max_x - ox) / ps))
    r0 = max(0, math.floor((oy - roi.max_y) / ps))
    r1 = min(h, math.ceil((oy - roi.min_y) / ps))
    if c0 >= c1 or r0 >= r1:
        raise DataError("empty intersection between scene and region of interest")
    pixels = scene.pixels[r0:r1, c0:c1, :].copy()
    geo = (ox + c0 * ps, oy - r0 * ps, ps)
    return replace(scene, pixels=pixels, geo=geo)


def resample_to(scene, target_pixel_size):
    """Nearest-neighbor resample to a new square pixel size.

    Output pixel (i, j) samples source pixel (floor(i * target / ps),
    floor(j * target / ps)); a target equal to the current pixel size
    returns a bit-identical copy.
    """
    if target_pixel_size <= 0:
        raise DataError(f"target pixel size must be > 0, got {target_pixel_size}")
    ox, oy, ps = scene.geo
    h, w = scene.height, scene.width
    if target_pixel_size == ps:
        return replace(scene, pixels=scene.pixels.copy())
    out_h = int(math.floor(h * ps / target_pixel_size + 0.5))
    out_w = int(math.floor(w * ps / target_pixel_size + 0.5))
    if out_h < 1 or out_w < 1:
        raise DataError("resampled dimensions would be zero")
    rows = np.minimum((np.arange(out_h) * target_pixel_size / ps).astype(np.int64), h - 1)
    cols = np.minimum((np.arange(out_w) * target_pixel_size / ps).astype(np.int64), w - 1)
    pixels = scene.pixels[np.ix_(rows, cols)].copy()
    return replace(scene, pixels=pixels, geo=(ox, oy, float(target_pixel_size)))


def compute_norm_stats(scenes):
    """Global per-band (min, max) over every pixel of every scene."""
    if not scenes:
        raise DataError("cannot compute normalization stats from an empty scene list")
    roles = set(scenes[0].band_map)
    for s in scenes[1:]:
        if set(s.band_map) != roles:
            raise DataError("scenes disagree on band roles")
    bands = {}
    for role in sorted(roles):
        lo = min(float(s.band(role).min()) for s in scenes)
        hi = max(float(s.band(role).max()) for s in scenes)
        if not hi > lo:
            raise DataError(f"degenerate band: {role} is constant ({lo})")
        bands[role] = (lo, hi)
    return NormStats(bands=bands, source_scene_ids=tuple(s.scene_id for s in scenes))


def normalize(scene, stats):
    """Min-max normalize every band to [0, 1], clamping out-of-range values."""
    missing = set(scene.band_map) - set(stats.bands)
    if missing:
        raise MissingBandError(f"missing band in stats: {sorted(missing)[0]}")
    out = scene.pixels.copy()
    for role, idx in scene.band_map.items():
        lo, hi = stats.bands[role]
        band = (scene.pixels[:, :, idx] - lo) / (hi - lo)
        out[:, :, idx] = np.clip(band, 0.0, 1.0)
    return replace(scene, pixels=out, norm_fingerprint=stats.fingerprint())


def _stats_doc(stats):
    return {
        "version": NORM_STATS_VERSION,
        "bands": {role: {"min": lo, "max": hi} for role, (lo, hi) in sorted(stats.bands.items())},
        "source_scene_ids": list(stats.source_scene_ids),
    }


def save_norm_stats(stats, path):
    with open(path, "w") as fh:
        json.dump(_stats_doc(stats), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_norm_stats(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"malformed stats JSON: {exc}") from exc
    if not isinstance(doc, dict) or "bands" not in doc:
        raise FormatError("stats JSON missing 'bands' key")
    if doc.get("version") != NORM_STATS_VERSION:
        raise FormatError(f"unsupported stats schema version: {doc.get('version')!r}")
    try:
        bands = {role: (entry["min"], entry["max"]) for role, entry in doc["bands"].items()}
    except (TypeError, KeyError) as exc:
        raise FormatError("stats JSON band entries must carry 'min' and 'max'") from exc
    return NormStats(bands=bands, source_scene_ids=tuple(doc.get("source_scene_ids", ())))
