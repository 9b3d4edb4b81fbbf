"""Stochastic color-preserving view generation for contrastive training.

Each training view is the composition crop -> blur -> flip -> rotation.
No augmentation here ever changes a pixel's band values other than by
spatial resampling or local averaging; brightness, contrast, hue and
channel operations are deliberately absent.

Reproducibility contract: an augmented view is a pure function of
(tile, seed, epoch, tile_index, view_index). Parameter draws for one
view come from a dedicated generator (see :func:`view_rng`) and are
consumed in a fixed, documented order:

1. crop area fraction  ``rng.uniform(lo, hi)``
2. crop row offset     ``rng.integers(0, 32 - side + 1)``
3. crop col offset     ``rng.integers(0, 32 - side + 1)``
4. blur gate           ``rng.random() < blur_probability``
5. blur sigma          ``rng.uniform(*blur_sigma_range)`` (only if gated on)
6. horizontal flip     ``rng.random() < flip_probability``
7. vertical flip       ``rng.random() < flip_probability``
8. rotation steps      ``rng.integers(0, 4)``

The batched path (:func:`make_view_batch`) applies identical arithmetic
to many tiles at once and is bit-identical to the per-tile functions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

TILE = 32
ROTATION_ANGLES = (0, 90, 180, 270)


@dataclass(frozen=True)
class AugmentationConfig:
    """Knobs for view generation; defaults follow common contrastive practice."""

    crop_scale_range: tuple = (0.5, 1.0)
    blur_probability: float = 0.5
    blur_sigma_range: tuple = (0.1, 2.0)
    flip_probability: float = 0.5

    def validate(self) -> "AugmentationConfig":
        lo, hi = self.crop_scale_range
        if not (0.0 < lo <= hi <= 1.0):
            raise ConfigError("crop_scale_range must satisfy 0 < lo <= hi <= 1")
        if not (0.0 <= self.blur_probability <= 1.0):
            raise ConfigError("blur_probability must lie in [0, 1]")
        if not (0.0 <= self.flip_probability <= 1.0):
            raise ConfigError("flip_probability must lie in [0, 1]")
        slo, shi = self.blur_sigma_range
        if not (0.0 < slo <= shi):
            raise ConfigError("blur_sigma_range must be positive and ordered")
        return self


def view_rng(seed: int, epoch: int, tile_index: int, view_index: int) -> np.random.Generator:
    """Deterministic per-view generator keyed by (seed, epoch, tile, view)."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((seed, epoch, tile_index, view_index)))
    )


@dataclass(frozen=True)
class ViewParams:
    """One view's fully drawn augmentation parameters."""

    side: int
    row0: int
    col0: int
    blur_on: bool
    sigma: float
    flip_h: bool
    flip_v: bool
    rot_k: int


def draw_view_params(rng: np.random.Generator,
                     config: AugmentationConfig) -> ViewParams:
    """Consume one view's draws from rng in the documented order."""
    lo, hi = config.crop_scale_range
    area = rng.uniform(lo, hi)
    side = int(round(TILE * np.sqrt(area)))
    side = max(1, min(TILE, side))
    row0 = int(rng.integers(0, TILE - side + 1))
    col0 = int(rng.integers(0, TILE - side + 1))
    blur_on = bool(rng.random() < config.blur_probability)
    sigma = float(rng.uniform(*config.blur_sigma_range)) if blur_on else 0.0
    flip_h = bool(rng.random() < config.flip_probability)
    flip_v = bool(rng.random() < config.flip_probability)
    rot_k = int(rng.integers(0, 4))
    return ViewParams(side, row0, col0, blur_on, sigma, flip_h, flip_v, rot_k)


def gaussian_kernel_3x3(sigma: float) -> np.ndarray:
    """Normalized 3x3 Gaussian weights, float32."""
    d = np.arange(-1, 2, dtype=np.float64)
    g = np.exp(-(d[:, None] ** 2 + d[None, :] ** 2) / (2.0 * sigma * sigma))
    return (g / g.sum()).astype(np.float32)


def _resize_coords(side: int):
    """Window-relative bilinear sampling plan for side -> 32 upsampling.

    Half-pixel convention: src = (i + 0.5) * side/32 - 0.5, clamped to
    the window. Returns (lo, hi, frac) with frac in float32.
    """
    src = (np.arange(TILE, dtype=np.float64) + 0.5) * (side / float(TILE)) - 0.5
    src = np.clip(src, 0.0, side - 1.0)
    lo = np.floor(src).astype(np.int64)
    frac = (src - lo).astype(np.float32)
    hi = np.minimum(lo + 1, side - 1)
    return lo, hi, frac


def _crop_resize_batch(tiles: np.ndarray, sides: np.ndarray,
                       row0: np.ndarray, col0: np.ndarray) -> np.ndarray:
    """Crop per-tile square windows and bilinearly resize back to 32x32.

    The lerp is written p0 + f*(p1 - p0) so a constant window stays
    bit-identical and a full-tile crop is an exact identity.
    """
    n = tiles.shape[0]
    lo = np.empty((n, TILE), np.int64)
    hi = np.empty((n, TILE), np.int64)
    frac = np.empty((n, TILE), np.float32)
    for i in range(n):
        lo[i], hi[i], frac[i] = _resize_coords(int(sides[i]))
    nn = np.arange(n)[:, None]
    r_lo = row0[:, None] + lo
    r_hi = row0[:, None] + hi
    a = tiles[nn, r_lo]
    b = tiles[nn, r_hi]
    fr = frac[:, :, None, None]
    rows = a + fr * (b - a)
    c_lo = (col0[:, None] + lo)[:, None, :, None]
    c_hi = (col0[:, None] + hi)[:, None, :, None]
    a = np.take_along_axis(rows, c_lo, axis=2)
    b = np.take_along_axis(rows, c_hi, axis=2)
    fc = frac[:, None, :, None]
    return a + fc * (b - a)


def _blur_batch(tiles: np.ndarray, kernels: np.ndarray,
                mask: np.ndarray) -> np.ndarray:
    """Blur masked tiles with per-tile 3x3 kernels, reflect padding.

    Written center + sum(w * (neighbor - center)) so constant tiles are
    preserved bit-exactly (the weights sum to 1).
    """
    out = tiles.copy()
    if not mask.any():
        return out
    sel = tiles[mask]
    k = kernels[mask]
    pad = np.pad(sel, ((0, 0), (1, 1), (1, 1), (0, 0)), mode="reflect")
    acc = sel.copy()
    for u in range(3):
        for v in range(3):
            w = k[:, u, v][:, None, None, None]
            acc = acc + w * (pad[:, u : u + TILE, v : v + TILE, :] - sel)
    out[mask] = acc
    return out


def _fliprot_batch(tiles: np.ndarray, flip_h: np.ndarray, flip_v: np.ndarray,
                   rot_k: np.ndarray) -> np.ndarray:
    """Apply horizontal flip, then vertical flip, then k x 90-degree rotation.

    Rotation is counterclockwise in the raster frame (x right, y down):
    one step sends pixel (0, 0) to (0, 31). Pure index permutation.
    """
    out = tiles.copy()
    if flip_h.any():
        out[flip_h] = out[flip_h, :, ::-1, :]
    if flip_v.any():
        out[flip_v] = out[flip_v, ::-1, :, :]
    for k in (1, 2, 3):
        sel = rot_k == k
        if sel.any():
            out[sel] = np.rot90(out[sel], -k, axes=(1, 2))
    return np.ascontiguousarray(out)


def _apply_params(tiles: np.ndarray, params: list) -> np.ndarray:
    """Run the full crop -> blur -> flip -> rotation composition."""
    sides = np.array([p.side for p in params], np.int64)
    row0 = np.array([p.row0 for p in params], np.int64)
    col0 = np.array([p.col0 for p in params], np.int64)
    mask = np.array([p.blur_on for p in params], bool)
    kernels = np.zeros((len(params), 3, 3), np.float32)
    for i, p in enumerate(params):
        if p.blur_on:
            kernels[i] = gaussian_kernel_3x3(p.sigma)
    flip_h = np.array([p.flip_h for p in params], bool)
    flip_v = np.array([p.flip_v for p in params], bool)
    rot_k = np.array([p.rot_k for p in params], np.int64)
    out = _crop_resize_batch(tiles, sides, row0, col0)
    out = _blur_batch(out, kernels, mask)
    return _fliprot_batch(out, flip_h, flip_v, rot_k)


def _check_tile(tile: np.ndarray) -> None:
    if tile.ndim != 3 or tile.shape[0] != TILE or tile.shape[1] != TILE:
        raise ConfigError("augmentation expects a 32x32xC tile")


def random_crop_resize(tile: np.ndarray, rng: np.random.Generator,
                       config: AugmentationConfig = AugmentationConfig()) -> np.ndarray:
    """Crop a random square window and bilinearly resize back to 32x32."""
    _check_tile(tile)
    lo, hi = config.crop_scale_range
    area = rng.uniform(lo, hi)
    side = max(1, min(TILE, int(round(TILE * np.sqrt(area)))))
    row0 = int(rng.integers(0, TILE - side + 1))
    col0 = int(rng.integers(0, TILE - side + 1))
    return _crop_resize_batch(tile[None], np.array([side]), np.array([row0]),
                              np.array([col0]))[0]


def gaussian_blur(tile: np.ndarray, rng: np.random.Generator,
                  config: AugmentationConfig = AugmentationConfig()) -> np.ndarray:
    """With probability blur_probability, 3x3 Gaussian blur per band."""
    _check_tile(tile)
    if rng.random() >= config.blur_probability:
        return tile.copy()
    sigma = float(rng.uniform(*config.blur_sigma_range))
    k = gaussian_kernel_3x3(sigma)[None]
    return _blur_batch(tile[None], k, np.array([True]))[0]


def random_flip(tile: np.ndarray, rng: np.random.Generator,
                config: AugmentationConfig = AugmentationConfig()) -> np.ndarray:
    """Horizontal flip then vertical flip, each with flip_probability."""
    _check_tile(tile)
    fh = bool(rng.random() < config.flip_probability)
    fv = bool(rng.random() < config.flip_probability)
    return _fliprot_batch(tile[None], np.array([fh]), np.array([fv]),
                          np.array([0]))[0]


def fixed_rotation(tile: np.ndarray, rng: np.random.Generator,
                   config: AugmentationConfig = AugmentationConfig()) -> np.ndarray:
    """Rotate by a uniform draw from {0, 90, 180, 270} degrees."""
    _check_tile(tile)
    k = int(rng.integers(0, 4))
    return _fliprot_batch(tile[None], np.array([False]), np.array([False]),
                          np.array([k]))[0]


def make_views(tile: np.ndarray, rng1: np.random.Generator,
               rng2: np.random.Generator,
               config: AugmentationConfig = AugmentationConfig()) -> tuple:
    """Two independently augmented views of one tile."""
    _check_tile(tile)
    p1 = draw_view_params(rng1, config)
    p2 = draw_view_params(rng2, config)
    batch = np.stack([tile, tile])
    out = _apply_params(batch, [p1, p2])
    return out[0], out[1]


def make_view_batch(tiles: np.ndarray, tile_indices: np.ndarray, seed: int,
                    epoch: int, view_index: int,
                    config: AugmentationConfig = AugmentationConfig()) -> np.ndarray:
    """One augmented view per tile, streams keyed (seed, epoch, index, view)."""
    params = [
        draw_view_params(view_rng(seed, epoch, int(idx), view_index), config)
        for idx in tile_indices
    ]
    return _apply_params(tiles, params)
