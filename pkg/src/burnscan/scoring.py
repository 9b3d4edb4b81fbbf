"""Change scoring: embed tile pairs and map embedding distances onto a grid.

The change score of a location is the distance between the embeddings
of its pre- and post-date tiles, S(x) = d(f(x_t1), f(x_t2)). Scores are
laid out on the tile-anchor grid (one cell per anchor, row-major), so a
ChangeMap has pixel size stride x the native pixel size and shares the
scene origin. Distances are computed in float64.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError, GridMismatchError, NumericalError
from .geotiff import write_raster
from .nn.arch import EncoderParams
from .nn.model import forward_full
from .raster import Scene
from .tiling import TILE_SIZE, TileSet, extract_tiles, grid_counts

METRICS = ("cosine", "euclidean")
REPRESENTATIONS = ("h", "z")
_EMBED_CHUNK = 512  # fixed so results never depend on caller batching


@dataclass(frozen=True)
class ChangeMap:
    """Per-tile change scores on the anchor grid.

    geo carries (origin_x, origin_y, pixel_size * stride); native_shape
    records the scene extent the map was computed from.
    """

    scores: np.ndarray
    stride: int
    geo: tuple
    crs_id: str
    metric: str
    representation: str
    native_shape: tuple

    def __post_init__(self):
        if self.scores.ndim != 2:
            raise DataError("change map scores must be 2-D")
        if self.metric not in METRICS:
            raise DataError(f"unknown metric: {self.metric}")
        if self.representation not in REPRESENTATIONS:
            raise DataError(f"unknown representation: {self.representation}")
        expect = grid_counts(self.native_shape[0], self.native_shape[1], self.stride)
        if tuple(self.scores.shape) != expect:
            raise DataError("change map grid does not match native shape and stride")


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), in [0, 2]. Zero-norm input is an error.

    Evaluated as |u/|u| - v/|v||^2 / 2, which equals 1 - cos exactly in
    real arithmetic, is never negative in floating point, and returns
    exactly 0.0 for identical inputs.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DataError("cosine_distance expects two equal-length vectors")
    nu = np.sqrt(u @ u)
    nv = np.sqrt(v @ v)
    if nu == 0.0 or nv == 0.0:
        raise NumericalError("zero-norm vector in cosine distance")
    d = u / nu - v / nv
    return float(min((d @ d) / 2.0, 2.0))


def euclidean_distance(u: np.ndarray, v: np.ndarray) -> float:
    """L2 distance between two equal-length vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DataError("euclidean_distance expects two equal-length vectors")
    d = u - v
    return float(np.sqrt(d @ d))


def embed_tiles(params: EncoderParams, ts: TileSet,
                representation: str = "z") -> np.ndarray:
    """One embedding row per tile in tileset order; inference path, no augmentation."""
    if representation not in REPRESENTATIONS:
        raise DataError(f"unknown representation: {representation}")
    stack = ts.pixel_stack()
    rows = []
    for start in range(0, stack.shape[0], _EMBED_CHUNK):
        emb, _ = forward_full(params, stack[start : start + _EMBED_CHUNK])
        rows.append(emb.h if representation == "h" else emb.z)
    return np.concatenate(rows, axis=0)


def _batch_distance(a: np.ndarray, b: np.ndarray, metric: str) -> np.ndarray:
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    if metric == "euclidean":
        d = a - b
        return np.sqrt((d * d).sum(axis=1))
    na = np.sqrt((a * a).sum(axis=1))
    nb = np.sqrt((b * b).sum(axis=1))
    if not (np.all(na > 0) and np.all(nb > 0)):
        raise NumericalError("zero-norm embedding row in change scoring")
    d = a / na[:, None] - b / nb[:, None]
    return np.minimum((d * d).sum(axis=1) / 2.0, 2.0)


def change_map(params: EncoderParams, scene_t1: Scene, scene_t2: Scene,
               stride: int, metric: str = "cosine",
               representation: str = "z") -> ChangeMap:
    """Score per-anchor change between two co-registered normalized scenes."""
    if metric not in METRICS:
        raise DataError(f"unknown metric: {metric}")
    if scene_t1.norm_fingerprint is None or scene_t2.norm_fingerprint is None:
        raise DataError("scenes must be normalized before change scoring")
    if scene_t1.norm_fingerprint != scene_t2.norm_fingerprint:
        raise DataError("normalization stats mismatch between scenes")
    if scene_t1.pixels.shape != scene_t2.pixels.shape or scene_t1.geo != scene_t2.geo:
        raise GridMismatchError("grid mismatch between scenes")
    ts1 = extract_tiles(scene_t1, stride)
    ts2 = extract_tiles(scene_t2, stride)
    if scene_t1.timestamp is not None and scene_t2.timestamp is not None:
        if not scene_t1.timestamp < scene_t2.timestamp:
            raise DataError("non-increasing timestamps between scenes")
    e1 = embed_tiles(params, ts1, representation)
    e2 = embed_tiles(params, ts2, representation)
    scores = _batch_distance(e1, e2, metric)
    h, w = scene_t1.pixels.shape[:2]
    grid = grid_counts(h, w, stride)
    ox, oy, ps = scene_t1.geo
    return ChangeMap(
        scores=scores.reshape(grid),
        stride=stride,
        geo=(ox, oy, ps * stride),
        crs_id=scene_t1.crs_id,
        metric=metric,
        representation=representation,
        native_shape=(h, w),
    )


def _nearest_tile_index(n_native: int, n_tiles: int, stride: int) -> np.ndarray:
    """Nearest tile-center index per native coordinate, ties to the lower index.

    Tile i's center sits at i*stride + (TILE_SIZE-1)/2. Comparisons use
    exact integer arithmetic on doubled coordinates.
    """
    y = np.arange(n_native, dtype=np.int64)
    num = 2 * y - (TILE_SIZE - 1) - stride
    idx = -(-num // (2 * stride))  # ceil division; exact tie lands on the lower index
    return np.clip(idx, 0, n_tiles - 1)


def upsample_to_native(cm: ChangeMap, height: int, width: int) -> np.ndarray:
    """Expand a ChangeMap to native resolution by nearest tile center.

    Pixels beyond the last tile footprint (trailing rows/cols the tiling
    never covered) become NaN.
    """
    if (height, width) != tuple(cm.native_shape):
        raise DataError("dimension mismatch with change map provenance")
    r, q = cm.scores.shape
    ri = _nearest_tile_index(height, r, cm.stride)
    ci = _nearest_tile_index(width, q, cm.stride)
    out = cm.scores[np.ix_(ri, ci)].astype(np.float64)
    cover_r = (r - 1) * cm.stride + TILE_SIZE
    cover_c = (q - 1) * cm.stride + TILE_SIZE
    out[cover_r:, :] = np.nan
    out[:, cover_c:] = np.nan
    return out


def save_change_map(cm: ChangeMap, path, native: bool = False) -> None:
    """Write a ChangeMap as a single-band float32 GeoTIFF.

    native=False writes the stride-resolution grid; native=True writes
    the nearest-center upsampled grid at the scene's own resolution
    (NaN outside tile footprints).
    """
    meta = {
        "kind": "change_map",
        "metric": cm.metric,
        "representation": cm.representation,
        "stride": cm.stride,
    }
    if native:
        h, w = cm.native_shape
        data = upsample_to_native(cm, h, w).astype(np.float32)
        ox, oy, ps = cm.geo
        geo = (ox, oy, ps / cm.stride)
    else:
        data = cm.scores.astype(np.float32)
        geo = cm.geo
    write_raster(path, data, geo, cm.crs_id, metadata=meta)
