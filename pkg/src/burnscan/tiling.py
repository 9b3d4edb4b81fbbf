"""Fixed-size tile extraction, cross-date pairing and binary persistence.

Tiles are always TILE_SIZE x TILE_SIZE x C windows anchored on a regular
stride grid, enumerated row-major. Anchors that would not fit a full
tile are dropped; there is no padding.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FormatError

TILE_SIZE = 32
MAX_STRIDE = TILE_SIZE * 4

MAGIC = b"BSCANTILESET"          # 12 bytes; header is MAGIC + u32 version
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Tile:
    pixels: np.ndarray            # (32, 32, C) float32
    anchor: tuple                 # (row, col) of the top-left pixel
    scene_id: str = ""
    timestamp: object = None


@dataclass(frozen=True)
class TileSet:
    tiles: tuple                  # row-major by anchor
    stride: int
    grid_shape: tuple             # (H, W) of the source scene
    scene_id: str = ""
    timestamp: object = None

    def __len__(self):
        return len(self.tiles)

    def pixel_stack(self):
        """All tile pixels as one (N, 32, 32, C) array."""
        if not self.tiles:
            return np.zeros((0, TILE_SIZE, TILE_SIZE, 0), dtype=np.float32)
        return np.stack([t.pixels for t in self.tiles])

    def anchors(self):
        return np.array([t.anchor for t in self.tiles], dtype=np.int64)


@dataclass(frozen=True)
class TilePair:
    t1: Tile
    t2: Tile

    def __post_init__(self):
        if self.t1.anchor != self.t2.anchor:
            raise DataError("tile pair anchors differ")
        if self.t1.pixels.shape != self.t2.pixels.shape:
            raise DataError("tile pair channel counts differ")


def grid_counts(h, w, stride):
    """Number of tile anchors along (rows, cols) for an H x W grid."""
    return (h - TILE_SIZE) // stride + 1, (w - TILE_SIZE) // stride + 1


def extract_tiles(scene, stride):
    """Extract all full 32 x 32 tiles at the given stride, row-major."""
    if not 1 <= stride <= MAX_STRIDE:
        raise DataError(f"stride must be in [1, {MAX_STRIDE}], got {stride}")
    h, w = scene.height, scene.width
    if h < TILE_SIZE or w < TILE_SIZE:
        raise DataError(f"scene {h}x{w} is smaller than one {TILE_SIZE}px tile")
    px = scene.pixels.astype(np.float32, copy=False)
    nrows, ncols = grid_counts(h, w, stride)
    tiles = []
    for i in range(nrows):
        r = i * stride
        for j in range(ncols):
            c = j * stride
            tiles.append(Tile(
                pixels=np.ascontiguousarray(px[r:r + TILE_SIZE, c:c + TILE_SIZE, :]),
                anchor=(r, c), scene_id=scene.scene_id, timestamp=scene.timestamp))
    return TileSet(tiles=tuple(tiles), stride=int(stride), grid_shape=(h, w),
                   scene_id=scene.scene_id, timestamp=scene.timestamp)


def pair_tiles(a, b):
    """Pair tiles of two tilesets by anchor; `a` must be strictly earlier."""
    if a.stride != b.stride:
        raise DataError(f"stride mismatch: {a.stride} vs {b.stride}")
    if a.grid_shape != b.grid_shape:
        raise DataError(f"grid mismatch: {a.grid_shape} vs {b.grid_shape}")
    if a.timestamp is None or b.timestamp is None:
        raise DataError("cannot pair tilesets without timestamps")
    if not a.timestamp < b.timestamp:
        raise DataError("non-increasing timestamps between tilesets")
    if len(a) != len(b):
        raise DataError(f"tile count mismatch: {len(a)} vs {len(b)}")
    return [TilePair(t1=ta, t2=tb) for ta, tb in zip(a.tiles, b.tiles)]


def save_tileset(ts, path):
    """Write the binary tile format: header, then (row, col, pixels) records.

    Layout (all little-endian): MAGIC + u32 version; u32 count, C, stride,
    H, W; per tile u32 row, u32 col then 32*32*C float32 values stored
    channel-planar.
    """
    count = len(ts.tiles)
    channels = ts.tiles[0].pixels.shape[2] if count else 0
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<5I", count, channels, ts.stride, *ts.grid_shape))
        for t in ts.tiles:
            fh.write(struct.pack("<2I", *t.anchor))
            planar = np.ascontiguousarray(np.moveaxis(t.pixels, 2, 0), dtype="<f4")
            fh.write(planar.tobytes())


def load_tileset(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:12] != MAGIC:
        raise FormatError("bad magic bytes: not a tileset file")
    (version,) = struct.unpack_from("<I", blob, 12)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported tileset version: {version}")
    count, channels, stride, h, w = struct.unpack_from("<5I", blob, 16)
    offset = 36
    record = 8 + TILE_SIZE * TILE_SIZE * channels * 4
    if len(blob) - offset != count * record:
        raise FormatError("truncated tileset payload")
    tiles = []
    for _ in range(count):
        row, col = struct.unpack_from("<2I", blob, offset)
        start = offset + 8
        planar = np.frombuffer(blob, dtype="<f4", count=TILE_SIZE * TILE_SIZE * channels,
                               offset=start).reshape(channels, TILE_SIZE, TILE_SIZE)
        tiles.append(Tile(pixels=np.ascontiguousarray(np.moveaxis(planar, 0, 2)),
                          anchor=(int(row), int(col))))
        offset += record
    return TileSet(tiles=tuple(tiles), stride=int(stride), grid_shape=(int(h), int(w)))
