"""Spectral index baselines: NDVI, NBR and their temporal differences.

Both indices are normalized band ratios, so they are invariant to any
positive global rescaling of reflectance. Differences use the pre - post
convention: vegetation loss produces positive change scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, GridMismatchError

SINGLE_KINDS = ("ndvi", "nbr")
DIFF_KINDS = ("dndvi", "dnbr")


@dataclass(frozen=True)
class IndexMap:
    values: np.ndarray              # (H, W) float64, NaN where undefined
    geo: tuple
    crs_id: str
    index_kind: str
    timestamps: tuple               # (date,) or (pre_date, post_date)


def _normalized_difference(a, b):
    a = a.astype(np.float64, copy=False)
    b = b.astype(np.float64, copy=False)
    denom = a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = (a - b) / denom
    vals = np.where(denom == 0.0, np.nan, vals)
    return vals


def ndvi(scene):
    """(nir - red) / (nir + red); zero-denominator pixels become NaN."""
    vals = _normalized_difference(scene.band("nir"), scene.band("red"))
    return IndexMap(values=vals, geo=scene.geo, crs_id=scene.crs_id,
                    index_kind="ndvi", timestamps=(scene.timestamp,))


def nbr(scene):
    """(nir - swir) / (nir + swir); zero-denominator pixels become NaN."""
    vals = _normalized_difference(scene.band("nir"), scene.band("swir"))
    return IndexMap(values=vals, geo=scene.geo, crs_id=scene.crs_id,
                    index_kind="nbr", timestamps=(scene.timestamp,))


def diff_index(pre_map, post_map):
    """Per-pixel pre - post difference of two same-kind index maps."""
    if pre_map.index_kind != post_map.index_kind:
        raise DataError(
            f"index kind mismatch: {pre_map.index_kind} vs {post_map.index_kind}")
    if pre_map.index_kind not in SINGLE_KINDS:
        raise DataError(f"cannot difference a {pre_map.index_kind} map")
    if pre_map.values.shape != post_map.values.shape or pre_map.geo != post_map.geo:
        raise GridMismatchError("grid mismatch between index maps")
    vals = pre_map.values - post_map.values
    return IndexMap(values=vals, geo=pre_map.geo, crs_id=pre_map.crs_id,
                    index_kind="d" + pre_map.index_kind,
                    timestamps=(pre_map.timestamps[0], post_map.timestamps[0]))
