"""Minimal GeoTIFF reading and writing on top of tifffile.

Georeferencing is carried by the two baseline GeoTIFF tags
(ModelPixelScale 33550, ModelTiepoint 33922) plus a JSON ImageDescription
with the CRS identifier and any extra metadata. Only square pixels and a
top-left tiepoint at raster (0, 0) are supported, which is all the
toolkit needs.
"""

from __future__ import annotations

import json

import numpy as np
import tifffile

from .errors import FormatError

TAG_PIXEL_SCALE = 33550
TAG_TIEPOINT = 33922

# Sample dtypes we accept from foreign files.
_READABLE = {"uint8", "uint16", "float32", "float64"}


def write_raster(path, data, geo, crs_id, metadata=None):
    """Write an (H, W) or (H, W, C) array as a GeoTIFF.

    geo is (origin_x, origin_y, pixel_size) with the origin at the
    top-left corner of pixel (0, 0). Multi-band data is stored planar.
    """
    data = np.asarray(data)
    origin_x, origin_y, pixel_size = geo
    desc = dict(metadata or {})
    desc["crs_id"] = crs_id
    extratags = [
        (TAG_PIXEL_SCALE, "d", 3, (float(pixel_size), float(pixel_size), 0.0)),
        (TAG_TIEPOINT, "d", 6, (0.0, 0.0, 0.0, float(origin_x), float(origin_y), 0.0)),
    ]
    if data.ndim == 3 and data.shape[2] == 1:
        data = data[:, :, 0]
    if data.ndim == 3:
        planes = np.ascontiguousarray(np.moveaxis(data, 2, 0))
        tifffile.imwrite(
            str(path), planes, planarconfig="separate", photometric="minisblack",
            extratags=extratags, description=json.dumps(desc, sort_keys=True),
        )
    elif data.ndim == 2:
        tifffile.imwrite(
            str(path), data, photometric="minisblack",
            extratags=extratags, description=json.dumps(desc, sort_keys=True),
        )
    else:
        raise FormatError(f"raster must be 2-D or 3-D, got {data.ndim}-D")


def read_raster(path):
    """Read a GeoTIFF into ((H, W, C) array, geo, crs_id, metadata).

    Accepts band-interleaved or planar layouts; single-band files come
    back with C == 1. geo falls back to (0, 0, 1) when the file carries
    no geotags; crs_id falls back to "" likewise.
    """
    try:
        tf = tifffile.TiffFile(str(path))
    except (FileNotFoundError, IsADirectoryError):
        raise
    except Exception as exc:
        raise FormatError(f"cannot read TIFF: {exc}") from exc
    with tf:
        series = tf.series[0]
        if str(series.dtype) not in _READABLE:
            raise FormatError(f"unsupported sample format: {series.dtype}")
        arr = series.asarray()
        axes = series.axes
        if arr.ndim == 2:
            arr = arr[:, :, None]
        elif arr.ndim == 3:
            if axes == "YXS":
                pass
            elif axes[1:] == "YX":  # SYX, CYX, QYX, ZYX, IYX: planar-ish
                arr = np.moveaxis(arr, 0, 2)
            else:
                raise FormatError(f"unsupported axes layout: {axes}")
        else:
            raise FormatError(f"unsupported raster rank: {arr.ndim}")

        page = tf.pages[0]
        scale_tag = page.tags.get(TAG_PIXEL_SCALE)
        tie_tag = page.tags.get(TAG_TIEPOINT)
        if scale_tag is not None and tie_tag is not None:
            sx = float(scale_tag.value[0])
            tie = tie_tag.value
            geo = (float(tie[3]), float(tie[4]), sx)
        else:
            geo = (0.0, 0.0, 1.0)

        crs_id = ""
        metadata = {}
        desc_tag = page.tags.get("ImageDescription")
        if desc_tag is not None:
            try:
                metadata = json.loads(desc_tag.value)
                crs_id = metadata.pop("crs_id", "")
            except (json.JSONDecodeError, TypeError):
                metadata = {}
    return np.ascontiguousarray(arr), geo, crs_id, metadata
