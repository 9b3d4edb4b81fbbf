"""Score-map and severity-map PNG rendering.

Two colormaps for continuous score maps, both 256-entry lookup tables:

* ``grayscale``: linear ramp, 0 maps to black and the map's maximum
  finite value to white. Values below 0 are clipped to 0.
* ``viridis-like``: 256 entries linearly interpolated between the nine
  anchor colors in ``_VIRIDIS_ANCHORS`` (dark purple through teal to
  yellow), applied over the same 0-to-max range.

NaN pixels (e.g. the uncovered margin of an upsampled map) render as
entry 0. Severity label maps use the fixed class palette in
``SEVERITY_PALETTE`` and a transparent treatment is deliberately not
offered: every pixel gets an opaque color so artifacts diff cleanly.
"""

import numpy as np
from PIL import Image

from .cluster import CODE_BLACK_ASH, CODE_INVALID, CODE_UNBURNED, CODE_WHITE_ASH
from .errors import ConfigError, DataError

# position in [0, 1] -> RGB; sampled along the familiar dark-to-yellow
# perceptual gradient.
_VIRIDIS_ANCHORS = (
    (0.000, (68, 1, 84)),
    (0.125, (71, 44, 122)),
    (0.250, (59, 81, 139)),
    (0.375, (44, 113, 142)),
    (0.500, (33, 144, 141)),
    (0.625, (39, 173, 129)),
    (0.750, (92, 200, 99)),
    (0.875, (170, 220, 50)),
    (1.000, (253, 231, 37)),
)

SEVERITY_PALETTE = {
    CODE_UNBURNED: (34, 102, 51),
    CODE_BLACK_ASH: (64, 64, 64),
    CODE_WHITE_ASH: (245, 245, 245),
    CODE_INVALID: (255, 0, 255),
}


def _interp_table(anchors) -> np.ndarray:
    pos = np.array([p for p, _ in anchors], dtype=np.float64)
    rgb = np.array([c for _, c in anchors], dtype=np.float64)
    x = np.linspace(0.0, 1.0, 256)
    out = np.empty((256, 3), dtype=np.uint8)
    for ch in range(3):
        out[:, ch] = np.rint(np.interp(x, pos, rgb[:, ch])).astype(np.uint8)
    return out


GRAYSCALE = np.repeat(np.arange(256, dtype=np.uint8)[:, None], 3, axis=1)
VIRIDIS_LIKE = _interp_table(_VIRIDIS_ANCHORS)
COLORMAPS = {"grayscale": GRAYSCALE, "viridis-like": VIRIDIS_LIKE}


def score_indices(values: np.ndarray) -> np.ndarray:
    """Quantize a score grid to table indices 0..255 over [0, max]."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise DataError(f"score grid must be 2-D, got {v.ndim}-D")
    finite = np.isfinite(v)
    hi = float(v[finite].max()) if finite.any() else 0.0
    if hi > 0.0:
        norm = np.clip(v, 0.0, hi) / hi
    else:
        norm = np.zeros_like(v)
    idx = np.rint(norm * 255.0)
    idx[~finite] = 0
    return idx.astype(np.uint8)


def save_score_png(values: np.ndarray, path, colormap: str = "grayscale") -> None:
    """Render a score grid to an RGB PNG with the named colormap."""
    if colormap not in COLORMAPS:
        known = ", ".join(sorted(COLORMAPS))
        raise ConfigError(f"unknown colormap: {colormap} (expected one of {known})")
    idx = score_indices(values)
    Image.fromarray(COLORMAPS[colormap][idx], mode="RGB").save(str(path), format="PNG")


def save_severity_png(labels: np.ndarray, path) -> None:
    """Render a severity label grid to a paletted PNG."""
    lab = np.asarray(labels)
    if lab.ndim != 2:
        raise DataError(f"label grid must be 2-D, got {lab.ndim}-D")
    known = set(SEVERITY_PALETTE)
    present = set(np.unique(lab).tolist())
    if not present <= known:
        raise DataError(f"unknown severity codes: {sorted(present - known)}")
    palette = np.zeros((256, 3), dtype=np.uint8)
    for code, rgb in SEVERITY_PALETTE.items():
        palette[code] = rgb
    img = Image.fromarray(lab.astype(np.uint8), mode="P")
    img.putpalette(palette.ravel().tolist())
    img.save(str(path), format="PNG")
