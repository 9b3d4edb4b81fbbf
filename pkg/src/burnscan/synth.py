"""Seeded synthetic pre/post fire scene pairs with exact ground truth.

A pair is built from two independent random streams:

* geography, keyed (seed, 101): the vegetation field, the shading
  field, and the burn blob's center/shape. Shared by every acquisition
  of that seed.
* acquisition, keyed (seed, 202, repeat): the post-scene brightness
  factor and both scenes' sensor noise. Different `repeat` values give
  new acquisitions over the same geography (the "local mode" corpus).

Spectra are vegetation-like (nir well above red) modulated by a smooth
shading field that darkens some terrain without changing its NDVI
(shade cancels in the ratio). Dark terrain is where the fixed additive
sensor noise overwhelms ratio indices at pixel scale; tile-averaged
embeddings are much less affected, which is the behavior the burned
area experiment is designed to expose.

Severity deltas inside the burn blob: black ash multiplies nir by 0.35
and the visible bands by 0.7; the white-ash core multiplies nir by 0.5
and adds +0.25 to the visible bands. The post scene is then scaled by a
global brightness factor in [0.9, 1.1] (NDVI-preserving) and both
scenes receive fresh per-pixel Gaussian noise before clamping to
[0, 1.2].
"""

import datetime
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ConfigError, DataError
from .raster import Scene

BANDS = ("red", "green", "blue", "nir")
BAND_MAP = {"red": 0, "green": 1, "blue": 2, "nir": 3}
_GEO_KEY = 101
_ACQ_KEY = 202
_BLOB_ATTEMPTS = 8

BLACK_NIR_FACTOR = 0.35
BLACK_VISIBLE_FACTOR = 0.7
WHITE_NIR_FACTOR = 0.5
WHITE_VISIBLE_DELTA = 0.25

CODE_UNBURNED = 0
CODE_BLACK_ASH = 1
CODE_WHITE_ASH = 2


@dataclass(frozen=True)
class SynthSpec:
    """Generator settings; defaults give a 512x512 four-band pair."""

    seed: int
    height: int = 512
    width: int = 512
    burn_fraction: float = 0.2
    white_ash_fraction: float = 0.2
    smoothness: float = 16.0
    noise_sigma: float = 0.01
    brightness_range: tuple = (0.9, 1.1)
    clamp_max: float = 1.2

    def validate(self) -> "SynthSpec":
        if self.height < 64 or self.width < 64:
            raise ConfigError("scene dimensions must be at least 64 px")
        if not (0.0 <= self.burn_fraction <= 1.0):
            raise ConfigError("burn_fraction must lie in [0, 1]")
        if not (0.0 <= self.white_ash_fraction <= 1.0):
            raise ConfigError("white_ash_fraction must lie in [0, 1]")
        if self.smoothness <= 0:
            raise ConfigError("smoothness must be positive")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        lo, hi = self.brightness_range
        if not (0.0 < lo <= hi):
            raise ConfigError("brightness_range must be positive and ordered")
        return self

    def to_doc(self) -> dict:
        return {
            "seed": self.seed,
            "height": self.height,
            "width": self.width,
            "burn_fraction": self.burn_fraction,
            "white_ash_fraction": self.white_ash_fraction,
            "smoothness": self.smoothness,
            "noise_sigma": self.noise_sigma,
            "brightness_range": list(self.brightness_range),
            "clamp_max": self.clamp_max,
        }

    @staticmethod
    def from_doc(doc: dict) -> "SynthSpec":
        try:
            return SynthSpec(
                seed=int(doc["seed"]),
                height=int(doc.get("height", 512)),
                width=int(doc.get("width", 512)),
                burn_fraction=float(doc.get("burn_fraction", 0.2)),
                white_ash_fraction=float(doc.get("white_ash_fraction", 0.2)),
                smoothness=float(doc.get("smoothness", 16.0)),
                noise_sigma=float(doc.get("noise_sigma", 0.01)),
                brightness_range=tuple(doc.get("brightness_range", (0.9, 1.1))),
                clamp_max=float(doc.get("clamp_max", 1.2)),
            ).validate()
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed generator spec: {exc}") from exc


def _stream(*key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def _smooth_field(rng: np.random.Generator, h: int, w: int, scale: float) -> np.ndarray:
    """Gaussian-filtered white noise rescaled to [0, 1]."""
    raw = rng.standard_normal((h, w))
    f = gaussian_filter(raw, sigma=scale, mode="reflect")
    lo, hi = f.min(), f.max()
    if hi == lo:
        return np.zeros_like(f)
    return (f - lo) / (hi - lo)


def _grow_blob(rng: np.random.Generator, h: int, w: int,
               target_px: float) -> tuple:
    """Star-convex blob with area close to target_px, plus its radial field.

    Returns (inside_mask, radial_ratio) where radial_ratio = r / rho(theta)
    supports carving interior cores by thresholding a smaller radius.
    """
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    for _ in range(_BLOB_ATTEMPTS):
        cy = rng.uniform(0.3, 0.7) * (h - 1)
        cx = rng.uniform(0.3, 0.7) * (w - 1)
        amps = rng.uniform(0, 1, size=4) * np.array([0.35, 0.20, 0.12, 0.08])
        phases = rng.uniform(0, 2 * np.pi, size=4)
        dy = yy - cy
        dx = xx - cx
        r = np.hypot(dy, dx)
        theta = np.arctan2(dy, dx)
        rho = np.ones_like(r)
        for m in range(4):
            rho += amps[m] * np.cos((m + 1) * theta + phases[m])
        rho = np.maximum(rho, 0.05)
        ratio = r / rho
        lo, hi = 0.0, float(np.hypot(h, w))
        best = None
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            area = float((ratio <= mid).sum())
            if best is None or abs(area - target_px) < abs(best[1] - target_px):
                best = (mid, area)
            if area < target_px:
                lo = mid
            else:
                hi = mid
        radius, area = best
        if abs(area - target_px) <= 0.25 * target_px:
            return ratio <= radius, ratio / radius
    raise DataError("blob growth failed to reach the target burn fraction")


def _carve_core(unit_ratio: np.ndarray, burned: np.ndarray,
                core_fraction: float) -> np.ndarray:
    """Interior sub-blob holding about core_fraction of the burned area."""
    burned_px = int(burned.sum())
    if burned_px == 0 or core_fraction <= 0:
        return np.zeros_like(burned)
    if core_fraction >= 1:
        return burned.copy()
    target = core_fraction * burned_px
    lo, hi = 0.0, 1.0
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        area = float((unit_ratio <= mid).sum())
        if area < target:
            lo = mid
        else:
            hi = mid
    return (unit_ratio <= 0.5 * (lo + hi)) & burned


def _base_bands(t: np.ndarray, shade: np.ndarray) -> np.ndarray:
    """Noise-free reflectance stack (H, W, 4) from vegetation and shading.

    Shade scales all bands together so it cancels in every normalized
    difference index.
    """
    red = shade * (0.06 + 0.14 * (1.0 - t))
    green = shade * (0.08 + 0.11 * (1.0 - t))
    blue = shade * (0.05 + 0.09 * (1.0 - t))
    nir = shade * (0.18 + 0.50 * t)
    return np.stack([red, green, blue, nir], axis=2)


def _apply_severity(base: np.ndarray, black: np.ndarray,
                    white: np.ndarray) -> np.ndarray:
    out = base.copy()
    vis = slice(0, 3)
    out[black, vis] = base[black, vis] * BLACK_VISIBLE_FACTOR
    out[black, 3] = base[black, 3] * BLACK_NIR_FACTOR
    out[white, vis] = base[white, vis] + WHITE_VISIBLE_DELTA
    out[white, 3] = base[white, 3] * WHITE_NIR_FACTOR
    return out


def generate_pair(spec: SynthSpec, repeat: int = 0) -> tuple:
    """Build (pre, post, burned_mask, severity_mask) for one seed.

    Fully deterministic; `repeat` re-draws only the acquisition nuisance
    (brightness and noise) over the same geography and advances the
    timestamps, supporting held-out acquisitions of one location.
    """
    spec.validate()
    h, w = spec.height, spec.width
    geo_rng = _stream(spec.seed, _GEO_KEY)
    t = _smooth_field(geo_rng, h, w, spec.smoothness)
    shade_raw = _smooth_field(geo_rng, h, w, spec.smoothness)
    shade = 0.15 + 0.85 * shade_raw

    if spec.burn_fraction > 0:
        burned, unit_ratio = _grow_blob(geo_rng, h, w, spec.burn_fraction * h * w)
        white = _carve_core(unit_ratio, burned, spec.white_ash_fraction)
    else:
        burned = np.zeros((h, w), dtype=bool)
        white = np.zeros((h, w), dtype=bool)
    black = burned & ~white

    acq_rng = _stream(spec.seed, _ACQ_KEY, repeat)
    brightness = acq_rng.uniform(*spec.brightness_range)
    noise_pre = acq_rng.normal(0.0, spec.noise_sigma, size=(h, w, 4))
    noise_post = acq_rng.normal(0.0, spec.noise_sigma, size=(h, w, 4))

    base = _base_bands(t, shade)
    pre_px = np.clip(base + noise_pre, 0.0, spec.clamp_max).astype(np.float32)
    post_base = _apply_severity(base, black, white)
    post_px = np.clip(brightness * post_base + noise_post,
                      0.0, spec.clamp_max).astype(np.float32)

    t0 = datetime.date(2020, 6, 1) + datetime.timedelta(days=90 * repeat)
    t1 = t0 + datetime.timedelta(days=45)
    geo = (300000.0, 4100000.0, 10.0)
    crs = "synthetic-utm"
    pre = Scene(pixels=pre_px, band_map=dict(BAND_MAP), geo=geo, crs_id=crs,
                timestamp=t0, scene_id=f"synth-{spec.seed}-r{repeat}-pre")
    post = Scene(pixels=post_px, band_map=dict(BAND_MAP), geo=geo, crs_id=crs,
                 timestamp=t1, scene_id=f"synth-{spec.seed}-r{repeat}-post")

    burned_mask = burned.astype(np.uint8)
    severity = np.full((h, w), CODE_UNBURNED, dtype=np.uint8)
    severity[black] = CODE_BLACK_ASH
    severity[white] = CODE_WHITE_ASH
    return pre, post, burned_mask, severity


def generate_training_corpus(specs, repeat: int = 0) -> list:
    """Scenes (pre then post, per spec) for a list of generator specs."""
    if not specs:
        raise ConfigError("at least one generator spec is required")
    scenes = []
    for spec in specs:
        pre, post, _, _ = generate_pair(spec, repeat=repeat)
        scenes.append(pre)
        scenes.append(post)
    return scenes
