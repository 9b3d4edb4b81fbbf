"""PCA features and k-means severity classification of change scores.

Severity follows the descending-centroid rule: the cluster with the
highest mean change score is white ash (most severe), the lowest is
unburned, anything between is black ash. NaN scores become `invalid`.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError, GridMismatchError
from .geotiff import write_raster
from .raster import Scene

CODE_UNBURNED = 0
CODE_BLACK_ASH = 1
CODE_WHITE_ASH = 2
CODE_INVALID = 255
CLASS_NAMES = {
    CODE_UNBURNED: "unburned",
    CODE_BLACK_ASH: "black_ash",
    CODE_WHITE_ASH: "white_ash",
    CODE_INVALID: "invalid",
}


@dataclass(frozen=True)
class PCAModel:
    """Mean, orthonormal components (rows), and descending variances."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    total_variance: float

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance == 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / self.total_variance


@dataclass(frozen=True)
class ClusterModel:
    """k-means centroids with the fit's seed and final inertia."""

    centroids: np.ndarray
    seed: int
    inertia: float
    n_iter: int
    inertia_history: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class SeverityMap:
    """Label grid over {unburned, black_ash, white_ash, invalid} codes."""

    labels: np.ndarray
    geo: Optional[tuple] = None
    crs_id: str = ""

    def __post_init__(self):
        known = np.isin(self.labels, list(CLASS_NAMES))
        if not known.all():
            raise DataError("severity map contains unknown label codes")

    def class_fractions(self) -> dict:
        total = self.labels.size
        return {
            name: float((self.labels == code).sum()) / total
            for code, name in CLASS_NAMES.items()
        }


def pca_fit(samples: np.ndarray, p: int) -> PCAModel:
    """Top-p principal components of mean-centered samples.

    Covariance uses the 1/(M-1) normalization; components are rows,
    each with its largest-magnitude entry made positive.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError("pca_fit needs at least 2 samples of equal dimension")
    m, d = x.shape
    if not (1 <= p <= d):
        raise ConfigError("component count must satisfy 1 <= p <= D")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / (m - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1][:p]
    components = evecs[:, order].T.copy()
    variances = np.maximum(evals[order], 0.0)
    for i, row in enumerate(components):
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            components[i] = -row
    total = float(np.maximum(evals, 0.0).sum())
    if total == 0.0:
        warnings.warn("zero-variance data: principal components are arbitrary")
    return PCAModel(mean=mean, components=components,
                    explained_variance=variances, total_variance=total)


def pca_project(model: PCAModel, samples: np.ndarray) -> np.ndarray:
    """(x - mean) @ components^T for each sample row."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.mean.shape[0]:
        raise DataError("dimension mismatch between samples and PCA model")
    return (x - model.mean) @ model.components.T


def _plus_plus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    m = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    centroids[0] = x[int(rng.integers(m))]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            pick = int(rng.choice(m, p=probs))
        else:
            pick = int(rng.integers(m))
        centroids[i] = x[pick]
        d2 = np.minimum(d2, ((x - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeans_fit(points: np.ndarray, k: int, seed: int,
               max_iter: int = 100, tol: float = 1e-6) -> ClusterModel:
    """Seeded k-means++ plus Lloyd iterations.

    Stops after max_iter iterations or when no centroid moves by tol or
    more. Ties in assignment go to the lowest cluster index; an empty
    cluster is re-seeded from the point farthest from its centroid.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DataError("points must be a vector or an MxD matrix")
    if not np.isfinite(x).all():
        raise DataError("non-finite points in k-means input")
    m = x.shape[0]
    if m < k or k < 1:
        raise DataError("k-means needs at least k finite points")

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    centroids = _plus_plus_init(x, k, rng)
    history = []
    assign = None
    for it in range(max_iter):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)  # ties resolve to the lowest index
        mind2 = d2[np.arange(m), assign]
        history.append(float(mind2.sum()))
        new_centroids = centroids.copy()
        for c in range(k):
            mask = assign == c
            if mask.any():
                new_centroids[c] = x[mask].mean(axis=0)
            else:
                far = int(np.argmax(mind2))
                new_centroids[c] = x[far]
                mind2 = mind2.copy()
                mind2[far] = 0.0
        movement = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if movement < tol:
            break
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assign = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(m), assign].sum())
    return ClusterModel(centroids=centroids, seed=seed, inertia=inertia,
                        n_iter=len(history), inertia_history=tuple(history))


def kmeans_assign(model: ClusterModel, points: np.ndarray) -> np.ndarray:
    """Nearest-centroid labels, ties to the lowest cluster index."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    d2 = ((x[:, None, :] - model.centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def severity_codes_by_rank(k: int) -> list:
    """Class code per descending-centroid rank: white, black..., unburned."""
    if k == 1:
        return [CODE_WHITE_ASH]
    codes = [CODE_WHITE_ASH] + [CODE_BLACK_ASH] * (k - 2) + [CODE_UNBURNED]
    return codes


def classify_severity(scores: np.ndarray, k: int = 3, seed: int = 0,
                      geo: Optional[tuple] = None, crs_id: str = "") -> tuple:
    """Cluster a score grid into severity classes.

    Runs 1-D k-means over the non-NaN scores, ranks clusters by centroid
    descending, and maps rank 0 -> white_ash, last rank -> unburned,
    anything between -> black_ash. NaN cells become invalid. Returns
    (SeverityMap, ClusterModel).
    """
    grid = np.asarray(scores, dtype=np.float64)
    valid = np.isfinite(grid)
    vals = grid[valid]
    if vals.size < k:
        raise DataError("insufficient valid scores for severity clustering")
    model = kmeans_fit(vals[:, None], k, seed)
    flat_centroids = model.centroids[:, 0]
    if np.unique(flat_centroids).size < k:
        warnings.warn("degenerate severity clustering: fewer than k distinct centroids")
    order = np.argsort(-flat_centroids, kind="stable")
    code_of_cluster = np.empty(k, dtype=np.uint8)
    for rank, cluster in enumerate(order):
        code_of_cluster[cluster] = severity_codes_by_rank(k)[rank]
    labels = np.full(grid.shape, CODE_INVALID, dtype=np.uint8)
    labels[valid] = code_of_cluster[kmeans_assign(model, vals[:, None])]
    return SeverityMap(labels=labels, geo=geo, crs_id=crs_id), model


def pca_change_features(pre: Scene, post: Scene) -> np.ndarray:
    """Per-pixel band-difference features (pre - post), one row per pixel.

    Columns follow the sorted band-role order so the feature layout does
    not depend on channel storage order.
    """
    if pre.pixels.shape[:2] != post.pixels.shape[:2] or pre.geo != post.geo:
        raise GridMismatchError("grid mismatch between scenes")
    if set(pre.band_map) != set(post.band_map):
        raise DataError("band role mismatch between scenes")
    roles = sorted(pre.band_map)
    cols = [
        pre.band(r).astype(np.float64) - post.band(r).astype(np.float64)
        for r in roles
    ]
    return np.stack([c.ravel() for c in cols], axis=1)


def pca_change_score(pre: Scene, post: Scene, p: int = 3) -> tuple:
    """First-principal-component change score grid plus the fitted model.

    The eigenvector sign convention knows nothing about change, so the
    score is oriented afterwards: flipped if it correlates negatively
    with the per-pixel difference magnitude, making larger scores mean
    larger band-space change.
    """
    feats = pca_change_features(pre, post)
    model = pca_fit(feats, min(p, feats.shape[1]))
    first = pca_project(model, feats)[:, 0]
    mag = np.sqrt((feats * feats).sum(axis=1))
    if float((first - first.mean()) @ (mag - mag.mean())) < 0:
        first = -first
    return first.reshape(pre.pixels.shape[:2]), model


def pca_severity_baseline(pre: Scene, post: Scene, p: int = 3, k: int = 3,
                          seed: int = 0) -> tuple:
    """PCA + k-means baseline: severity labels from band-difference features.

    Fits PCA (p components, capped at the band count) on the per-pixel
    differences, scores change by the oriented first component, and
    classifies severity on it. Returns (SeverityMap, PCAModel, ClusterModel).
    """
    grid, model = pca_change_score(pre, post, p)
    sev, cm = classify_severity(grid, k=k, seed=seed, geo=pre.geo,
                                crs_id=pre.crs_id)
    return sev, model, cm


def save_severity_map(sm: SeverityMap, path) -> None:
    """Write severity labels as a single-band uint8 GeoTIFF."""
    if sm.geo is None:
        raise DataError("severity map has no georeferencing to write")
    meta = {"kind": "severity", "codes": {str(c): n for c, n in CLASS_NAMES.items()}}
    write_raster(path, sm.labels, sm.geo, sm.crs_id, metadata=meta)
