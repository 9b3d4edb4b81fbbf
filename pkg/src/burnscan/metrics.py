"""Precision-recall evaluation and per-class F1 against ground-truth masks.

AUPRC is computed as step-wise average precision over a descending
score ranking with tied scores grouped into one threshold step:
AP = sum_k (R_k - R_{k-1}) * P_k with R_0 = 0. No trapezoidal
interpolation. All ratios are computed in float64.
"""

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .cluster import (CODE_BLACK_ASH, CODE_INVALID, CODE_UNBURNED,
                      CODE_WHITE_ASH, SeverityMap)
from .errors import DataError, GridMismatchError
from .geotiff import read_raster

SEVERITY_CLASSES = (
    (CODE_UNBURNED, "unburned"),
    (CODE_BLACK_ASH, "black_ash"),
    (CODE_WHITE_ASH, "white_ash"),
)


@dataclass(frozen=True)
class GroundTruthMask:
    """Label grid plus the closed set of codes it may contain."""

    labels: np.ndarray
    label_set: tuple
    geo: tuple = (0.0, 0.0, 1.0)
    crs_id: str = ""

    def __post_init__(self):
        if self.labels.ndim != 2:
            raise DataError("mask must be a 2-D label grid")
        bad = ~np.isin(self.labels, list(self.label_set))
        if bad.any():
            code = int(self.labels[bad][0])
            raise DataError(f"unknown label: {code}")


@dataclass(frozen=True)
class PRCurve:
    """(recall, precision) per threshold group, plus ranking counts."""

    points: tuple
    positives: int
    total: int


def load_mask(path, label_set, expected_shape: Optional[tuple] = None) -> GroundTruthMask:
    """Read a single-band label raster and validate codes and grid."""
    data, geo, crs_id, _ = read_raster(path)
    if data.shape[2] != 1:
        raise DataError("mask raster must be single-band")
    labels = data[:, :, 0]
    if not np.issubdtype(labels.dtype, np.integer):
        rounded = np.rint(labels)
        if not np.array_equal(rounded, labels):
            raise DataError("mask raster carries non-integer labels")
        labels = rounded.astype(np.int64)
    if expected_shape is not None and tuple(labels.shape) != tuple(expected_shape):
        raise GridMismatchError("grid mismatch between mask and evaluated map")
    return GroundTruthMask(labels=labels.astype(np.int64), label_set=tuple(label_set),
                           geo=geo, crs_id=crs_id)


def pr_curve(scores: np.ndarray, gt: np.ndarray) -> PRCurve:
    """Threshold sweep over non-NaN pixels ranked by score descending.

    Tied scores form one threshold group; one (recall, precision) point
    is emitted after each group. Needs at least one positive and one
    negative among the valid pixels.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(gt)
    if s.shape != y.shape:
        raise GridMismatchError("grid mismatch between scores and mask")
    valid = np.isfinite(s)
    sv = s[valid].ravel()
    yv = (y[valid].ravel() != 0).astype(np.int64)
    pos = int(yv.sum())
    neg = int(yv.size - pos)
    if pos == 0:
        raise DataError("no positives among valid pixels")
    if neg == 0:
        raise DataError("no negatives among valid pixels")
    order = np.argsort(-sv, kind="stable")
    sv = sv[order]
    yv = yv[order]
    # Indices where a threshold group (run of equal scores) ends.
    last_in_group = np.nonzero(np.diff(sv) != 0)[0]
    ends = np.concatenate([last_in_group, [sv.size - 1]])
    tp = np.cumsum(yv)[ends]
    fp = (ends + 1) - tp
    precision = tp / (tp + fp)
    recall = tp / pos
    points = tuple((float(r), float(p)) for r, p in zip(recall, precision))
    return PRCurve(points=points, positives=pos, total=int(yv.size))


def auprc(curve: PRCurve) -> float:
    """Step-wise average precision of a PR curve."""
    total = 0.0
    prev_r = 0.0
    for r, p in curve.points:
        total += (r - prev_r) * p
        prev_r = r
    return float(total)


def auprc_of(scores: np.ndarray, gt: np.ndarray) -> float:
    """Convenience: AUPRC of a score grid against a binary mask."""
    return auprc(pr_curve(scores, gt))


def f1_per_class(pred: SeverityMap, gt: GroundTruthMask) -> dict:
    """One-vs-rest F1 for each severity class.

    Pixels marked invalid in either input are excluded pairwise. A class
    absent from both prediction and ground truth yields NaN (undefined),
    with a warning, never a silent 0.
    """
    p = pred.labels
    g = gt.labels
    if p.shape != g.shape:
        raise GridMismatchError("grid mismatch between prediction and ground truth")
    valid = (p != CODE_INVALID) & (g != CODE_INVALID)
    pv = p[valid].astype(np.int64)
    gv = g[valid].astype(np.int64)
    out = {}
    for code, name in SEVERITY_CLASSES:
        tp = int(((pv == code) & (gv == code)).sum())
        fp = int(((pv == code) & (gv != code)).sum())
        fn = int(((pv != code) & (gv == code)).sum())
        if tp + fp + fn == 0:
            warnings.warn(f"class '{name}' absent from prediction and ground truth")
            out[name] = float("nan")
        else:
            out[name] = 2.0 * tp / (2.0 * tp + fp + fn)
    return out


def confusion_matrix(pred: SeverityMap, gt: GroundTruthMask) -> np.ndarray:
    """3x3 counts, rows = ground truth class, cols = predicted class."""
    p = pred.labels
    g = gt.labels
    if p.shape != g.shape:
        raise GridMismatchError("grid mismatch between prediction and ground truth")
    valid = (p != CODE_INVALID) & (g != CODE_INVALID)
    pv = p[valid]
    gv = g[valid]
    codes = [c for c, _ in SEVERITY_CLASSES]
    mat = np.zeros((3, 3), dtype=np.int64)
    for i, gc in enumerate(codes):
        for j, pc in enumerate(codes):
            mat[i, j] = int(((gv == gc) & (pv == pc)).sum())
    return mat


@dataclass(frozen=True)
class EvalReport:
    """AUPRC, per-class F1, confusion counts, and excluded-pixel count."""

    auprc: float
    f1: dict
    confusion: list
    ignored_pixels: int


def build_eval_report(scores: np.ndarray, burned_gt: np.ndarray,
                      pred: Optional[SeverityMap] = None,
                      severity_gt: Optional[GroundTruthMask] = None) -> EvalReport:
    """Assemble the standard report from a score grid and optional severity maps.

    ignored_pixels counts grid cells excluded from any comparison:
    NaN scores, plus invalid labels when severity inputs are given.
    """
    ap = auprc_of(scores, burned_gt)
    excluded = ~np.isfinite(np.asarray(scores, dtype=np.float64))
    f1 = {name: float("nan") for _, name in SEVERITY_CLASSES}
    conf = np.zeros((3, 3), dtype=np.int64)
    if pred is not None and severity_gt is not None:
        f1 = f1_per_class(pred, severity_gt)
        conf = confusion_matrix(pred, severity_gt)
        invalid = (pred.labels == CODE_INVALID) | (severity_gt.labels == CODE_INVALID)
        excluded = excluded | invalid
    return EvalReport(auprc=float(ap), f1=f1, confusion=conf.tolist(),
                      ignored_pixels=int(excluded.sum()))


def _json_safe(value):
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def save_eval_report(report: EvalReport, path) -> None:
    """Write the report as JSON; NaN F1 values serialize as null."""
    doc = {
        "auprc": report.auprc,
        "f1": {k: _json_safe(v) for k, v in report.f1.items()},
        "confusion": report.confusion,
        "ignored_pixels": report.ignored_pixels,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")


def load_eval_report(path) -> EvalReport:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        f1 = {k: (float("nan") if v is None else float(v))
              for k, v in doc["f1"].items()}
        return EvalReport(auprc=float(doc["auprc"]), f1=f1,
                          confusion=doc["confusion"],
                          ignored_pixels=int(doc["ignored_pixels"]))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"malformed evaluation report: {exc}") from exc
