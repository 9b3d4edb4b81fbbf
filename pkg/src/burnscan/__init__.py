"""Unsupervised burned-area mapping from pre/post multispectral scene pairs.

A small convolutional encoder is trained with a contrastive objective on
32 x 32 tiles from unlabeled imagery; per-tile embedding distances
between the two acquisitions form a change map that is compared against
spectral-index baselines (dNDVI, dNBR), upsampled to the native pixel
grid, and clustered into burn-severity classes. A seeded synthetic scene
generator with exact ground-truth masks supports end-to-end evaluation
without proprietary imagery.
"""

from .augment import AugmentationConfig, make_view_batch, make_views, view_rng
from .cluster import (ClusterModel, PCAModel, SeverityMap, classify_severity,
                      kmeans_assign, kmeans_fit, pca_change_score, pca_fit,
                      pca_project, pca_severity_baseline, save_severity_map)
from .colormap import save_score_png, save_severity_png
from .config import RunConfig, SceneRef, load_run_config
from .errors import (BurnscanError, ConfigError, DataError, FormatError,
                     GridMismatchError, MissingBandError, NumericalError)
from .indices import IndexMap, diff_index, nbr, ndvi
from .metrics import (EvalReport, GroundTruthMask, PRCurve, auprc, auprc_of,
                      build_eval_report, confusion_matrix, f1_per_class,
                      load_eval_report, load_mask, pr_curve, save_eval_report)
from .nn import (ArchDescriptor, EncoderParams, TrainConfig, TrainResult,
                 init_encoder, load_checkpoint, nt_xent_loss, save_checkpoint,
                 train)
from .raster import (NormStats, RegionOfInterest, Scene, clip,
                     compute_norm_stats, load_norm_stats, load_scene,
                     normalize, resample_to, save_norm_stats, save_scene)
from .scoring import (ChangeMap, change_map, cosine_distance, embed_tiles,
                      euclidean_distance, save_change_map, upsample_to_native)
from .synth import SynthSpec, generate_pair, generate_training_corpus
from .tiling import (TILE_SIZE, Tile, TilePair, TileSet, extract_tiles,
                     grid_counts, load_tileset, pair_tiles, save_tileset)

__version__ = "0.1.0"

__all__ = [
    "AugmentationConfig", "make_view_batch", "make_views", "view_rng",
    "ClusterModel", "PCAModel", "SeverityMap", "classify_severity",
    "kmeans_assign", "kmeans_fit", "pca_change_score", "pca_fit",
    "pca_project", "pca_severity_baseline", "save_severity_map",
    "save_score_png", "save_severity_png",
    "RunConfig", "SceneRef", "load_run_config",
    "BurnscanError", "ConfigError", "DataError", "FormatError",
    "GridMismatchError", "MissingBandError", "NumericalError",
    "IndexMap", "diff_index", "nbr", "ndvi",
    "EvalReport", "GroundTruthMask", "PRCurve", "auprc", "auprc_of",
    "build_eval_report", "confusion_matrix", "f1_per_class",
    "load_eval_report", "load_mask", "pr_curve", "save_eval_report",
    "ArchDescriptor", "EncoderParams", "TrainConfig", "TrainResult",
    "init_encoder", "load_checkpoint", "nt_xent_loss", "save_checkpoint",
    "train",
    "NormStats", "RegionOfInterest", "Scene", "clip", "compute_norm_stats",
    "load_norm_stats", "load_scene", "normalize", "resample_to",
    "save_norm_stats", "save_scene",
    "ChangeMap", "change_map", "cosine_distance", "embed_tiles",
    "euclidean_distance", "save_change_map", "upsample_to_native",
    "SynthSpec", "generate_pair", "generate_training_corpus",
    "TILE_SIZE", "Tile", "TilePair", "TileSet", "extract_tiles",
    "grid_counts", "load_tileset", "pair_tiles", "save_tileset",
    "__version__",
]
