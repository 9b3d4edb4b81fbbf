"""Adam optimizer and the contrastive training loop.

Each epoch: shuffle tiles with a (seed, epoch)-keyed stream, cut the
permutation into batches, build two augmented views per tile with
(seed, epoch, tile_index, view_index)-keyed streams, interleave them as
rows (2k, 2k+1), run forward/loss/backward, and apply one Adam step per
batch. Early stopping watches the epoch-mean loss for a plateau; the
returned parameters are a snapshot from the epoch with the lowest
epoch-mean loss, which is not necessarily the last one.
"""

from dataclasses import dataclass, field

import numpy as np

from ..augment import AugmentationConfig, make_view_batch
from ..errors import ConfigError, DataError, NumericalError
from .arch import EncoderParams
from .loss import nt_xent_loss
from .model import backward, forward_full


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; defaults follow common contrastive practice."""

    temperature: float = 0.5
    batch_size: int = 256
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 1024
    patience: int = 50
    min_delta: float = 1e-4
    seed: int = 0

    def validate(self) -> "TrainConfig":
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.patience < 0:
            raise ConfigError("patience must be >= 0")
        if self.min_delta < 0:
            raise ConfigError("min_delta must be >= 0")
        return self


@dataclass
class AdamState:
    step: int
    m: list
    v: list


def adam_init(params: EncoderParams) -> AdamState:
    return AdamState(
        step=0,
        m=[np.zeros_like(t) for t in params.tensors],
        v=[np.zeros_like(t) for t in params.tensors],
    )


def adam_step(params: EncoderParams, grads: list, state: AdamState,
              cfg: TrainConfig) -> None:
    """One in-place Adam update over all parameter tensors."""
    state.step += 1
    t = state.step
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params.tensors, grads, state.m, state.v):
        g = g.astype(p.dtype, copy=False)
        m += (1.0 - b1) * (g - m)
        v += (1.0 - b2) * (g * g - v)
        p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.eps)


@dataclass
class TrainResult:
    """Best-loss parameters plus the full per-epoch loss history."""

    params: EncoderParams
    history: list
    best_epoch: int
    stopped_early: bool


def _tile_array(tiles) -> np.ndarray:
    if hasattr(tiles, "pixel_stack"):
        return tiles.pixel_stack()
    arr = np.asarray(tiles, dtype=np.float32)
    if arr.ndim != 4:
        raise DataError("training tiles must be (N, 32, 32, C)")
    return arr


def train(tiles, params: EncoderParams, cfg: TrainConfig,
          aug: AugmentationConfig = AugmentationConfig(),
          log_fn=None) -> TrainResult:
    """Contrastive training with plateau early stopping.

    Stops when the epoch-mean loss has failed to improve on the best
    seen by at least min_delta for more than `patience` consecutive
    epochs (patience 0 stops at the first non-improving epoch), or at
    max_epochs. Deterministic given (tiles, params, cfg, aug).
    """
    cfg.validate()
    aug.validate()
    stack = _tile_array(tiles)
    n = stack.shape[0]
    if n < cfg.batch_size:
        raise DataError("fewer tiles than one batch")

    best_loss = np.inf
    best_epoch = -1
    best_tensors = None
    plateau_best = np.inf
    wait = 0
    history = []
    stopped_early = False
    state = adam_init(params)

    for epoch in range(cfg.max_epochs):
        shuffle = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((cfg.seed, epoch)))
        )
        perm = shuffle.permutation(n)
        loss_sum = 0.0
        anchor_count = 0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            if idx.size < 2:
                continue  # a single leftover pair carries no contrast signal
            batch = stack[idx]
            v1 = make_view_batch(batch, idx, cfg.seed, epoch, 0, aug)
            v2 = make_view_batch(batch, idx, cfg.seed, epoch, 1, aug)
            x = np.empty((2 * idx.size,) + batch.shape[1:], dtype=np.float32)
            x[0::2] = v1
            x[1::2] = v2
            emb, cache = forward_full(params, x)
            try:
                loss, dz = nt_xent_loss(emb.z, cfg.temperature)
            except NumericalError as exc:
                raise NumericalError(
                    f"{exc} (epoch {epoch}, batch start {start})") from exc
            grads = backward(params, cache, dz)
            adam_step(params, grads, state, cfg)
            loss_sum += loss * 2 * idx.size
            anchor_count += 2 * idx.size
        epoch_loss = loss_sum / anchor_count
        if not np.isfinite(epoch_loss):
            raise NumericalError(f"non-finite epoch-mean loss at epoch {epoch}")
        history.append(epoch_loss)
        if log_fn is not None:
            log_fn(epoch, epoch_loss)

        if epoch_loss < best_loss:
            best_loss = epoch_loss
            best_epoch = epoch
            best_tensors = [t.copy() for t in params.tensors]

        if epoch_loss < plateau_best - cfg.min_delta:
            plateau_best = epoch_loss
            wait = 0
        else:
            wait += 1
            if wait >= cfg.patience and wait >= 1:
                stopped_early = True
                break

    out = EncoderParams(params.arch, best_tensors, seed=cfg.seed,
                        epochs_completed=best_epoch + 1)
    return TrainResult(params=out, history=history, best_epoch=best_epoch,
                       stopped_early=stopped_early)
