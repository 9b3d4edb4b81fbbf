"""Small convolutional encoder, contrastive loss, optimizer, training loop."""

from .arch import ArchDescriptor, EncoderParams, init_encoder
from .model import EmbeddingBatch, forward, forward_full, backward
from .loss import nt_xent_loss
from .train import TrainConfig, TrainResult, train, adam_init, adam_step
from .checkpoint import save_checkpoint, load_checkpoint

__all__ = [
    "ArchDescriptor",
    "EncoderParams",
    "init_encoder",
    "EmbeddingBatch",
    "forward",
    "forward_full",
    "backward",
    "nt_xent_loss",
    "TrainConfig",
    "TrainResult",
    "train",
    "adam_init",
    "adam_step",
    "save_checkpoint",
    "load_checkpoint",
]
