"""Architecture description, parameter container, and initialization.

The encoder is a stack of 3x3 stride-2 same-padded conv blocks with
ReLU, global average pooling to the embedding h, then a two-layer
projection head (affine -> ReLU -> affine) producing z.

Parameter tensor order (the canonical descriptor order used by the
optimizer and the checkpoint payload):

    conv1_w (O,I,3,3), conv1_b (O,), conv2_w, conv2_b, ...,
    head1_w (in,out), head1_b (out,), head2_w, head2_b

Conv kernels are stored OIHW (out_channels, in_channels, kh, kw);
affine weights are (in, out) applied as y = x @ W + b.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

KERNEL = 3
STRIDE = 2
PAD = 1
INPUT_SIZE = 32
DEFAULT_BLOCKS = (32, 64, 128, 256)


@dataclass(frozen=True)
class ArchDescriptor:
    """Shape-level description of the encoder and projection head."""

    input_channels: int
    blocks: tuple = DEFAULT_BLOCKS
    projection_dim: int = 128
    input_size: int = INPUT_SIZE

    def __post_init__(self):
        if self.input_channels < 1:
            raise ConfigError("input_channels must be >= 1")
        if len(self.blocks) < 1 or any(int(b) < 1 for b in self.blocks):
            raise ConfigError("conv blocks must be a non-empty list of positive widths")
        if self.projection_dim < 1:
            raise ConfigError("projection_dim must be >= 1")
        # Each stride-2 block halves the spatial extent; the pooled
        # feature map must keep at least one pixel.
        if 2 ** len(self.blocks) > self.input_size:
            raise ConfigError("spatial size underflow: too many stride-2 blocks "
                              f"for a {self.input_size} px input")
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))

    @property
    def embedding_dim(self) -> int:
        """Width of h: the last conv block's channel count."""
        return self.blocks[-1]

    @property
    def final_spatial(self) -> int:
        size = self.input_size
        for _ in self.blocks:
            size = (size + 2 * PAD - KERNEL) // STRIDE + 1
        return size

    def param_shapes(self) -> list:
        """Tensor shapes in canonical descriptor order."""
        shapes = []
        c_in = self.input_channels
        for c_out in self.blocks:
            shapes.append((c_out, c_in, KERNEL, KERNEL))
            shapes.append((c_out,))
            c_in = c_out
        e = self.embedding_dim
        shapes.append((e, e))
        shapes.append((e,))
        shapes.append((e, self.projection_dim))
        shapes.append((self.projection_dim,))
        return shapes

    def to_doc(self) -> dict:
        return {
            "input_channels": self.input_channels,
            "blocks": list(self.blocks),
            "projection_dim": self.projection_dim,
            "input_size": self.input_size,
        }

    @staticmethod
    def from_doc(doc: dict) -> "ArchDescriptor":
        try:
            return ArchDescriptor(
                input_channels=int(doc["input_channels"]),
                blocks=tuple(int(b) for b in doc["blocks"]),
                projection_dim=int(doc["projection_dim"]),
                input_size=int(doc["input_size"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed architecture description: {exc}") from exc


@dataclass
class EncoderParams:
    """Ordered parameter tensors plus training metadata."""

    arch: ArchDescriptor
    tensors: list
    seed: int = 0
    epochs_completed: int = 0

    def __post_init__(self):
        shapes = self.arch.param_shapes()
        if len(self.tensors) != len(shapes):
            raise ConfigError("parameter count does not match architecture")
        for t, s in zip(self.tensors, shapes):
            if tuple(t.shape) != tuple(s):
                raise ConfigError(f"parameter shape {t.shape} does not match {s}")

    @property
    def param_count(self) -> int:
        return int(sum(t.size for t in self.tensors))

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.arch, [t.copy() for t in self.tensors],
                             self.seed, self.epochs_completed)

    def astype(self, dtype) -> "EncoderParams":
        return EncoderParams(self.arch, [t.astype(dtype) for t in self.tensors],
                             self.seed, self.epochs_completed)


def init_encoder(arch: ArchDescriptor, seed: int) -> EncoderParams:
    """He-uniform initialization: W ~ U(+-sqrt(6/fan_in)), biases zero.

    A single generator seeded by `seed` fills weight tensors in canonical
    descriptor order (C-order within each tensor), so the result is a
    pure function of (arch, seed).
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    tensors = []
    for shape in arch.param_shapes():
        if len(shape) == 1:
            tensors.append(np.zeros(shape, dtype=np.float32))
            continue
        if len(shape) == 4:
            fan_in = shape[1] * shape[2] * shape[3]
        else:
            fan_in = shape[0]
        bound = np.sqrt(6.0 / fan_in)
        tensors.append(rng.uniform(-bound, bound, size=shape).astype(np.float32))
    return EncoderParams(arch, tensors, seed=seed)
