"""Forward and backward passes through the encoder and projection head.

Activations are NHWC. Conv parameters live in OIHW; they are transposed
to HWIO once per pass for the kernels (contiguous channel inner loops)
and gradients are transposed back. All arithmetic follows the input
batch dtype: float32 in training, float64 in gradient-verification mode.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..kernels import conv2d_forward, conv2d_backward_input, conv2d_backward_weights
from .arch import KERNEL, STRIDE, PAD, ArchDescriptor, EncoderParams


@dataclass(frozen=True)
class EmbeddingBatch:
    """Pooled embeddings h (N, embedding_dim) and projections z (N, projection_dim)."""

    h: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        if self.h.shape[0] != self.z.shape[0]:
            raise DataError("embedding row count mismatch")


def _oihw_to_hwio(w: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.transpose(w, (2, 3, 1, 0)))


def _hwio_to_oihw(w: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.transpose(w, (3, 2, 0, 1)))


def forward_full(params: EncoderParams, batch: np.ndarray):
    """Forward pass returning (EmbeddingBatch, cache) for backward."""
    arch = params.arch
    if batch.ndim != 4 or batch.shape[3] != arch.input_channels:
        raise DataError("channel mismatch between batch and encoder parameters")
    dtype = batch.dtype
    n_blocks = len(arch.blocks)
    x = np.ascontiguousarray(batch)
    pre_acts = []
    inputs = [x]
    hwio = []
    for i in range(n_blocks):
        w = params.tensors[2 * i].astype(dtype, copy=False)
        b = params.tensors[2 * i + 1].astype(dtype, copy=False)
        wk = _oihw_to_hwio(w)
        hwio.append(wk)
        a = conv2d_forward(x, wk, b, STRIDE, PAD)
        pre_acts.append(a)
        x = np.maximum(a, 0)
        inputs.append(x)
    # Global average pooling over the spatial axes.
    h = x.mean(axis=(1, 2))
    w1 = params.tensors[2 * n_blocks].astype(dtype, copy=False)
    b1 = params.tensors[2 * n_blocks + 1].astype(dtype, copy=False)
    w2 = params.tensors[2 * n_blocks + 2].astype(dtype, copy=False)
    b2 = params.tensors[2 * n_blocks + 3].astype(dtype, copy=False)
    a1 = h @ w1 + b1
    r1 = np.maximum(a1, 0)
    z = r1 @ w2 + b2
    cache = {
        "inputs": inputs,
        "pre_acts": pre_acts,
        "hwio": hwio,
        "h": h,
        "a1": a1,
        "r1": r1,
        "w1": w1,
        "w2": w2,
        "dtype": dtype,
    }
    return EmbeddingBatch(h=h, z=z), cache


def forward(params: EncoderParams, batch: np.ndarray) -> EmbeddingBatch:
    """Embed a batch of 32x32xC tiles: h (N,E) and z (N,P)."""
    emb, _ = forward_full(params, batch)
    return emb


def backward(params: EncoderParams, cache: dict, dz: np.ndarray) -> list:
    """Gradients w.r.t. every parameter tensor, in canonical order.

    dz is the loss gradient w.r.t. the projection z. The returned list
    matches params.tensors shape-for-shape.
    """
    if not cache or "inputs" not in cache:
        raise DataError("missing forward cache")
    arch = params.arch
    n_blocks = len(arch.blocks)
    r1 = cache["r1"]
    a1 = cache["a1"]
    h = cache["h"]
    dz = dz.astype(cache["dtype"], copy=False)

    dw2 = r1.T @ dz
    db2 = dz.sum(axis=0)
    dr1 = dz @ cache["w2"].T
    da1 = np.where(a1 > 0, dr1, 0)
    dw1 = h.T @ da1
    db1 = da1.sum(axis=0)
    dh = da1 @ cache["w1"].T

    # GAP backward: spread dh evenly over the pooled positions.
    last = cache["inputs"][n_blocks]
    _, sh, sw, _ = last.shape
    dx = np.broadcast_to(dh[:, None, None, :] / (sh * sw), last.shape)
    dx = np.ascontiguousarray(dx)

    grads = [None] * len(params.tensors)
    grads[2 * n_blocks] = dw1
    grads[2 * n_blocks + 1] = db1
    grads[2 * n_blocks + 2] = dw2
    grads[2 * n_blocks + 3] = db2

    for i in range(n_blocks - 1, -1, -1):
        da = np.where(cache["pre_acts"][i] > 0, dx, 0)
        da = np.ascontiguousarray(da)
        x_in = cache["inputs"][i]
        dw_hwio, db = conv2d_backward_weights(x_in, da, KERNEL, KERNEL, STRIDE, PAD)
        grads[2 * i] = _hwio_to_oihw(dw_hwio)
        grads[2 * i + 1] = db
        if i > 0:
            dx = conv2d_backward_input(da, cache["hwio"][i], STRIDE, PAD,
                                       x_in.shape[1], x_in.shape[2])
    return grads
