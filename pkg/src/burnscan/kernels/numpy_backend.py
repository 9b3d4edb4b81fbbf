"""Pure-numpy convolution backend (im2col + BLAS matmul).

Layouts: activations NHWC, weights HWIO (kh, kw, c_in, c_out). All
three ops preserve the input dtype; training uses float32 and the
gradient checker uses float64.
"""

import numpy as np


def _out_size(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """Unfold x (B,H,W,C) into patch rows (B*HO*WO, kh*kw*C)."""
    b, h, w, c = x.shape
    ho = _out_size(h, kh, stride, pad)
    wo = _out_size(w, kw, stride, pad)
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    cols = np.empty((b, ho, wo, kh * kw * c), dtype=x.dtype)
    for u in range(kh):
        for v in range(kw):
            patch = x[:, u : u + (ho - 1) * stride + 1 : stride,
                      v : v + (wo - 1) * stride + 1 : stride, :]
            k = u * kw + v
            cols[..., k * c : (k + 1) * c] = patch
    return cols.reshape(b * ho * wo, kh * kw * c)


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                   stride: int, pad: int) -> np.ndarray:
    """y[n,oh,ow,o] = b[o] + sum_{u,v,ci} x[n, oh*s-p+u, ow*s-p+v, ci] * w[u,v,ci,o]."""
    bsz, h, wid, _ = x.shape
    kh, kw, _, co = w.shape
    ho = _out_size(h, kh, stride, pad)
    wo = _out_size(wid, kw, stride, pad)
    cols = _im2col(x, kh, kw, stride, pad)
    y = cols @ w.reshape(-1, co)
    y += b
    return y.reshape(bsz, ho, wo, co)


def conv2d_backward_input(dy: np.ndarray, w: np.ndarray, stride: int, pad: int,
                          h: int, wid: int) -> np.ndarray:
    """Gradient of the convolution output w.r.t. its input, shape (B,h,wid,CI)."""
    bsz, ho, wo, co = dy.shape
    kh, kw, ci, _ = w.shape
    dcols = dy.reshape(-1, co) @ w.reshape(-1, co).T
    dcols = dcols.reshape(bsz, ho, wo, kh, kw, ci)
    dxp = np.zeros((bsz, h + 2 * pad, wid + 2 * pad, ci), dtype=dy.dtype)
    for u in range(kh):
        for v in range(kw):
            dxp[:, u : u + (ho - 1) * stride + 1 : stride,
                v : v + (wo - 1) * stride + 1 : stride, :] += dcols[:, :, :, u, v, :]
    if pad:
        return np.ascontiguousarray(dxp[:, pad : pad + h, pad : pad + wid, :])
    return dxp


def conv2d_backward_weights(x: np.ndarray, dy: np.ndarray, kh: int, kw: int,
                            stride: int, pad: int) -> tuple:
    """Gradients w.r.t. weights (HWIO, summed over batch) and bias."""
    _, _, _, ci = x.shape
    bsz, ho, wo, co = dy.shape
    cols = _im2col(x, kh, kw, stride, pad)
    dw = cols.T @ dy.reshape(-1, co)
    db = dy.sum(axis=(0, 1, 2))
    return dw.reshape(kh, kw, ci, co), db
