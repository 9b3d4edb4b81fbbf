"""Numba convolution backend: explicit loops compiled with @njit.

Same contracts as numpy_backend. Kernels are single-threaded on
purpose: results must be bit-reproducible run to run, so no prange and
no fastmath. Inner loops run over the contiguous channel axis so LLVM
can vectorize them without reassociating any reduction.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def conv2d_forward(x, w, b, stride, pad):
    bsz, h, wid, ci = x.shape
    kh, kw, _, co = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wid + 2 * pad - kw) // stride + 1
    y = np.empty((bsz, ho, wo, co), dtype=x.dtype)
    acc = np.empty(co, dtype=x.dtype)
    for n in range(bsz):
        for oh in range(ho):
            ih0 = oh * stride - pad
            for ow in range(wo):
                iw0 = ow * stride - pad
                for o in range(co):
                    acc[o] = b[o]
                for u in range(kh):
                    ih = ih0 + u
                    if ih < 0 or ih >= h:
                        continue
                    for v in range(kw):
                        iw = iw0 + v
                        if iw < 0 or iw >= wid:
                            continue
                        for c in range(ci):
                            xv = x[n, ih, iw, c]
                            for o in range(co):
                                acc[o] += xv * w[u, v, c, o]
                for o in range(co):
                    y[n, oh, ow, o] = acc[o]
    return y


@njit(cache=True)
def _backward_input_impl(dy, wt, stride, pad, h, wid):
    # wt is the transposed kernel (kh, kw, c_out, c_in) so the inner
    # loop writes along the contiguous input-channel axis.
    bsz, ho, wo, co = dy.shape
    kh, kw, _, ci = wt.shape
    dx = np.zeros((bsz, h, wid, ci), dtype=dy.dtype)
    for n in range(bsz):
        for oh in range(ho):
            ih0 = oh * stride - pad
            for ow in range(wo):
                iw0 = ow * stride - pad
                for u in range(kh):
                    ih = ih0 + u
                    if ih < 0 or ih >= h:
                        continue
                    for v in range(kw):
                        iw = iw0 + v
                        if iw < 0 or iw >= wid:
                            continue
                        for o in range(co):
                            g = dy[n, oh, ow, o]
                            for c in range(ci):
                                dx[n, ih, iw, c] += g * wt[u, v, o, c]
    return dx


def conv2d_backward_input(dy, w, stride, pad, h, wid):
    """Gradient of the convolution output w.r.t. its input, shape (B,h,wid,CI)."""
    wt = np.ascontiguousarray(np.transpose(w, (0, 1, 3, 2)))
    return _backward_input_impl(dy, wt, stride, pad, h, wid)


@njit(cache=True)
def _backward_weights_impl(x, dy, kh, kw, stride, pad):
    bsz, h, wid, ci = x.shape
    _, ho, wo, co = dy.shape
    dw = np.zeros((kh, kw, ci, co), dtype=x.dtype)
    db = np.zeros(co, dtype=x.dtype)
    for n in range(bsz):
        for oh in range(ho):
            ih0 = oh * stride - pad
            for ow in range(wo):
                iw0 = ow * stride - pad
                for o in range(co):
                    db[o] += dy[n, oh, ow, o]
                for u in range(kh):
                    ih = ih0 + u
                    if ih < 0 or ih >= h:
                        continue
                    for v in range(kw):
                        iw = iw0 + v
                        if iw < 0 or iw >= wid:
                            continue
                        for c in range(ci):
                            xv = x[n, ih, iw, c]
                            for o in range(co):
                                dw[u, v, c, o] += xv * dy[n, oh, ow, o]
    return dw, db


def conv2d_backward_weights(x, dy, kh, kw, stride, pad):
    """Gradients w.r.t. weights (HWIO, summed over batch) and bias."""
    return _backward_weights_impl(x, dy, kh, kw, stride, pad)
