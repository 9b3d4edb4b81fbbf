"""Normalized temperature-scaled cross-entropy (NT-Xent) contrastive loss.

Batch layout: rows (2k, 2k+1) are the two views of pair k. For anchor i
with positive p(i) = i XOR 1,

    l_i = -log( exp(s_ip / t) / sum_{k != i} exp(s_ik / t) )

where s is cosine similarity between projection rows, and the loss is
the mean of l_i over all 2N anchors. The single-pair case (N = 1) has
only the positive in the denominator, so the loss is exactly zero.
"""

import numpy as np

from ..errors import ConfigError, NumericalError


def nt_xent_loss(z: np.ndarray, temperature: float) -> tuple:
    """Loss and analytic gradient w.r.t. z for the (2k, 2k+1) pair layout.

    Returns (loss: float, grad: array like z).
    """
    if temperature <= 0:
        raise ConfigError("temperature must be positive")
    if z.ndim != 2 or z.shape[0] < 2 or z.shape[0] % 2 != 0:
        raise ConfigError("z must be (2N, D) with N >= 1")
    m = z.shape[0]
    if z.dtype not in (np.float32, np.float64):
        z = z.astype(np.float64)
    norms = np.sqrt((z * z).sum(axis=1))
    if not np.all(norms > 0):
        raise NumericalError("zero-norm embedding row in contrastive loss")
    zh = z / norms[:, None]
    t = z.dtype.type(temperature)
    s = (zh @ zh.T) / t
    pos = np.arange(m) ^ 1

    if m == 2:
        # Only the positive is in each denominator: loss is exactly 0
        # and the gradient vanishes identically.
        return 0.0, np.zeros_like(z)

    off = ~np.eye(m, dtype=bool)
    # Row-wise log-sum-exp over k != i, stabilized by the off-diagonal max.
    s_off = np.where(off, s, -np.inf)
    row_max = s_off.max(axis=1)
    exp_s = np.exp(s_off - row_max[:, None])
    exp_s[~off] = 0
    denom = exp_s.sum(axis=1)
    log_denom = np.log(denom) + row_max
    losses = log_denom - s[np.arange(m), pos]
    loss = float(losses.mean())
    if not np.isfinite(loss):
        raise NumericalError("non-finite contrastive loss")

    # dL/ds = (softmax over k != i) minus the positive indicator, / 2N.
    g = exp_s / denom[:, None]
    g[np.arange(m), pos] -= 1.0
    g /= m
    # s = zh zh^T / t is symmetric in zh: dL/dzh = (G + G^T) zh / t.
    dzh = ((g + g.T) @ zh) / t
    # Through row normalization zh = z / |z|.
    dot = (dzh * zh).sum(axis=1, keepdims=True)
    grad = (dzh - dot * zh) / norms[:, None]
    return loss, grad.astype(z.dtype, copy=False)
