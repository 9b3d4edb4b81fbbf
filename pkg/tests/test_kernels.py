import os
import subprocess
import sys

import numpy as np
import pytest

from burnscan import kernels
from burnscan.kernels import numpy_backend

BACKENDS = [("numpy", numpy_backend)]
if kernels.NUMBA_ENABLED:
    from burnscan.kernels import numba_backend
    BACKENDS.append(("numba", numba_backend))


def conv_ref(x, w, b, stride, pad):
    # independent oracle: explicit patch loop + tensordot
    n, h, wd, _ = x.shape
    kh, kw, _, co = w.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((n, ho, wo, co), np.float64)
    for i in range(ho):
        for j in range(wo):
            patch = xp[:, i * stride:i * stride + kh, j * stride:j * stride + kw, :]
            out[:, i, j, :] = np.tensordot(
                patch.astype(np.float64), w.astype(np.float64),
                axes=([1, 2, 3], [0, 1, 2]))
    return out + b.astype(np.float64)


def _case(seed, dtype=np.float64):
    rng = np.random.default_rng(seed)
    n, h, wd, ci, co = 2, 7, 6, 3, 4
    stride = int(rng.integers(1, 3))
    pad = int(rng.integers(0, 2))
    x = rng.standard_normal((n, h, wd, ci)).astype(dtype)
    w = rng.standard_normal((3, 3, ci, co)).astype(dtype)
    b = rng.standard_normal(co).astype(dtype)
    return x, w, b, stride, pad


@pytest.mark.parametrize("name,impl", BACKENDS)
class TestForward:
    def test_matches_reference(self, name, impl):
        for seed in range(8):
            x, w, b, stride, pad = _case(seed)
            got = impl.conv2d_forward(x, w, b, stride, pad)
            want = conv_ref(x, w, b, stride, pad)
            assert got.shape == want.shape
            assert np.allclose(got, want, rtol=1e-10, atol=1e-12)

    def test_float32_inputs(self, name, impl):
        x, w, b, stride, pad = _case(3, dtype=np.float32)
        got = impl.conv2d_forward(x, w, b, stride, pad)
        assert got.dtype == np.float32
        assert np.allclose(got, conv_ref(x, w, b, stride, pad),
                           rtol=1e-4, atol=1e-5)

    def test_bit_reproducible(self, name, impl):
        x, w, b, stride, pad = _case(1)
        a = impl.conv2d_forward(x, w, b, stride, pad)
        b2 = impl.conv2d_forward(x, w, b, stride, pad)
        assert np.array_equal(a, b2)


@pytest.mark.parametrize("name,impl", BACKENDS)
class TestBackward:
    def test_input_gradient_finite_difference(self, name, impl):
        for seed in range(4):
            x, w, b, stride, pad = _case(seed)
            g = np.random.default_rng(seed + 100).standard_normal(
                conv_ref(x, w, b, stride, pad).shape)
            dx = impl.conv2d_backward_input(g, w, stride, pad,
                                            x.shape[1], x.shape[2])
            assert dx.shape == x.shape
            eps = 1e-6
            flat = x.copy().ravel()
            idx = np.random.default_rng(seed).choice(flat.size, 24, replace=False)
            for i in idx:
                xp, xm = flat.copy(), flat.copy()
                xp[i] += eps
                xm[i] -= eps
                lp = float((conv_ref(xp.reshape(x.shape), w, b, stride, pad) * g).sum())
                lm = float((conv_ref(xm.reshape(x.shape), w, b, stride, pad) * g).sum())
                fd = (lp - lm) / (2 * eps)
                assert abs(dx.ravel()[i] - fd) < 1e-6 * max(1.0, abs(fd))

    def test_weight_gradient_finite_difference(self, name, impl):
        x, w, b, stride, pad = _case(5)
        g = np.random.default_rng(7).standard_normal(
            conv_ref(x, w, b, stride, pad).shape)
        dw, db = impl.conv2d_backward_weights(x, g, 3, 3, stride, pad)
        assert dw.shape == w.shape and db.shape == b.shape
        eps = 1e-6
        flat = w.copy().ravel()
        idx = np.random.default_rng(8).choice(flat.size, 24, replace=False)
        for i in idx:
            wp, wm = flat.copy(), flat.copy()
            wp[i] += eps
            wm[i] -= eps
            lp = float((conv_ref(x, wp.reshape(w.shape), b, stride, pad) * g).sum())
            lm = float((conv_ref(x, wm.reshape(w.shape), b, stride, pad) * g).sum())
            fd = (lp - lm) / (2 * eps)
            assert abs(dw.ravel()[i] - fd) < 1e-6 * max(1.0, abs(fd))
        # bias gradient is the plain per-channel sum of upstream gradients
        assert np.allclose(db, g.sum(axis=(0, 1, 2)), rtol=1e-12, atol=1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="numba backend unavailable")
class TestCrossBackend:
    def test_backends_agree(self):
        from burnscan.kernels import numba_backend
        for seed in range(6):
            x, w, b, stride, pad = _case(seed)
            y1 = numpy_backend.conv2d_forward(x, w, b, stride, pad)
            y2 = numba_backend.conv2d_forward(x, w, b, stride, pad)
            assert np.allclose(y1, y2, rtol=1e-12, atol=1e-13)
            g = np.random.default_rng(seed).standard_normal(y1.shape)
            dx1 = numpy_backend.conv2d_backward_input(g, w, stride, pad, 7, 6)
            dx2 = numba_backend.conv2d_backward_input(g, w, stride, pad, 7, 6)
            assert np.allclose(dx1, dx2, rtol=1e-12, atol=1e-13)
            dw1, db1 = numpy_backend.conv2d_backward_weights(x, g, 3, 3, stride, pad)
            dw2, db2 = numba_backend.conv2d_backward_weights(x, g, 3, 3, stride, pad)
            assert np.allclose(dw1, dw2, rtol=1e-12, atol=1e-13)
            assert np.allclose(db1, db2, rtol=1e-12, atol=1e-13)


class TestDispatch:
    def test_default_backend_prefers_numba(self):
        assert kernels.backend_name() in ("numba", "numpy")
        if kernels.NUMBA_ENABLED:
            assert kernels.backend_name() == "numba"

    @pytest.mark.parametrize("flag,expected", [
        ("1", "numpy"), ("yes", "numpy"), ("0", "numba"), ("", "numba"),
    ])
    def test_env_flag_selects_backend(self, flag, expected):
        if expected == "numba" and not kernels.NUMBA_ENABLED:
            pytest.skip("numba unavailable")
        env = dict(os.environ, BURNSCAN_DISABLE_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, "-c",
             "from burnscan.kernels import backend_name; print(backend_name())"],
            env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == expected
