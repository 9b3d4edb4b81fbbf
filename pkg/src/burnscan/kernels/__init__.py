"""Convolution kernels with selectable backends.

Two implementations of the same three operations (forward, input
gradient, weight gradient for a 2-D convolution in NHWC/HWIO layout):

* ``numba_backend`` compiles explicit loops with ``@njit``; it is the
  default because the training loop spends nearly all of its time here
  and the compiled loops avoid large intermediate buffers.
* ``numpy_backend`` lowers each convolution to an im2col matmul. It is
  used when numba is unavailable or when the environment variable
  ``BURNSCAN_DISABLE_NUMBA`` is set to a non-empty value other than
  ``"0"``.

Both backends produce results that agree to floating-point tolerance
but are not bit-identical to each other (summation order differs).
Within one backend, results are bit-reproducible run to run.
"""

import os

from . import numpy_backend

_flag = os.environ.get("BURNSCAN_DISABLE_NUMBA", "")
_want_numba = _flag in ("", "0")

if _want_numba:
    try:
        from . import numba_backend as _impl

        NUMBA_ENABLED = True
    except ImportError:
        _impl = numpy_backend
        NUMBA_ENABLED = False
else:
    _impl = numpy_backend
    NUMBA_ENABLED = False


def backend_name() -> str:
    """Name of the active backend: "numba" or "numpy"."""
    return "numba" if NUMBA_ENABLED else "numpy"


conv2d_forward = _impl.conv2d_forward
conv2d_backward_input = _impl.conv2d_backward_input
conv2d_backward_weights = _impl.conv2d_backward_weights

__all__ = [
    "NUMBA_ENABLED",
    "backend_name",
    "conv2d_forward",
    "conv2d_backward_input",
    "conv2d_backward_weights",
    "numpy_backend",
]
