"""Time both convolution backends on training-shaped workloads.

Runs forward, input-gradient, and weight-gradient kernels for every
encoder block shape (batch x 32x32x4 input through the default channel
progression) against both the numba and the numpy/im2col backends,
after a warmup pass so numba's compilation cost is excluded. Prints a
per-block table of median milliseconds and the speed ratio.

Usage: python benchmarks/bench_kernels.py [--batch 256] [--repeats 7]

Both backends compute the same values to floating-point tolerance; they
differ in summation order (so results across backends are not
bit-identical) and in memory behavior: the im2col path materializes a
(N*OH*OW, KH*KW*C) buffer per call, while the compiled loops stream the
input. Pick the backend with BURNSCAN_DISABLE_NUMBA (set to 1 to force
numpy); within a backend, runs are bit-reproducible.
"""

import argparse
import statistics
import time

import numpy as np

from burnscan.kernels import numpy_backend

try:
    from burnscan.kernels import numba_backend
except ImportError:
    numba_backend = None

KERNEL, STRIDE, PAD = 3, 2, 1
BLOCKS = (32, 64, 128, 256)


def block_shapes(batch):
    """(x, w, b, dy) tensors for each encoder block at the given batch size."""
    rng = np.random.default_rng(0)
    side, cin = 32, 4
    for cout in BLOCKS:
        out_side = (side + 2 * PAD - KERNEL) // STRIDE + 1
        x = rng.normal(size=(batch, side, side, cin)).astype(np.float32)
        w = rng.normal(size=(KERNEL, KERNEL, cin, cout)).astype(np.float32) * 0.1
        b = np.zeros(cout, dtype=np.float32)
        dy = rng.normal(size=(batch, out_side, out_side, cout)).astype(np.float32)
        yield f"{cin:3d}->{cout:3d} @ {side}px", x, w, b, dy
        side, cin = out_side, cout


def median_ms(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1000.0)
    return statistics.median(times)


def bench_backend(backend, x, w, b, dy, repeats):
    h, wid = x.shape[1], x.shape[2]
    ops = {
        "forward": lambda: backend.conv2d_forward(x, w, b, STRIDE, PAD),
        "grad_in": lambda: backend.conv2d_backward_input(dy, w, STRIDE, PAD, h, wid),
        "grad_w": lambda: backend.conv2d_backward_weights(x, dy, KERNEL, KERNEL,
                                                          STRIDE, PAD),
    }
    for fn in ops.values():
        fn()  # warmup: triggers numba compilation, touches caches
    return {name: median_ms(fn, repeats) for name, fn in ops.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=256)
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    backends = [("numpy", numpy_backend)]
    if numba_backend is not None:
        backends.append(("numba", numba_backend))
    else:
        print("numba unavailable; timing the numpy backend only")

    header = f"{'block':>16s} {'op':>8s}" + "".join(
        f" {name + ' ms':>10s}" for name, _ in backends)
    if len(backends) == 2:
        header += f" {'numba/numpy':>12s}"
    print(f"batch {args.batch}, median of {args.repeats} runs")
    print(header)
    totals = {name: 0.0 for name, _ in backends}
    for label, x, w, b, dy in block_shapes(args.batch):
        results = {name: bench_backend(be, x, w, b, dy, args.repeats)
                   for name, be in backends}
        for op in ("forward", "grad_in", "grad_w"):
            line = f"{label:>16s} {op:>8s}"
            for name, _ in backends:
                line += f" {results[name][op]:>10.2f}"
                totals[name] += results[name][op]
            if len(backends) == 2:
                ratio = results["numba"][op] / results["numpy"][op]
                line += f" {ratio:>11.2f}x"
            print(line)
    line = f"{'total':>16s} {'':>8s}"
    for name, _ in backends:
        line += f" {totals[name]:>10.2f}"
    if len(backends) == 2:
        line += f" {totals['numba'] / totals['numpy']:>11.2f}x"
    print(line)


if __name__ == "__main__":
    main()
