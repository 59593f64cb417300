"""Compare the compiled LSTM kernel against the pure-numpy fallback.

Times one training-shaped layer pass (batch 32, window 60, hidden 128) and
checks that both backends agree to 1e-10 on every output tensor.

Usage: python3 benchmarks/bench_backends.py [iters]
"""

import sys
import time

import numpy as np

from cellwarden.forecaster import kernel_numpy

try:
    from cellwarden.forecaster import _kernel
except ImportError:
    _kernel = None


def make_inputs(rng, batch, steps, hidden):
    zx = rng.standard_normal((batch, steps, 4 * hidden))
    wh = rng.standard_normal((hidden, 4 * hidden)) * 0.05
    h0 = rng.standard_normal((batch, hidden)) * 0.1
    c0 = rng.standard_normal((batch, hidden)) * 0.1
    dh = rng.standard_normal((batch, steps, hidden))
    return zx, wh, h0, c0, dh


def run_pass(mod, zx, wh, h0, c0, dh):
    h_all, c_all, gates = mod.lstm_layer_forward(zx, wh, h0, c0)
    dzx, dwh, dh0, dc0 = mod.lstm_layer_backward(dh, wh, h_all, c_all, gates)
    return h_all, c_all, gates, dzx, dwh, dh0, dc0


def time_pass(mod, inputs, iters):
    run_pass(mod, *inputs)   # warm up
    t0 = time.perf_counter()
    for _ in range(iters):
        run_pass(mod, *inputs)
    return (time.perf_counter() - t0) / iters


def main():
    iters = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    rng = np.random.default_rng(11)
    inputs = make_inputs(rng, batch=32, steps=60, hidden=128)

    numpy_s = time_pass(kernel_numpy, inputs, iters)
    print(f"numpy  backend: {numpy_s * 1e3:8.2f} ms / fwd+bwd pass")

    if _kernel is None:
        print("cython backend: not built (pip install -e . compiles it)")
        return 1

    cython_s = time_pass(_kernel, inputs, iters)
    print(f"cython backend: {cython_s * 1e3:8.2f} ms / fwd+bwd pass")
    print(f"speedup: {numpy_s / cython_s:.2f}x")

    ref = run_pass(kernel_numpy, *inputs)
    got = run_pass(_kernel, *inputs)
    names = ("h_all", "c_all", "gates", "dzx", "dwh", "dh0", "dc0")
    worst = 0.0
    for name, a, b in zip(names, ref, got):
        diff = float(np.max(np.abs(a - b)))
        worst = max(worst, diff)
        print(f"max |diff| {name:<5}: {diff:.3e}")
    if worst > 1e-10:
        print(f"backends disagree beyond 1e-10 ({worst:.3e})")
        return 1
    print("backends agree within 1e-10")
    return 0


if __name__ == "__main__":
    sys.exit(main())
