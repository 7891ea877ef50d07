"""Time the numpy and numba kernel backends on desk-scale shapes.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is warmed up once (numba compiles on first call), then timed
as the best of N repeats. Outputs of the two backends are checked to agree.
"""

import argparse
import timeit

import numpy as np

from dfframe.nn import backend

# (batch, channels in, size, channels out, kernel) for the desk CNN's layers
CONV_CASES = [(32, 1, 16, 8, 3), (32, 8, 8, 8, 3), (32, 8, 4, 16, 3), (128, 16, 2, 16, 3)]
POOL_CASES = [(32, 8, 16), (32, 8, 8), (128, 16, 4)]


def _time(fn, repeat):
    fn()  # warm-up / JIT compile
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench(repeat=20):
    rng = np.random.default_rng(0)
    names = backend.available()
    rows = []
    for n, cin, size, cout, k in CONV_CASES:
        x = rng.normal(size=(n, cin, size, size))
        w, b = rng.normal(size=(cout, cin, k, k)), rng.normal(size=cout)
        dy = rng.normal(size=(n, cout, size, size))
        timings, outputs = {}, {}
        for name in names:
            kern = backend._BACKENDS[name]
            outputs[name] = kern.conv2d_forward(x, w, b, 1, 1)
            timings[name] = (_time(lambda: kern.conv2d_forward(x, w, b, 1, 1), repeat),
                             _time(lambda: kern.conv2d_backward(x, w, dy, 1, 1), repeat))
        _check(outputs)
        rows.append((f"conv {n}x{cin}x{size}x{size} -> {cout}", timings))
    for n, c, size in POOL_CASES:
        x = rng.normal(size=(n, c, size, size))
        timings, outputs = {}, {}
        for name in names:
            kern = backend._BACKENDS[name]
            y, arg = kern.maxpool2d_forward(x, 2, 2)
            outputs[name] = y
            timings[name] = (_time(lambda: kern.maxpool2d_forward(x, 2, 2), repeat),
                             _time(lambda: kern.maxpool2d_backward(np.ones_like(y), arg, x.shape), repeat))
        _check(outputs)
        rows.append((f"pool {n}x{c}x{size}x{size}", timings))
    return names, rows


def _check(outputs):
    ref = next(iter(outputs.values()))
    for out in outputs.values():
        np.testing.assert_allclose(out, ref, atol=1e-10)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()
    names, rows = bench(args.repeat)
    header = f"{'case':<28}" + "".join(f"{n + ' fwd':>12}{n + ' bwd':>12}" for n in names)
    print(header)
    for label, timings in rows:
        cells = "".join(f"{timings[n][0] * 1e3:>10.3f}ms{timings[n][1] * 1e3:>10.3f}ms" for n in names)
        print(f"{label:<28}{cells}")
    if "numba" in names:
        total = {n: sum(f + b for f, b in (t[n] for _, t in rows)) for n in names}
        print(f"\nnumpy / numba total time ratio: {total['numpy'] / total['numba']:.2f}")


if __name__ == "__main__":
    main()
