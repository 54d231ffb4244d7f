"""Time the numba kernels against their pure-numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Shapes match the first two conv/pool layers of the default 96x96 model at
batch size 32. Outputs are checked for agreement before timing.
"""
import argparse
import timeit

import numpy as np

from candlecnn import _accel, kernels

if not _accel.HAVE_NUMBA:
    raise SystemExit("numba is not installed; nothing to compare")


def cases(rng):
    # float32 like training
    x1 = rng.random((32, 3, 96, 96), dtype=np.float32)
    x2 = rng.random((32, 32, 48, 48), dtype=np.float32)
    cols2 = rng.random((32 * 48 * 48, 32 * 9), dtype=np.float32)
    pool_in = rng.random((32, 32, 96, 96)).astype(np.float32)
    _, arg = kernels.maxpool_forward_numpy(pool_in)
    dpool = rng.random((32, 32, 48, 48)).astype(np.float32)
    closes = rng.random(100_000)

    def ema(fn):
        out = np.full(closes.shape, np.nan)
        out[29] = closes[:30].mean()
        fn(closes, out, 29, 2 / 31)
        return out

    return [
        ("im2col 32x3x96x96", lambda f: f(x1, 3), kernels.im2col_numpy, kernels.im2col_numba),
        ("im2col 32x32x48x48", lambda f: f(x2, 3), kernels.im2col_numpy, kernels.im2col_numba),
        ("col2im 32x32x48x48", lambda f: f(cols2, x2.shape, 3), kernels.col2im_numpy, kernels.col2im_numba),
        ("maxpool fwd 32x32x96x96", lambda f: f(pool_in), kernels.maxpool_forward_numpy, kernels.maxpool_forward_numba),
        ("maxpool bwd 32x32x48x48", lambda f: f(dpool, arg), kernels.maxpool_backward_numpy, kernels.maxpool_backward_numba),
        ("ema n=100000", ema, kernels.ema_recursion_numpy, kernels.ema_recursion_numba),
    ]


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=0, atol=1e-5, equal_nan=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}")
    for name, call, np_fn, nb_fn in cases(rng):
        if not same(call(np_fn), call(nb_fn)):  # also triggers JIT compilation
            raise SystemExit(f"{name}: backends disagree")
        t_np = min(timeit.repeat(lambda: call(np_fn), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: call(nb_fn), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<26}{t_np:>10.2f}{t_nb:>10.2f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
