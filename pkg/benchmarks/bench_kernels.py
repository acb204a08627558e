"""Time the numba kernels against their numpy fallbacks.

Each case runs a public entry point once under each backend (after one
untimed warm-up call so JIT compilation is excluded), checks that the two
backends agree, and reports the best of ``--repeat`` timings.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]
"""

import argparse
import time

import numpy as np

from heliofor import use_backend
from heliofor.evaluation.knn import knn_fit, knn_predict
from heliofor.evaluation.trees import extratrees_fit, extratrees_predict
from heliofor.linear import css_residuals, fit_elastic_net
from heliofor.lstm import init_stack, loss_and_gradients
from heliofor.narx import NarxConfig, init_network, narx_predict
from heliofor.core import SupervisedWindows
from heliofor import narx as narx_mod


def _cases(scale):
    rng = np.random.default_rng(0)
    n = lambda base: max(8, int(base * scale))  # noqa: E731

    stack = init_stack(5, (16, 16, 16), seed=1)
    X = rng.random((64, n(32), 5))
    Y = rng.random((64, n(32)))

    cfg = NarxConfig(epochs=2, seed=0)
    R = rng.random((n(20000), cfg.regressor_length(4)))
    yr = rng.random(R.shape[0])
    net = init_network(cfg, 4)
    windows = SupervisedWindows(R, yr, cfg.d_u, cfg.d_y, None)

    z = rng.standard_normal(n(20000))

    Xe = rng.random((n(20000), 8))
    ye = Xe @ rng.standard_normal(8) + 0.1 * rng.standard_normal(Xe.shape[0])

    Xk = rng.random((n(5000), 4))
    yk = rng.random(Xk.shape[0])
    Qk = rng.random((n(1000), 4))
    knn = knn_fit(Xk, yk, 10)

    Xt = rng.random((n(5000), 4))
    yt = np.sin(6 * Xt[:, 0]) + Xt[:, 1]

    return [
        ("lstm forward+backward", lambda: loss_and_gradients(stack, X, Y)[0]),
        ("narx predict", lambda: narx_predict(net, R)),
        ("narx sgd (2 epochs)", lambda: narx_mod.train_series_parallel(windows, cfg).input_weights),
        ("arma css residuals", lambda: css_residuals(z, np.array([0.5]), np.array([0.3]), 0.0)),
        ("elastic net cd", lambda: fit_elastic_net(Xe, ye, 0.01, 0.5).coefficients),
        ("knn predict", lambda: knn_predict(knn, Qk)),
        ("extra trees fit+predict", lambda: extratrees_predict(extratrees_fit(Xt, yt, 10, 5, None, 0), Xt[:500])),
    ]


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="multiplies every problem size")
    args = ap.parse_args(argv)

    print(f"{'case':<26}{'numpy s':>10}{'numba s':>10}{'speedup':>9}  agree")
    for name, fn in _cases(args.scale):
        results = {}
        for backend in ("numpy", "numba"):
            with use_backend(backend):
                fn()  # warm-up / compile
                results[backend] = _time(fn, args.repeat)
        (t_np, a), (t_nb, b) = results["numpy"], results["numba"]
        agree = np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-9, atol=1e-9)
        print(f"{name:<26}{t_np:>10.4f}{t_nb:>10.4f}{t_np / t_nb:>9.1f}  {'yes' if agree else 'NO'}")


if __name__ == "__main__":
    main()
