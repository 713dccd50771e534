"""Compare the compiled and pure-Python micro-step kernels.

    python3 benchmarks/bench_kernels.py [--steps 20000] [--n 2] [--m 1] [--repeat 3]

Both backends integrate the same interval from the same state; the script
prints throughput for each and checks that their final states agree.
"""

import argparse
import time

import numpy as np

from alqg import kernels


def inputs(n, m, steps, h, seed=0):
    rng = np.random.default_rng(seed)
    N = n + m
    state = dict(x=rng.standard_normal(n), theta=rng.standard_normal((N, n)), P=np.eye(N),
                 gram=np.zeros((N, N)), acc=np.array([1.0, 0, 0, 0, 0, 0, 0]), v=np.zeros(m))
    fixed = (rng.standard_normal((n, n)) - 2 * np.eye(n), rng.standard_normal((n, m)),
             0.5 * rng.standard_normal((n, n)), -0.3 * rng.standard_normal((m, n)),
             np.eye(n), np.eye(m))
    dw = rng.standard_normal((steps, n)) * np.sqrt(h)
    dv = rng.standard_normal((steps, m)) * np.sqrt(h)
    return state, fixed, dw, dv


def run(kernel, state, fixed, dw, dv, h, log_every=10):
    st = {k: v.copy() for k, v in state.items()}
    n, m = st["x"].size, st["v"].size
    buf = np.zeros((len(dw) // log_every + 2, 4 + n + m))
    A, B, D, L, Q, R = fixed
    t0 = time.perf_counter()
    kernel(st["x"], st["theta"], st["P"], st["gram"], st["acc"], A, B, D, L, Q, R, 0.5,
           st["v"], np.zeros(m), dw, dv, h, log_every, 1e8, buf, True, 10000)
    return time.perf_counter() - t0, st


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    h = 1e-3
    state, fixed, dw, dv = inputs(args.n, args.m, args.steps, h)
    results = {}
    for name in ("cython", "python"):
        try:
            kernel = kernels.get_kernel(name)
        except ImportError:
            print(f"{name:7s} unavailable")
            continue
        best, final = min((run(kernel, state, fixed, dw, dv, h) for _ in range(args.repeat)),
                          key=lambda r: r[0])
        results[name] = (best, final)
        print(f"{name:7s} {best * 1e3:9.2f} ms  {args.steps / best:12.0f} steps/s")
    if len(results) == 2:
        (tc, sc), (tp, sp) = results["cython"], results["python"]
        diff = max(np.abs(sc[k] - sp[k]).max() for k in sc)
        print(f"speedup {tp / tc:.1f}x  max state difference {diff:.2e}")


if __name__ == "__main__":
    main()
