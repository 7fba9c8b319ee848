#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

The hot loop of the supremum estimators is the batched evaluation of
projected variation norms; this script times both backends on a consensus
instance and on a biased Hopfield instance, checks numerical agreement,
and reports the end-to-end effect on a feasibility check.

Usage:
    python benchmarks/bench_kernels.py [--n 24] [--k 4] [--budget 4096] [--iters 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lsbounds import (
    BallSpec,
    check_radii,
    build_nod_model,
    generate_random_regular,
)
from lsbounds.kernels import HAS_NUMBA, make_workspace, xi_par_norms, xi_perp_norms


def time_batches(fn, iters):
    times = []
    for _ in range(iters):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_instance(label, model, sp, budget, iters):
    ws = make_workspace(model, sp)
    rng = np.random.default_rng(7)
    alphas = sp.alpha0[None, :] + 0.1 * rng.standard_normal((budget, ws.q))
    betas = sp.beta0[None, :] + 0.1 * rng.standard_normal((budget, ws.r))
    ps = sp.p_star + 0.1 * rng.standard_normal(budget)

    print(f"\n== {label} (n={ws.n}, batch={budget}) ==")
    rows = []
    for name, call in [
        ("xi_par", lambda f: xi_par_norms(ws, alphas, ps, force=f)),
        ("xi_perp", lambda f: xi_perp_norms(ws, alphas, betas, ps, force=f)),
    ]:
        ref = call("numpy")
        t_np = time_batches(lambda: call("numpy"), iters)
        if HAS_NUMBA:
            call("numba")  # JIT warmup outside the timed region
            out = call("numba")
            t_nb = time_batches(lambda: call("numba"), iters)
            err = float(np.max(np.abs(out - ref)))
            rows.append((name, t_np, t_nb, err))
        else:
            rows.append((name, t_np, None, 0.0))

    print(f"{'kernel':<10} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>9} {'max |diff|':>12}")
    for name, t_np, t_nb, err in rows:
        if t_nb is None:
            print(f"{name:<10} {t_np * 1e3:>12.2f} {'n/a':>12} {'n/a':>9} {err:>12.1e}")
        else:
            print(
                f"{name:<10} {t_np * 1e3:>12.2f} {t_nb * 1e3:>12.2f} "
                f"{t_np / t_nb:>8.2f}x {err:>12.1e}"
            )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=24, help="graph size (default 24)")
    parser.add_argument("--k", type=int, default=4, help="degree (default 4)")
    parser.add_argument("--budget", type=int, default=4096, help="batch size")
    parser.add_argument("--iters", type=int, default=5, help="timing repetitions")
    args = parser.parse_args()

    if not HAS_NUMBA:
        print("numba is not importable; timing the numpy fallback only")

    g = generate_random_regular(args.n, args.k, seed=1)
    for kind in ("hopfield", "firing_rate"):
        model, sp = build_nod_model(g, 1.0, kind)
        bench_instance(f"consensus {kind}", model, sp, args.budget, args.iters)

    # end-to-end: one sampled feasibility check
    model, sp = build_nod_model(g, 1.0, "hopfield")
    ball = BallSpec(0.05, 0.05)
    import os

    for backend in ("numpy", "numba") if HAS_NUMBA else ("numpy",):
        os.environ["LSB_BACKEND"] = backend
        check_radii(model, sp, ball, budget=args.budget, seed=3, force_sampled=True)
        t0 = time.perf_counter()
        cert = check_radii(model, sp, ball, budget=args.budget, seed=3, force_sampled=True)
        dt = time.perf_counter() - t0
        print(
            f"\ncheck_radii[{backend}]: {dt * 1e3:.1f} ms "
            f"(l_perp={cert.l_perp:.6f}, {cert.samples_used} samples)"
        )
    os.environ.pop("LSB_BACKEND", None)


if __name__ == "__main__":
    main()
