"""Benchmark the two kernel backends against each other.

Part 1 times the request-scoring kernel on synthetic record batches of
growing size, numba against the pure-numpy fallback, and checks that the
two paths agree numerically. Part 2 times a full simulation run per
backend by re-invoking this script with ROMEO_SIM_NUMBA toggled.

Usage: python benchmarks/bench_kernels.py [--end-to-end-worker]
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time

import numpy as np

REPEATS = 200
SIZES = (10, 100, 1_000, 10_000)


def synthetic_batch(rng, k, d=2):
    values = rng.random(k)
    iters = np.sort(rng.integers(0, 1000, size=k)).astype(np.int64)
    prefs = rng.random((k, d))
    weights = rng.random(k)
    query = rng.random(d)
    return values, iters, prefs, weights, query


def time_call(func, *args):
    best = float("inf")
    for _ in range(5):
        start = time.perf_counter()
        for _ in range(REPEATS):
            func(*args)
        best = min(best, (time.perf_counter() - start) / REPEATS)
    return best


def bench_kernels():
    from repsim import kernels
    from repsim.engines import CapCount, MinSourceWeight, encode_rules

    if kernels.BACKEND != "numba":
        print("numba backend unavailable (or disabled); nothing to compare")
        return

    codes, p1, p2 = encode_rules((MinSourceWeight(0.2), CapCount(25)))
    rng = np.random.default_rng(0)
    print(f"{'batch size':>10} {'numba':>12} {'numpy':>12} {'speedup':>8}   agreement")
    for k in SIZES:
        args = synthetic_batch(rng, k)
        call = lambda f, a=args: f(
            a[0], a[1], a[2], a[3], a[4], codes, p1, p2,
            kernels.ENGINE_WEIGHTED_MEAN, 1.0, 1000, 0.5,
        )
        score_nb, mask_nb = call(kernels.score_request)
        score_np, mask_np = call(kernels.NUMPY_FUNCS["score_request"])
        agree = (
            abs(score_nb - score_np) < 1e-12
            and np.array_equal(np.asarray(mask_nb), mask_np)
        )
        t_nb = time_call(call, kernels.score_request)
        t_np = time_call(call, kernels.NUMPY_FUNCS["score_request"])
        print(
            f"{k:>10} {t_nb * 1e6:>10.2f}us {t_np * 1e6:>10.2f}us "
            f"{t_np / t_nb:>7.1f}x   {'ok' if agree else 'DIVERGED'}"
        )


END_TO_END_SCENARIO = dict(iterations=500, users=60, providers=5)


def run_end_to_end():
    from repsim.engines import CapCount, EngineConfig
    from repsim.kernels import BACKEND
    from repsim.scenario import ProviderDecl, RelyingPartyDecl, Scenario, ServiceDecl, UserGroup
    from repsim.simulation import run

    cfg = END_TO_END_SCENARIO
    per = cfg["users"] // cfg["providers"]
    scenario = Scenario(
        iterations=cfg["iterations"],
        p_active=0.3,
        rules=(CapCount(25),),
        users=tuple(UserGroup(per, provider=f"op{i}") for i in range(cfg["providers"])),
        providers=tuple(ProviderDecl(f"op{i}") for i in range(cfg["providers"])),
        relying_parties=(
            RelyingPartyDecl("rp0", services=(ServiceDecl("svc", ((0, 0.8),)),)),
        ),
    )
    run(scenario, 0)  # warm any compilation before timing
    start = time.perf_counter()
    result = run(scenario, 0)
    elapsed = time.perf_counter() - start
    return {
        "backend": BACKEND,
        "seconds": elapsed,
        "mae": result.summary.post_warmup_mae,
    }


def bench_end_to_end():
    rows = []
    for flag in ("1", "0"):
        env = dict(os.environ, ROMEO_SIM_NUMBA=flag)
        output = subprocess.run(
            [sys.executable, __file__, "--end-to-end-worker"],
            env=env, capture_output=True, text=True, check=True,
        ).stdout
        rows.append(json.loads(output.strip().splitlines()[-1]))
    cfg = END_TO_END_SCENARIO
    print(
        f"\nfull run ({cfg['iterations']} iterations, {cfg['users']} users, "
        f"{cfg['providers']} providers):"
    )
    for row in rows:
        print(f"  {row['backend']:>6}: {row['seconds']:.3f} s  (mae {row['mae']!r})")
    if len({row["mae"] for row in rows}) == 1:
        print("  post-warmup MAE identical across backends")


if __name__ == "__main__":
    if "--end-to-end-worker" in sys.argv:
        print(json.dumps(run_end_to_end()))
    else:
        bench_kernels()
        bench_end_to_end()
