"""Compare the compiled rollout kernel with the pure-Python fallback.

Run as ``python -m ctxloco.benchmark``. Besides timing, asserts that both
backends produce bit-identical episodes (they are exact twins).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from .core import kernel_rollout, pykernel
from .terrain import TerrainParams


def _episode_args(edim: int, seed: int):
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((8, 16 + edim)) * 0.2
    embedding = np.zeros(edim)
    if edim:
        embedding[:: max(1, edim // 4)] = 1.0
    terrain = TerrainParams(0.1, 0.7, 9.0e4, 0.5, 0.2)
    return matrix, np.zeros(16), np.ones(16), embedding, terrain.as_tuple()


def run_backend(impl, steps: int, edim: int, repeats: int) -> tuple[float, float]:
    matrix, mean, inv_std, emb, terrain = _episode_args(edim, 42)
    totals = []
    start = time.perf_counter()
    for rep in range(repeats):
        total, n, _ = kernel_rollout(
            matrix, mean, inv_std, emb, terrain, 1000 + rep, steps, impl=impl
        )
        totals.append((total, n))
    elapsed = time.perf_counter() - start
    done_steps = sum(n for _, n in totals)
    return done_steps / elapsed, totals[0][0]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=5000, help="steps per episode")
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--embedding-dim", type=int, default=20)
    args = parser.parse_args(argv)

    backends = [("python", pykernel)]
    try:
        from .core import _native

        backends.append(("compiled", _native))
    except ImportError:
        print("compiled kernel not available; benchmarking fallback only")

    rates = {}
    rewards = {}
    for name, impl in backends:
        rate, reward = run_backend(impl, args.steps, args.embedding_dim, args.repeats)
        rates[name] = rate
        rewards[name] = reward
        print(f"{name:>9}: {rate:>12,.0f} env steps/s   (episode reward {reward:.6f})")

    if len(backends) == 2:
        assert rewards["python"] == rewards["compiled"], "backends diverged"
        print(f"  speedup: {rates['compiled'] / rates['python']:.1f}x, "
              f"episodes bit-identical")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
