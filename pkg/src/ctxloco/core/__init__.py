"""Rollout kernel selection: compiled extension when available, pure
Python otherwise.

Set ``CTXLOCO_BACKEND=python`` or ``CTXLOCO_BACKEND=compiled`` to force a
backend (forcing ``compiled`` raises if the extension is missing). The two
kernels are exact twins; selection affects speed only.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import pykernel

_requested = os.environ.get("CTXLOCO_BACKEND", "").strip().lower()

if _requested == "python":
    _impl = pykernel
    BACKEND = "python"
elif _requested in ("", "compiled", "native"):
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested:
            raise
        _impl = pykernel
        BACKEND = "python"
else:
    raise ImportError(f"unknown CTXLOCO_BACKEND value {_requested!r}")

OBS_DIM = pykernel.OBS_DIM
ACTION_DIM = pykernel.ACTION_DIM
DEFAULT_MAX_STEPS = pykernel.DEFAULT_MAX_STEPS


def backend_name() -> str:
    return BACKEND


@dataclass(frozen=True)
class RolloutStats:
    """Raw-observation accumulators from one episode."""

    count: int
    sum: np.ndarray
    sumsq: np.ndarray
    min: np.ndarray
    max: np.ndarray


def kernel_rollout(
    matrix: np.ndarray,
    obs_mean: np.ndarray,
    obs_inv_std: np.ndarray,
    embedding: np.ndarray,
    terrain_tuple: tuple[float, float, float, float, float],
    seed: int,
    max_steps: int,
    collect_stats: bool = False,
    impl=None,
) -> tuple[float, int, RolloutStats | None]:
    """Run one episode on the selected kernel (or ``impl`` when given)."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != ACTION_DIM:
        raise ValueError(f"matrix must be ({ACTION_DIM}, input_dim), got {matrix.shape}")
    embedding = np.ascontiguousarray(embedding, dtype=np.float64)
    if matrix.shape[1] != OBS_DIM + embedding.shape[0]:
        raise ValueError(
            f"matrix width {matrix.shape[1]} != {OBS_DIM} + embedding dim {embedding.shape[0]}"
        )
    obs_mean = np.ascontiguousarray(obs_mean, dtype=np.float64)
    obs_inv_std = np.ascontiguousarray(obs_inv_std, dtype=np.float64)
    restitution, lateral, rolling, stiffness, damping = terrain_tuple
    kernel = (impl or _impl).rollout
    total, steps, count, sums, sumsq, mins, maxs = kernel(
        matrix,
        obs_mean,
        obs_inv_std,
        embedding,
        float(restitution),
        float(lateral),
        float(rolling),
        float(stiffness),
        float(damping),
        int(seed) & 0xFFFFFFFFFFFFFFFF,
        int(max_steps),
        bool(collect_stats),
    )
    stats = RolloutStats(int(count), sums, sumsq, mins, maxs) if collect_stats else None
    return float(total), int(steps), stats
