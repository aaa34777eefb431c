"""Context vectors consumed by the policy.

Three modes exist. EMBEDDING concatenates one one-hot block per graded
property (4 blocks x 5 levels = 20 entries). INDEXING is a single one-hot
over the training scenarios during training and all zeros at evaluation.
NO_CONTEXT is the empty vector.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .terrain import GRADED_PROPERTIES, N_LEVELS, PropertyLevel, PropertyLevels

# Concatenation order of the one-hot blocks; recorded in policy files so a
# trained policy is never silently fed a permuted embedding.
BLOCK_ORDER = GRADED_PROPERTIES


class ContextMode(str, enum.Enum):
    EMBEDDING = "embedding"
    INDEXING = "indexing"
    NO_CONTEXT = "no_context"


@dataclass(frozen=True)
class ContextEmbedding:
    values: tuple[int, ...]
    mode: ContextMode

    @property
    def dim(self) -> int:
        return len(self.values)

    def to_list(self) -> list[int]:
        return list(self.values)


def onehot(level: PropertyLevel) -> list[int]:
    """Five-entry one-hot with the 1 at the level's ordinal."""
    vec = [0] * N_LEVELS
    vec[int(level)] = 1
    return vec


def embed(levels: PropertyLevels, include_rolling_friction: bool = False) -> ContextEmbedding:
    """Concatenate per-property one-hots in BLOCK_ORDER.

    ``include_rolling_friction`` adds a fifth block (a copy of the friction
    grade, which rolling friction is coupled to) for a 25-dim vector. The
    default 4-block / 20-dim form is what training and evaluation use.
    """
    values: list[int] = []
    for name in BLOCK_ORDER:
        values.extend(onehot(getattr(levels, name)))
        if name == "friction" and include_rolling_friction:
            values.extend(onehot(levels.friction))
    return ContextEmbedding(tuple(values), ContextMode.EMBEDDING)


def index_embedding(scenario_index: int, n_scenarios: int, is_training: bool) -> ContextEmbedding:
    """Scenario one-hot while training; all-zero padding at evaluation."""
    if n_scenarios <= 0:
        raise ValueError(f"n_scenarios must be positive, got {n_scenarios}")
    values = [0] * n_scenarios
    if is_training:
        if not (0 <= scenario_index < n_scenarios):
            raise ValueError(
                f"scenario_index {scenario_index} out of range [0, {n_scenarios})"
            )
        values[scenario_index] = 1
    return ContextEmbedding(tuple(values), ContextMode.INDEXING)


def no_context() -> ContextEmbedding:
    return ContextEmbedding((), ContextMode.NO_CONTEXT)


def embedding_dim(mode: ContextMode, n_scenarios: int = 8) -> int:
    if mode is ContextMode.EMBEDDING:
        return len(BLOCK_ORDER) * N_LEVELS
    if mode is ContextMode.INDEXING:
        return n_scenarios
    return 0
