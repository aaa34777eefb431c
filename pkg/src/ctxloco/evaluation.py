"""Evaluation protocol: ten fixed terrain-description cases, sixteen
episodes per (method, case) cell, report emission as CSV and JSON.

Five cases describe properties directly ("low-level", A-E); five describe
scenery and weather ("high-level", F-J). Ground-truth grades are the rule
oracle's reading of each description, frozen here; the physical terrain
each cell runs on is the grade-midpoint inversion of those grades.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

from .ars import LinearPolicy
from .embedding import ContextMode, embed, no_context
from .env import episode_reward
from .errors import BackendError, TranslationError
from .terrain import PropertyLevel, PropertyLevels, TerrainParams, levels_to_params
from .translator import TranslationCache, translate

L = PropertyLevel


@dataclass(frozen=True)
class EvalCase:
    id: str
    name: str
    description: str
    ground_truth_levels: PropertyLevels
    kind: str  # "low" or "high"

    @property
    def ground_truth_params(self) -> TerrainParams:
        return levels_to_params(self.ground_truth_levels)


_CASES = (
    EvalCase(
        "A",
        "Normal Terrain",
        "This environment has no restitution when collision, very high friction, and no damping.",
        PropertyLevels(L.VERY_LOW, L.VERY_HIGH, L.MEDIUM, L.VERY_LOW),
        "low",
    ),
    EvalCase(
        "B",
        "Low Friction",
        "This environment has no restitution when collision, very low friction, and no damping.",
        PropertyLevels(L.VERY_LOW, L.VERY_LOW, L.MEDIUM, L.VERY_LOW),
        "low",
    ),
    EvalCase(
        "C",
        "High Damping",
        "This environment has high restitution when collision, very high friction, and very high damping.",
        PropertyLevels(L.HIGH, L.VERY_HIGH, L.MEDIUM, L.VERY_HIGH),
        "low",
    ),
    EvalCase(
        "D",
        "Medium Restitution, Very High Damping",
        "This environment has medium restitution when collision, low friction, and very high damping.",
        PropertyLevels(L.MEDIUM, L.LOW, L.MEDIUM, L.VERY_HIGH),
        "low",
    ),
    EvalCase(
        "E",
        "High Restitution, Low Stiffness",
        "This environment has high restitution when collision, very high friction, and low stiffness.",
        PropertyLevels(L.HIGH, L.VERY_HIGH, L.LOW, L.MEDIUM),
        "low",
    ),
    EvalCase(
        "F",
        "Moist Grassland",
        "The spot is walking on a grassland under a drizzle.",
        PropertyLevels(L.MEDIUM, L.LOW, L.LOW, L.HIGH),
        "high",
    ),
    EvalCase(
        "G",
        "Snowy Mountain Road",
        "The spot is walking on a mountain road covered by ice. It's snowy now.",
        PropertyLevels(L.LOW, L.VERY_LOW, L.VERY_HIGH, L.MEDIUM),
        "high",
    ),
    EvalCase(
        "H",
        "Sunny Beach",
        "The spot is walking on the beach near the sea under the sun.",
        PropertyLevels(L.MEDIUM, L.HIGH, L.VERY_LOW, L.VERY_HIGH),
        "high",
    ),
    EvalCase(
        "I",
        "Rainy Concrete Road",
        "The spot is walking on a concrete road under heavy rain.",
        PropertyLevels(L.MEDIUM, L.MEDIUM, L.VERY_HIGH, L.HIGH),
        "high",
    ),
    EvalCase(
        "J",
        "Sunny Running Tracks",
        "The spot is walking on running tracks on a sunny day.",
        PropertyLevels(L.HIGH, L.VERY_HIGH, L.HIGH, L.MEDIUM),
        "high",
    ),
)


def builtin_cases(kind: str = "all") -> list[EvalCase]:
    """The ten fixed cases; ``kind`` filters to "low" (A-E) or "high" (F-J)."""
    if kind == "all":
        return list(_CASES)
    if kind in ("low", "high"):
        return [c for c in _CASES if c.kind == kind]
    raise ValueError(f"kind must be all/low/high, got {kind!r}")


N_EPISODES_DEFAULT = 16


@dataclass
class CaseResult:
    method: str
    case_id: str
    case_name: str
    episodes: list[float] = field(default_factory=list)
    backend: str = ""
    error: str | None = None

    @property
    def mean(self) -> float:
        return sum(self.episodes) / len(self.episodes) if self.episodes else float("nan")

    @property
    def std(self) -> float:
        if not self.episodes:
            return float("nan")
        m = self.mean
        return (sum((r - m) ** 2 for r in self.episodes) / len(self.episodes)) ** 0.5


def _case_embedding(policy: LinearPolicy, case: EvalCase, backend, cache) -> tuple:
    """Context input for this cell + the backend label that produced it."""
    mode = policy.embedding_mode
    if mode is ContextMode.EMBEDDING:
        result = translate(case.description, backend, cache)
        return embed(result.levels), result.backend
    if mode is ContextMode.INDEXING:
        # scenario identity is unknown at evaluation: zero padding
        return [0] * policy.embedding_dim, "padding"
    return no_context(), "none"


def evaluate(
    policy: LinearPolicy,
    case: EvalCase,
    translator_backend,
    n_episodes: int = N_EPISODES_DEFAULT,
    seed: int = 0,
    episode_cap: int | None = None,
    cache: TranslationCache | None = None,
) -> CaseResult:
    """Mean/std episodic reward of one policy on one case.

    Episodes run on the case's ground-truth terrain with seeds
    seed..seed+n_episodes-1, so every method faces identical episode noise.
    """
    result = CaseResult(
        method=policy.embedding_mode.value, case_id=case.id, case_name=case.name
    )
    try:
        context, backend_label = _case_embedding(policy, case, translator_backend, cache)
    except (TranslationError, BackendError) as exc:
        result.error = str(exc)
        return result
    result.backend = backend_label
    emb = policy.embedding_array(
        context.values if hasattr(context, "values") else context
    )
    terrain = case.ground_truth_params
    for episode in range(n_episodes):
        result.episodes.append(
            episode_reward(policy, terrain, seed + episode, emb, episode_cap)
        )
    return result


@dataclass
class EvalReport:
    cells: list[CaseResult]
    seed: int
    n_episodes: int
    policy_hashes: dict[str, str]
    translator_backend: str

    def cell(self, method: str, case_id: str) -> CaseResult:
        for c in self.cells:
            if c.method == method and c.case_id == case_id:
                return c
        raise KeyError((method, case_id))

    def grand_mean(self, method: str) -> float:
        episodes = [r for c in self.cells if c.method == method for r in c.episodes]
        return sum(episodes) / len(episodes)

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_episodes": self.n_episodes,
            "policy_hashes": self.policy_hashes,
            "translator_backend": self.translator_backend,
            "cells": [
                {
                    "method": c.method,
                    "case_id": c.case_id,
                    "case_name": c.case_name,
                    "mean_reward": c.mean,
                    "std_reward": c.std,
                    "episodes": c.episodes,
                    "backend": c.backend,
                    "error": c.error,
                }
                for c in self.cells
            ],
        }


def run_study(
    policies: dict[ContextMode, LinearPolicy],
    translator_backend,
    seed: int = 0,
    out_dir: str | os.PathLike | None = None,
    cases: list[EvalCase] | None = None,
    n_episodes: int = N_EPISODES_DEFAULT,
    episode_cap: int | None = None,
    cache: TranslationCache | None = None,
) -> EvalReport:
    """The full method-by-case grid; optionally writes report.csv/report.json.

    A failed translation marks its cell and the study continues.
    """
    if not policies:
        raise ValueError("at least one method policy is required")
    if cases is None:
        cases = builtin_cases()
    if cache is None:
        cache = TranslationCache()

    cells = []
    for mode in ContextMode:
        if mode not in policies:
            continue
        policy = policies[mode]
        for case in cases:
            cells.append(
                evaluate(policy, case, translator_backend, n_episodes, seed, episode_cap, cache)
            )

    report = EvalReport(
        cells=cells,
        seed=seed,
        n_episodes=n_episodes,
        policy_hashes={m.value: p.content_hash() for m, p in policies.items()},
        translator_backend=getattr(translator_backend, "identity", str(translator_backend)),
    )
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_report_csv(report, os.path.join(out_dir, "report.csv"))
        write_report_json(report, os.path.join(out_dir, "report.json"))
    return report


def write_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "case_id", "case_name", "mean_reward", "std_reward"])
        for c in report.cells:
            writer.writerow(
                [c.method, c.case_id, c.case_name, repr(c.mean), repr(c.std)]
            )


def write_report_json(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=1)
        fh.write("\n")
