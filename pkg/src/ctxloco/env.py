"""Step-level environment API over the simulation kernel.

``SurrogateEnv`` is the interactive surface (reset/step, used by the
session service and by tests that need to inspect individual steps); batch
work goes through ``episode_reward`` / ``kernel_rollout`` which run the
same dynamics on the selected kernel backend.

Observation layout (16 entries):
    [roll, pitch, gyro_x, gyro_y, gyro_z, acc_x, acc_y, acc_z,
     h, vx, vy, vh, contact_1..contact_4]
Sensor noise (uniform, +-1e-3) applies to the first 8 entries only.

Per-step reward: forward progress minus a small deviation penalty minus a
one-shot fall penalty; the episode ends on a fall or after ``max_steps``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import ACTION_DIM, DEFAULT_MAX_STEPS, OBS_DIM, kernel_rollout, pykernel
from .terrain import TerrainParams

OBS_NAMES = (
    "roll", "pitch", "gyro_x", "gyro_y", "gyro_z", "acc_x", "acc_y", "acc_z",
    "h", "vx", "vy", "vh", "contact_1", "contact_2", "contact_3", "contact_4",
)
NOISY_OBS_SLICE = slice(0, 8)


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


class SurrogateEnv:
    """One locomotion episode at a time on a fixed terrain."""

    def __init__(self, max_steps: int = DEFAULT_MAX_STEPS):
        self.max_steps = int(max_steps)
        self._state: pykernel.SimState | None = None
        self._terrain: TerrainParams | None = None
        self._done = True

    @property
    def terrain(self) -> TerrainParams | None:
        return self._terrain

    @property
    def step_index(self) -> int:
        return self._state.step_index if self._state is not None else 0

    @property
    def body(self) -> dict:
        """Current body state for telemetry."""
        s = self._state
        if s is None:
            raise RuntimeError("reset the environment first")
        return {
            "x": s.x, "y": s.y, "h": s.h,
            "vx": s.vx, "vy": s.vy, "vh": s.vh,
            "roll": s.roll, "pitch": s.pitch,
            "step_index": s.step_index,
        }

    @property
    def done(self) -> bool:
        return self._done

    def reset(self, terrain: TerrainParams, seed: int) -> np.ndarray:
        self._terrain = terrain
        self._state, obs = pykernel.reset_state(int(seed))
        self._done = False
        return np.asarray(obs)

    def step(self, action) -> StepResult:
        if self._done or self._state is None:
            raise RuntimeError("episode is done; call reset() first")
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (ACTION_DIM,):
            raise ValueError(f"action must have shape ({ACTION_DIM},), got {action.shape}")
        obs, reward, fell, dx, y_penalty = pykernel.step_once(
            self._state, action, *self._terrain.as_tuple()
        )
        done = fell or self._state.step_index >= self.max_steps
        self._done = done
        return StepResult(
            observation=np.asarray(obs),
            reward=reward,
            done=done,
            info={"dx": dx, "y_penalty": y_penalty, "fell": fell},
        )


def episode_reward(
    policy,
    terrain: TerrainParams,
    seed: int,
    embedding=None,
    max_steps: int | None = None,
) -> float:
    """Total reward of one full episode under a linear policy.

    ``embedding`` defaults to the zero vector of the policy's context dim.
    Runs on the selected kernel backend; bit-identical to driving
    ``SurrogateEnv`` with ``policy.act`` step by step.
    """
    mean, inv_std = policy.normalizer_arrays()
    emb = policy.embedding_array(embedding)
    cap = policy_episode_cap(max_steps)
    total, _, _ = kernel_rollout(
        policy.matrix, mean, inv_std, emb, terrain.as_tuple(), seed, cap
    )
    return total


def policy_episode_cap(max_steps: int | None) -> int:
    return DEFAULT_MAX_STEPS if max_steps is None else int(max_steps)


def run_episode_trace(
    policy, terrain: TerrainParams, seed: int, embedding=None, max_steps: int | None = None
):
    """Step an episode yielding one telemetry dict per step (for JSONL dumps)."""
    env = SurrogateEnv(policy_episode_cap(max_steps))
    obs = env.reset(terrain, seed)
    emb = policy.embedding_array(embedding)
    cumulative = 0.0
    while not env.done:
        action = policy.act(obs, emb)
        result = env.step(action)
        obs = result.observation
        cumulative += result.reward
        body = env.body
        yield {
            "t": body["step_index"],
            "x": body["x"],
            "y": body["y"],
            "h": body["h"],
            "reward": result.reward,
            "reward_cumulative": cumulative,
            "contacts": [int(v) for v in obs[12:16]],
        }


def dump_episode_trace(
    policy, terrain: TerrainParams, seed: int, path, embedding=None, max_steps=None
) -> int:
    """Write a JSON-lines episode trace; returns the number of steps."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in run_episode_trace(policy, terrain, seed, embedding, max_steps):
            fh.write(json.dumps(record) + "\n")
            n += 1
    return n
