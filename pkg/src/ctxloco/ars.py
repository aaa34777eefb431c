"""Augmented random search over a linear policy.

Each iteration samples N gaussian direction matrices, rolls out the
positive and negative perturbation of every direction (the two members of
a pair share terrain and episode seed, which cancels episode noise from
the difference), ranks directions by their better rollout, and moves the
matrix along the top directions scaled by the reward standard deviation.

Observation normalization statistics are frozen while an iteration's
rollouts run and folded in afterwards, so both members of every pair see
identical normalization.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ACTION_DIM, OBS_DIM, kernel_rollout
from .embedding import BLOCK_ORDER, ContextEmbedding, ContextMode, embed, embedding_dim, index_embedding
from .errors import ConfigError
from .rng import RandomStream, mix64
from .terrain import TerrainParams, describe_low_level, quantize, sample_terrain
from .translator import mock_translate

POLICY_FORMAT_VERSION = 1
_VAR_EPS = 1e-8


@dataclass(frozen=True)
class ArsConfig:
    """Search hyperparameters. Defaults are the full-scale settings."""

    step_size: float = 0.03
    n_directions: int = 16
    noise: float = 0.05
    top_b: int = 8
    max_env_steps: int = 2_000_000
    episode_cap: int = 5000
    n_train_scenarios: int = 8
    scenarios_per_direction: int = 2
    seed: int = 0
    gamma: float = 1.0  # recorded, unused: episodic return is undiscounted

    def __post_init__(self):
        if self.step_size <= 0:
            raise ConfigError("step_size must be positive")
        if self.noise <= 0:
            raise ConfigError("noise must be positive")
        if not (1 <= self.top_b <= self.n_directions):
            raise ConfigError("top_b must be in [1, n_directions]")
        if self.episode_cap <= 0:
            raise ConfigError("episode_cap must be positive")
        if self.n_train_scenarios <= 0:
            raise ConfigError("n_train_scenarios must be positive")
        if not (1 <= self.scenarios_per_direction <= self.n_train_scenarios):
            raise ConfigError("scenarios_per_direction must be in [1, n_train_scenarios]")

    def to_dict(self) -> dict:
        return {
            "step_size": self.step_size,
            "n_directions": self.n_directions,
            "noise": self.noise,
            "top_b": self.top_b,
            "max_env_steps": self.max_env_steps,
            "episode_cap": self.episode_cap,
            "n_train_scenarios": self.n_train_scenarios,
            "scenarios_per_direction": self.scenarios_per_direction,
            "seed": self.seed,
            "gamma": self.gamma,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ArsConfig":
        known = {f: data[f] for f in cls.__dataclass_fields__ if f in data}
        return cls(**known)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    mean_reward: float
    max_reward: float
    env_steps: int
    sigma_r: float


class LinearPolicy:
    """Matrix policy with frozen observation-normalization statistics."""

    def __init__(
        self,
        matrix: np.ndarray,
        obs_mean: np.ndarray,
        obs_var: np.ndarray,
        embedding_mode: ContextMode,
        embedding_dim: int,
        block_order: tuple[str, ...] = BLOCK_ORDER,
        seed: int = 0,
        env_steps: int = 0,
        config: dict | None = None,
    ):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.obs_mean = np.asarray(obs_mean, dtype=np.float64)
        self.obs_var = np.asarray(obs_var, dtype=np.float64)
        self.embedding_mode = ContextMode(embedding_mode)
        self.embedding_dim = int(embedding_dim)
        self.block_order = tuple(block_order)
        self.seed = int(seed)
        self.env_steps = int(env_steps)
        self.config = config

        if self.matrix.shape != (ACTION_DIM, OBS_DIM + self.embedding_dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} != "
                f"({ACTION_DIM}, {OBS_DIM + self.embedding_dim})"
            )
        if self.obs_mean.shape != (OBS_DIM,) or self.obs_var.shape != (OBS_DIM,):
            raise ValueError("obs_mean/obs_var must be 16-vectors")
        if np.any(self.obs_var < 0):
            raise ValueError("obs_var entries must be >= 0")

    @property
    def action_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def zero(cls, mode: ContextMode, n_scenarios: int = 8, **kwargs) -> "LinearPolicy":
        edim = embedding_dim(mode, n_scenarios)
        return cls(
            matrix=np.zeros((ACTION_DIM, OBS_DIM + edim)),
            obs_mean=np.zeros(OBS_DIM),
            obs_var=np.ones(OBS_DIM),
            embedding_mode=mode,
            embedding_dim=edim,
            **kwargs,
        )

    def normalizer_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(mean, 1/sqrt(var + eps)); the kernels multiply by the inverse."""
        inv_std = 1.0 / np.sqrt(self.obs_var + _VAR_EPS)
        return self.obs_mean, inv_std

    def embedding_array(self, embedding) -> np.ndarray:
        if embedding is None:
            return np.zeros(self.embedding_dim)
        if isinstance(embedding, ContextEmbedding):
            embedding = embedding.values
        arr = np.asarray(embedding, dtype=np.float64)
        if arr.shape != (self.embedding_dim,):
            raise ValueError(
                f"embedding dim {arr.shape} does not match policy ({self.embedding_dim},)"
            )
        return arr

    def act(self, observation, embedding=None) -> np.ndarray:
        """Deterministic action for one observation (step-level path)."""
        from .core import pykernel

        obs = np.asarray(observation, dtype=np.float64)
        if obs.shape != (OBS_DIM,):
            raise ValueError(f"observation must be a {OBS_DIM}-vector, got {obs.shape}")
        emb = self.embedding_array(embedding)
        mean, inv_std = self.normalizer_arrays()
        action = pykernel.policy_action(
            self.matrix.tolist(),
            mean.tolist(),
            inv_std.tolist(),
            emb.tolist(),
            obs.tolist(),
        )
        return np.asarray(action)

    def to_dict(self) -> dict:
        return {
            "format_version": POLICY_FORMAT_VERSION,
            "input_dim": self.input_dim,
            "action_dim": self.action_dim,
            "matrix": self.matrix.flatten().tolist(),
            "obs_mean": self.obs_mean.tolist(),
            "obs_var": self.obs_var.tolist(),
            "embedding_mode": self.embedding_mode.value,
            "embedding_dim": self.embedding_dim,
            "block_order": list(self.block_order),
            "seed": self.seed,
            "env_steps": self.env_steps,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinearPolicy":
        if data.get("format_version") != POLICY_FORMAT_VERSION:
            raise ValueError(f"unsupported policy format: {data.get('format_version')}")
        matrix = np.array(data["matrix"], dtype=np.float64).reshape(
            data["action_dim"], data["input_dim"]
        )
        return cls(
            matrix=matrix,
            obs_mean=np.array(data["obs_mean"]),
            obs_var=np.array(data["obs_var"]),
            embedding_mode=ContextMode(data["embedding_mode"]),
            embedding_dim=data["embedding_dim"],
            block_order=tuple(data["block_order"]),
            seed=data.get("seed", 0),
            env_steps=data.get("env_steps", 0),
            config=data.get("config"),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "LinearPolicy":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def content_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


def ars_update(
    matrix: np.ndarray,
    deltas,
    reward_pairs,
    config: ArsConfig,
) -> tuple[np.ndarray, float]:
    """One parameter update from N evaluated direction pairs.

    Directions are ranked by max(r+, r-); the top_b retained pairs drive
    the step, scaled by the population standard deviation of their 2*top_b
    rewards. A zero deviation (all retained rewards equal) skips the
    update. Returns (new_matrix, sigma_r).
    """
    n = len(deltas)
    if len(reward_pairs) != n:
        raise ValueError("deltas and reward_pairs must have equal length")
    order = sorted(range(n), key=lambda k: -max(reward_pairs[k][0], reward_pairs[k][1]))
    top = order[: config.top_b]
    retained = []
    for k in top:
        retained.append(reward_pairs[k][0])
        retained.append(reward_pairs[k][1])
    sigma = float(np.std(retained))
    if sigma == 0.0:
        return np.array(matrix, dtype=np.float64, copy=True), 0.0
    total = np.zeros_like(np.asarray(matrix, dtype=np.float64))
    for k in top:
        r_plus, r_minus = reward_pairs[k]
        total += (r_plus - r_minus) * np.asarray(deltas[k], dtype=np.float64)
    scale = config.step_size / (config.top_b * sigma)
    return np.asarray(matrix, dtype=np.float64) + scale * total, sigma


def training_scenarios(seed: int, n_scenarios: int) -> list[TerrainParams]:
    """Level-stratified domain randomization.

    Each scenario draws every graded property uniformly inside one level
    bin, with the bins assigned from seeded per-property permutations so
    all five levels of every property appear across eight scenarios. This
    keeps the randomization honest while guaranteeing the context
    vocabulary seen in training covers the grade scale.
    """
    from .terrain import N_LEVELS, RANGES

    stream = RandomStream(mix64(seed, 0x5CE))
    graded_fields = ("restitution", "lateral_friction", "stiffness", "damping")
    # per-property random permutations of the five levels, reshuffled per pass
    assignments: dict[str, list[int]] = {f: [] for f in graded_fields}
    while len(assignments[graded_fields[0]]) < n_scenarios:
        for f in graded_fields:
            perm = list(range(N_LEVELS))
            for i in range(N_LEVELS - 1, 0, -1):
                j = int(stream.uniform(0.0, float(i + 1)))
                perm[i], perm[j] = perm[j], perm[i]
            assignments[f].extend(perm)
    out = []
    for i in range(n_scenarios):
        values = {}
        for f in graded_fields:
            lo, hi = RANGES[f]
            width = (hi - lo) / N_LEVELS
            level = assignments[f][i]
            values[f] = stream.uniform(lo + level * width, lo + (level + 1) * width)
        lo, hi = RANGES["rolling_friction"]
        values["rolling_friction"] = stream.uniform(lo, hi)
        out.append(TerrainParams(**values))
    return out


def scenario_embeddings(
    terrains: list[TerrainParams], method: ContextMode
) -> list[np.ndarray]:
    """Per-scenario context input used during training.

    EMBEDDING runs the full language path: grade the terrain, render the
    low-level sentence, let the rule oracle read it back, one-hot encode.
    """
    out = []
    for i, terrain in enumerate(terrains):
        if method is ContextMode.EMBEDDING:
            levels = mock_translate(describe_low_level(quantize(terrain)))
            out.append(np.asarray(embed(levels).values, dtype=np.float64))
        elif method is ContextMode.INDEXING:
            vec = index_embedding(i, len(terrains), is_training=True)
            out.append(np.asarray(vec.values, dtype=np.float64))
        else:
            out.append(np.zeros(0))
    return out


def _direction_scenarios(k: int, iteration: int, n_scenarios: int, sub: int) -> list[int]:
    """Deterministic rotating subset of scenarios for direction k."""
    stride = max(1, n_scenarios // sub)
    return [(k + iteration + j * stride) % n_scenarios for j in range(sub)]


def _draw_deltas(seed: int, iteration: int, n: int, edim: int) -> np.ndarray:
    """I.i.d. standard-normal direction matrices for one iteration.

    Sensor columns and context columns come from separate per-iteration
    streams, so runs that differ only in context mode share the sensor
    exploration sequence (common random numbers; makes method comparisons
    at equal seeds far less noisy without changing any marginal
    distribution).
    """
    sensor_rng = np.random.Generator(np.random.PCG64(mix64(seed, iteration, 0x5E45)))
    sensor = sensor_rng.standard_normal((n, ACTION_DIM, OBS_DIM))
    if edim == 0:
        return sensor
    ctx_rng = np.random.Generator(np.random.PCG64(mix64(seed, iteration, 0xC047)))
    ctx = ctx_rng.standard_normal((n, ACTION_DIM, edim))
    return np.concatenate([sensor, ctx], axis=2)


@dataclass
class _RunningStats:
    count: int = 0
    total: np.ndarray = field(default_factory=lambda: np.zeros(OBS_DIM))
    total_sq: np.ndarray = field(default_factory=lambda: np.zeros(OBS_DIM))
    seen_min: np.ndarray | None = None
    seen_max: np.ndarray | None = None

    def merge(self, stats) -> None:
        if stats.count == 0:
            return
        self.count += stats.count
        self.total += stats.sum
        self.total_sq += stats.sumsq
        if self.seen_min is None:
            self.seen_min = stats.min.copy()
            self.seen_max = stats.max.copy()
        else:
            np.minimum(self.seen_min, stats.min, out=self.seen_min)
            np.maximum(self.seen_max, stats.max, out=self.seen_max)

    def mean_var(self) -> tuple[np.ndarray, np.ndarray]:
        if self.count == 0:
            return np.zeros(OBS_DIM), np.ones(OBS_DIM)
        mean = self.total / self.count
        var = np.maximum(self.total_sq / self.count - mean * mean, 0.0)
        return mean, var


def train(
    method: ContextMode,
    config: ArsConfig,
    jobs: int = 1,
    progress=None,
) -> tuple[LinearPolicy, list[IterationRecord]]:
    """Domain-randomized training across the sampled scenario set.

    Direction k of an iteration evaluates both signs of its perturbation
    on the same deterministic rotating subset of scenarios with shared
    per-(iteration, direction, scenario) episode seeds, so pair members
    face identical conditions and results do not depend on scheduling.
    Stops before the iteration that could exceed the env-step budget.
    """
    method = ContextMode(method)
    n = config.n_directions
    n_sub = config.scenarios_per_direction
    iteration_cost = 2 * n * n_sub * config.episode_cap
    if iteration_cost > config.max_env_steps:
        raise ConfigError(
            f"budget {config.max_env_steps} is below one iteration "
            f"({iteration_cost} env steps)"
        )

    terrains = training_scenarios(config.seed, config.n_train_scenarios)
    embeddings = scenario_embeddings(terrains, method)
    edim = embedding_dim(method, config.n_train_scenarios)

    matrix = np.zeros((ACTION_DIM, OBS_DIM + edim))
    stats = _RunningStats()

    records: list[IterationRecord] = []
    matrix_trail: list[np.ndarray] = []
    steps_used = 0
    iteration = 0
    while steps_used + iteration_cost <= config.max_env_steps:
        mean, var = stats.mean_var()
        inv_std = 1.0 / np.sqrt(var + _VAR_EPS)
        deltas = _draw_deltas(config.seed, iteration, n, edim)

        tasks = []
        for k in range(n):
            scenario_set = _direction_scenarios(
                k, iteration, config.n_train_scenarios, n_sub
            )
            for sign in (1.0, -1.0):
                perturbed = matrix + sign * config.noise * deltas[k]
                for s in scenario_set:
                    ep_seed = mix64(config.seed, iteration, k, s)
                    tasks.append(
                        (perturbed, mean, inv_std, embeddings[s],
                         terrains[s].as_tuple(), ep_seed, config.episode_cap)
                    )

        def _run(task):
            m, mu, inv, emb, terr, sd, cap = task
            return kernel_rollout(m, mu, inv, emb, terr, sd, cap, collect_stats=True)

        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run, tasks))
        else:
            results = [_run(t) for t in tasks]

        reward_pairs = []
        rewards_flat = []
        for k in range(n):
            plus_group = results[2 * k * n_sub : (2 * k + 1) * n_sub]
            minus_group = results[(2 * k + 1) * n_sub : (2 * k + 2) * n_sub]
            r_plus = sum(r[0] for r in plus_group) / n_sub
            r_minus = sum(r[0] for r in minus_group) / n_sub
            reward_pairs.append((r_plus, r_minus))
            rewards_flat.extend((r_plus, r_minus))
            for res in plus_group + minus_group:
                steps_used += res[1]
                stats.merge(res[2])

        matrix, sigma = ars_update(matrix, deltas, reward_pairs, config)
        matrix_trail.append(matrix)
        record = IterationRecord(
            iteration=iteration,
            mean_reward=float(np.mean(rewards_flat)),
            max_reward=float(np.max(rewards_flat)),
            env_steps=steps_used,
            sigma_r=sigma,
        )
        records.append(record)
        if progress is not None:
            progress(record)
        iteration += 1

    # Tail-averaged iterate (Polyak): a single ARS iterate is a noisy
    # sample around the attractor; averaging the trailing half gives a
    # markedly more reproducible policy at no extra rollout cost.
    tail = matrix_trail[len(matrix_trail) // 2 :]
    if tail:
        matrix = sum(tail) / len(tail)

    mean, var = stats.mean_var()
    policy = LinearPolicy(
        matrix=matrix,
        obs_mean=mean,
        obs_var=var,
        embedding_mode=method,
        embedding_dim=edim,
        seed=config.seed,
        env_steps=steps_used,
        config=config.to_dict(),
    )
    policy.obs_seen_min = stats.seen_min  # probe attributes, not serialized
    policy.obs_seen_max = stats.seen_max
    return policy, records


CURVE_HEADER = "iteration,env_steps,mean_reward,max_reward,sigma_r"


def write_curve(records: list[IterationRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CURVE_HEADER + "\n")
        for r in records:
            fh.write(
                f"{r.iteration},{r.env_steps},{r.mean_reward!r},{r.max_reward!r},{r.sigma_r!r}\n"
            )
