import json

import numpy as np
import pytest

from ctxloco.ars import ArsConfig, LinearPolicy, train
from ctxloco.embedding import ContextMode
from ctxloco.errors import BackendError
from ctxloco.evaluation import builtin_cases, evaluate, run_study
from ctxloco.terrain import PropertyLevel, levels_to_params
from ctxloco.translator import TranslationCache, mock_translate

L = PropertyLevel

# Frozen copies of the ten reference description strings; the library code
# must match these byte for byte.
REFERENCE_DESCRIPTIONS = {
    "A": "This environment has no restitution when collision, very high friction, and no damping.",
    "B": "This environment has no restitution when collision, very low friction, and no damping.",
    "C": "This environment has high restitution when collision, very high friction, and very high damping.",
    "D": "This environment has medium restitution when collision, low friction, and very high damping.",
    "E": "This environment has high restitution when collision, very high friction, and low stiffness.",
    "F": "The spot is walking on a grassland under a drizzle.",
    "G": "The spot is walking on a mountain road covered by ice. It's snowy now.",
    "H": "The spot is walking on the beach near the sea under the sun.",
    "I": "The spot is walking on a concrete road under heavy rain.",
    "J": "The spot is walking on running tracks on a sunny day.",
}


class TestBuiltinCases:
    def test_ten_cases_five_low_five_high(self):
        cases = builtin_cases()
        assert [c.id for c in cases] == list("ABCDEFGHIJ")
        assert len(builtin_cases("low")) == 5
        assert len(builtin_cases("high")) == 5
        assert all(c.kind == "low" for c in builtin_cases("low"))

    def test_descriptions_byte_for_byte(self):
        for case in builtin_cases():
            assert case.description == REFERENCE_DESCRIPTIONS[case.id]

    def test_case_names(self):
        by_id = {c.id: c for c in builtin_cases()}
        assert by_id["J"].name == "Sunny Running Tracks"
        assert by_id["F"].name == "Moist Grassland"
        assert "very low friction" in by_id["B"].description

    def test_ground_truth_levels_match_oracle(self):
        # the frozen levels must equal what the rule oracle reads today
        for case in builtin_cases():
            assert case.ground_truth_levels == mock_translate(case.description), case.id

    def test_explicit_phrase_levels(self):
        by_id = {c.id: c for c in builtin_cases()}
        assert by_id["B"].ground_truth_levels.friction is L.VERY_LOW
        assert by_id["C"].ground_truth_levels.damping is L.VERY_HIGH
        assert by_id["A"].ground_truth_levels.restitution is L.VERY_LOW
        assert by_id["E"].ground_truth_levels.stiffness is L.LOW
        assert by_id["D"].ground_truth_levels.restitution is L.MEDIUM

    def test_params_are_level_midpoints(self):
        for case in builtin_cases():
            assert case.ground_truth_params == levels_to_params(case.ground_truth_levels)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            builtin_cases("medium")


class TestEvaluate:
    def test_zero_policy_zero_mean(self, mock_backend):
        policy = LinearPolicy.zero(ContextMode.NO_CONTEXT)
        case = builtin_cases()[0]
        result = evaluate(policy, case, mock_backend, n_episodes=4, episode_cap=200)
        assert result.mean == 0.0
        assert len(result.episodes) == 4

    def test_indexing_receives_zero_padding(self, mock_backend):
        # probe run: drive the episodes manually and check every policy
        # input's context block is zero, whatever the description said
        from ctxloco.env import SurrogateEnv

        policy = LinearPolicy.zero(ContextMode.INDEXING, n_scenarios=8)
        case = builtin_cases()[1]
        result = evaluate(policy, case, mock_backend, n_episodes=2, episode_cap=100)
        assert result.backend == "padding"

        env = SurrogateEnv(100)
        obs = env.reset(case.ground_truth_params, 0)
        emb = policy.embedding_array(None)
        while not env.done:
            assert np.array_equal(emb, np.zeros(8))
            obs = env.step(policy.act(obs, emb)).observation

    def test_deterministic_cells(self, mock_backend):
        policy = LinearPolicy.zero(ContextMode.EMBEDDING)
        policy.matrix = np.random.default_rng(5).standard_normal((8, 36)) * 0.1
        case = builtin_cases()[2]
        a = evaluate(policy, case, mock_backend, n_episodes=3, seed=9, episode_cap=200)
        b = evaluate(policy, case, mock_backend, n_episodes=3, seed=9, episode_cap=200)
        assert a.episodes == b.episodes

    def test_mean_equals_mean_of_episodes(self, mock_backend):
        policy = LinearPolicy.zero(ContextMode.NO_CONTEXT)
        policy.matrix = np.random.default_rng(1).standard_normal((8, 16)) * 0.1
        case = builtin_cases()[4]
        result = evaluate(policy, case, mock_backend, n_episodes=5, episode_cap=150)
        assert result.mean == pytest.approx(sum(result.episodes) / 5, abs=1e-12)

    def test_translation_failure_marks_cell(self):
        class DeadBackend:
            identity = "dead"
            max_retries = 0

            def complete(self, prompt):
                raise BackendError("unreachable")

        policy = LinearPolicy.zero(ContextMode.EMBEDDING)
        case = builtin_cases()[0]
        result = evaluate(policy, case, DeadBackend(), n_episodes=2, episode_cap=100)
        assert result.error is not None
        assert result.episodes == []


class TestRunStudy:
    @pytest.fixture(scope="class")
    def policies(self):
        cfg = ArsConfig(max_env_steps=20_000, episode_cap=50, noise=0.02, seed=0)
        return {mode: train(mode, cfg)[0] for mode in ContextMode}

    def test_grid_has_thirty_cells(self, policies, mock_backend, tmp_path):
        report = run_study(
            policies, mock_backend, seed=1, out_dir=tmp_path, n_episodes=2,
            episode_cap=100,
        )
        assert len(report.cells) == 30
        assert report.cell("embedding", "A") is not None
        assert set(report.policy_hashes) == {"embedding", "indexing", "no_context"}

    def test_report_files(self, policies, mock_backend, tmp_path):
        run_study(policies, mock_backend, seed=1, out_dir=tmp_path, n_episodes=2,
                  episode_cap=100)
        csv_text = (tmp_path / "report.csv").read_text()
        lines = csv_text.strip().split("\n")
        assert lines[0] == "method,case_id,case_name,mean_reward,std_reward"
        assert len(lines) == 31
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["n_episodes"] == 2
        assert len(data["cells"]) == 30
        assert all(len(cell["episodes"]) == 2 for cell in data["cells"])

    def test_rerun_identical_bytes(self, policies, mock_backend, tmp_path):
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        for out in (dir_a, dir_b):
            run_study(policies, mock_backend, seed=3, out_dir=out, n_episodes=2,
                      episode_cap=100)
        assert (dir_a / "report.csv").read_bytes() == (dir_b / "report.csv").read_bytes()
        assert (dir_a / "report.json").read_bytes() == (dir_b / "report.json").read_bytes()

    def test_embedding_cells_hit_cache(self, policies, tmp_path):
        calls = []

        class CountingBackend:
            identity = "counting"
            max_retries = 0

            def complete(self, prompt):
                calls.append(prompt.input_description)
                from ctxloco.translator import mock_translate, render_answer_lines

                return render_answer_lines(mock_translate(prompt.input_description))

        cache = TranslationCache(tmp_path / "cache.json")
        run_study({ContextMode.EMBEDDING: policies[ContextMode.EMBEDDING]},
                  CountingBackend(), seed=0, n_episodes=2, episode_cap=100,
                  cache=cache)
        assert len(calls) == 10  # one translation per case, never per episode

    def test_missing_policies_rejected(self, mock_backend):
        with pytest.raises(ValueError):
            run_study({}, mock_backend)

    def test_subset_of_methods_allowed(self, policies, mock_backend):
        report = run_study(
            {ContextMode.NO_CONTEXT: policies[ContextMode.NO_CONTEXT]},
            mock_backend, n_episodes=1, episode_cap=50,
        )
        assert len(report.cells) == 10
