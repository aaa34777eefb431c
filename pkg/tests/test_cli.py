import json

import pytest

from ctxloco.cli import main

DESK_ARS = {"max_env_steps": 20_000, "episode_cap": 50, "noise": 0.02, "seed": 0}


@pytest.fixture
def run_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"format_version": 1, "ars": DESK_ARS}))
    return str(path)


def _train(tmp_path, run_config, method, extra=()):
    out = tmp_path / f"{method}.json"
    curve = tmp_path / f"{method}_curve.csv"
    code = main([
        "train", "--config", run_config, "--method", method,
        "--out", str(out), "--curve", str(curve), *extra,
    ])
    return code, out, curve


class TestTrain:
    def test_writes_policy_and_curve(self, tmp_path, run_config, capsys):
        code, out, curve = _train(tmp_path, run_config, "embedding")
        assert code == 0
        assert out.exists() and curve.exists()
        data = json.loads(out.read_text())
        assert data["embedding_mode"] == "embedding"
        assert "final mean reward" in capsys.readouterr().out

    def test_missing_config_exit_2(self, tmp_path, capsys):
        code = main([
            "train", "--config", str(tmp_path / "nope.json"),
            "--method", "embedding", "--out", str(tmp_path / "p.json"),
        ])
        assert code == 2

    def test_zero_steps_exit_2(self, tmp_path, run_config, capsys):
        code, *_ = _train(tmp_path, run_config, "embedding", ("--steps", "0"))
        assert code == 2
        assert "below one iteration" in capsys.readouterr().err

    def test_unknown_flag_fails(self):
        assert main(["train", "--bogus"]) == 2

    def test_determinism(self, tmp_path, run_config):
        _, out_a, curve_a = _train(tmp_path, run_config, "no_context")
        out_b = tmp_path / "b.json"
        curve_b = tmp_path / "b.csv"
        main(["train", "--config", run_config, "--method", "no_context",
              "--out", str(out_b), "--curve", str(curve_b)])
        assert out_a.read_bytes() == out_b.read_bytes()
        assert curve_a.read_bytes() == curve_b.read_bytes()


class TestEval:
    @pytest.fixture
    def policy_dir(self, tmp_path, run_config):
        pdir = tmp_path / "policies"
        pdir.mkdir()
        for method in ("embedding", "no_context"):
            main(["train", "--config", run_config, "--method", method,
                  "--out", str(pdir / f"{method}.json")])
        return pdir

    def test_full_eval(self, tmp_path, run_config, policy_dir, capsys):
        out = tmp_path / "report"
        code = main([
            "eval", "--config", run_config, "--policies", str(policy_dir),
            "--translator", "mock", "--episodes", "2", "--out", str(out),
        ])
        assert code == 0
        lines = (out / "report.csv").read_text().strip().split("\n")
        assert len(lines) == 1 + 2 * 10  # two methods present
        printed = capsys.readouterr().out
        assert "embedding" in printed and "no_context" in printed

    def test_low_cases_subset(self, tmp_path, run_config, policy_dir):
        out = tmp_path / "report_low"
        code = main([
            "eval", "--config", run_config, "--policies", str(policy_dir),
            "--cases", "low", "--episodes", "2", "--out", str(out),
        ])
        assert code == 0
        lines = (out / "report.csv").read_text().strip().split("\n")
        assert len(lines) == 1 + 2 * 5

    def test_missing_policies_exit_2(self, tmp_path, run_config):
        empty = tmp_path / "none"
        empty.mkdir()
        code = main(["eval", "--config", run_config, "--policies", str(empty)])
        assert code == 2

    def test_llm_without_key_exit_4(self, tmp_path, run_config, policy_dir, monkeypatch):
        monkeypatch.delenv("CTXLOCO_API_KEY", raising=False)
        cfg = tmp_path / "llm.json"
        cfg.write_text(json.dumps({
            "format_version": 1,
            "ars": DESK_ARS,
            "translator": {"base_url": "http://localhost:1", "model_name": "m"},
        }))
        code = main(["eval", "--config", str(cfg), "--policies", str(policy_dir),
                     "--translator", "llm"])
        assert code == 4


class TestTranslate:
    def test_prints_levels_and_embedding(self, capsys):
        code = main(["translate", "--description",
                     "The spot is walking on the beach near the sea under the sun.",
                     "--backend", "mock"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["levels"]["stiffness"] == "VERY_LOW"
        assert payload["levels"]["damping"] == "VERY_HIGH"
        assert len(payload["embedding"]) == 20
        assert sum(payload["embedding"]) == 4

    def test_empty_description_exit_2(self):
        assert main(["translate", "--description", "   "]) == 2

    def test_repeat_hits_cache(self, tmp_path, capsys):
        cache = str(tmp_path / "cache.json")
        main(["translate", "--description", "icy pond", "--cache", cache])
        first = json.loads(capsys.readouterr().out)
        main(["translate", "--description", "icy pond", "--cache", cache])
        second = json.loads(capsys.readouterr().out)
        assert first["levels"] == second["levels"]
        assert second["cached"] is True

    def test_bad_config_version(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"format_version": 99}))
        code = main(["translate", "--config", str(cfg), "--description", "mud"])
        assert code == 2


class TestHelp:
    @pytest.mark.parametrize("cmd", ["train", "eval", "translate", "serve", "demo"])
    def test_subcommand_help(self, cmd, capsys):
        with pytest.raises(SystemExit):
            from ctxloco.cli import build_parser

            build_parser().parse_args([cmd, "--help"])
        assert "usage" in capsys.readouterr().out


def test_demo_runs(capsys):
    code = main(["demo", "--seed", "1"])
    assert code == 0
    out = capsys.readouterr().out
    assert "grand mean" in out
    assert "kernel backend" in out
