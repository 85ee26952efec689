import json

import pytest
from click.testing import CliRunner

from quantclaw.cli import EXIT_INSUFFICIENT, EXIT_VALIDATION, main


@pytest.fixture
def runner():
    return CliRunner()


class TestProfileBuild:
    def test_table1_fixture_degradations(self, runner, fixtures_dir, tmp_path):
        out = tmp_path / "profiles.json"
        result = runner.invoke(
            main,
            ["--output", "json", "profile", "build",
             str(fixtures_dir / "table1_results.json"), "-o", str(out)],
        )
        assert result.exit_code == 0, result.output
        doc = json.loads(out.read_text())
        got = {t["category"]: t["rel_degradation"] for t in doc["tasks"]}
        expected = {
            "glm-4.7-flash": 0.0527,
            "glm-5": -0.0139,
            "minimax-m2.5": -0.0093,
            "qwen3.5-9b": 0.0375,
            "qwen3.5-35b-a3b": 0.0205,
            "qwen3.5-397b-a17b": 0.0157,
        }
        for cat, want in expected.items():
            assert got[cat] == pytest.approx(want, abs=1e-4)

    def test_output_roundtrips_through_loader(self, runner, fixtures_dir, tmp_path):
        from quantclaw.profiles import load_profiles

        out = tmp_path / "profiles.json"
        runner.invoke(
            main,
            ["profile", "build", str(fixtures_dir / "table1_results.json"), "-o", str(out)],
        )
        pset = load_profiles(out)
        assert len(pset.profiles) == 6

    def test_mean_of_identical_trials(self, runner, tmp_path):
        data = {
            "tasks": [
                {
                    "category": "t",
                    "high": {"trials": [{"score": 0.5}] * 6},
                    "low": {"trials": [{"score": 0.4}] * 6},
                }
            ]
        }
        src = tmp_path / "r.json"
        src.write_text(json.dumps(data))
        out = tmp_path / "p.json"
        result = runner.invoke(main, ["profile", "build", str(src), "-o", str(out)])
        assert result.exit_code == 0
        doc = json.loads(out.read_text())
        assert doc["tasks"][0]["high"]["score"] == 0.5
        assert doc["best"]["t"] == {"high_score": 0.5, "low_score": 0.4}

    def test_single_arm_task_is_validation_error(self, runner, tmp_path):
        data = {"tasks": [{"category": "lonely", "high": {"trials": [{"score": 0.5}]}}]}
        src = tmp_path / "r.json"
        src.write_text(json.dumps(data))
        result = runner.invoke(main, ["profile", "build", str(src)])
        assert result.exit_code == EXIT_VALIDATION
        assert "lonely" in result.output


class TestFit:
    def test_exact_synthetic_power_law(self, runner, tmp_path):
        points = [{"n_params_b": n, "delta": 0.05 * n**-0.3} for n in (1, 10, 100)]
        src = tmp_path / "pts.json"
        src.write_text(json.dumps({"points": points}))
        result = runner.invoke(main, ["--output", "json", "fit", str(src)])
        assert result.exit_code == 0
        out = json.loads(result.output)
        assert out["a"] == pytest.approx(0.05, abs=1e-9)
        assert out["b"] == pytest.approx(-0.3, abs=1e-9)

    def test_table1_gaps(self, runner, fixtures_dir):
        result = runner.invoke(
            main, ["--output", "json", "fit", str(fixtures_dir / "table1_points.json")]
        )
        assert result.exit_code == 0
        out = json.loads(result.output)
        assert out["b"] < 0
        assert out["points_excluded"] == 2

    def test_one_point_insufficient(self, runner, tmp_path):
        src = tmp_path / "pts.json"
        src.write_text(json.dumps({"points": [{"n_params_b": 10, "delta": 0.01}]}))
        result = runner.invoke(main, ["fit", str(src)])
        assert result.exit_code == EXIT_INSUFFICIENT


class TestSimulateCommand:
    def test_mixed_workload_dominance(self, runner, fixtures_dir):
        result = runner.invoke(
            main,
            ["--output", "json", "simulate", str(fixtures_dir / "workload_mixed.jsonl"),
             "--profiles", str(fixtures_dir / "sim_profiles.json"), "--mode", "cost"],
        )
        assert result.exit_code == 0, result.output
        out = json.loads(result.output)
        assert out["adaptive"]["total_cost_usd"] < out["all_high"]["total_cost_usd"]
        assert out["adaptive"]["avg_score"] >= out["all_low"]["avg_score"]

    def test_json_output_roundtrips(self, runner, fixtures_dir):
        args = ["--output", "json", "simulate", str(fixtures_dir / "workload_mixed.jsonl"),
                "--profiles", str(fixtures_dir / "sim_profiles.json")]
        a = json.loads(runner.invoke(main, args).output)
        b = json.loads(runner.invoke(main, args).output)
        assert a == b


class TestDetectCommands:
    def test_detect_low_group_query(self, runner):
        result = runner.invoke(main, ["--output", "json", "detect", "summarize this paper"])
        assert result.exit_code == 0
        out = json.loads(result.output)
        assert out["category"] == "comprehension"
        assert out["stage"] == "rule"

    def test_bench_detectors_frozen_accuracy(self, runner, fixtures_dir):
        result = runner.invoke(
            main,
            ["--output", "json", "bench-detectors",
             str(fixtures_dir / "detector_corpus_100.jsonl")],
        )
        assert result.exit_code == 0
        out = json.loads(result.output)
        assert out["accuracy"] == pytest.approx(0.99)
        assert out["total"] == 100

    def test_empty_corpus_exit_code(self, runner, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        result = runner.invoke(main, ["bench-detectors", str(empty)])
        assert result.exit_code == EXIT_INSUFFICIENT


class TestServe:
    def test_invalid_config_names_field(self, runner, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"rules_path": "missing.json", "admin_token": "x"}))
        result = runner.invoke(main, ["serve", "--config", str(cfg)])
        assert result.exit_code == EXIT_VALIDATION
        assert "rules" in result.output or "profiles_path" in result.output

    def test_quiet_suppresses_output(self, runner, fixtures_dir):
        result = runner.invoke(
            main, ["--quiet", "fit", str(fixtures_dir / "table1_points.json")]
        )
        assert result.exit_code == 0
        assert result.output == ""
