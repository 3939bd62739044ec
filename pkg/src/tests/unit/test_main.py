"""Unit tests for the command-line entry point."""

import json
from pathlib import Path
from unittest.mock import AsyncMock, patch

import pandas as pd
import pytest

from ctbn_gibbs.main import build_parser, main


def _exit_code(argv) -> int:
    with pytest.raises(SystemExit) as info:
        main(argv)
    return info.value.code


def _write(path: Path, document) -> Path:
    path.write_text(json.dumps(document))
    return path


@pytest.fixture
def model_file(tmp_path, two_state_model):
    return _write(tmp_path / "model.json", two_state_model.to_document())


@pytest.fixture
def evidence_file(tmp_path):
    return _write(
        tmp_path / "evidence.json",
        {"horizon": 1.0, "components": {"0": {"points": [{"time": 0.0, "state": 0}, {"time": 1.0, "state": 1}]}}},
    )


class TestParser:
    """Test argument parsing."""

    def test_sample_defaults(self):
        args = build_parser().parse_args(["sample", "m.json", "e.json"])

        assert (args.chains, args.burnin, args.samples, args.thin) == (1, 100, 100, 1)
        assert args.order == "systematic"
        assert args.horizon is None

    def test_horizon_flag(self):
        args = build_parser().parse_args(["sample", "m.json", "e.json", "--T", "2.5"])

        assert args.horizon == 2.5

    def test_unknown_experiment(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["experiment", "nonsense", "--config", "c.json"])


class TestValidateCommand:
    """Test `ctbn validate`."""

    def test_valid_model(self, model_file, capsys):
        assert _exit_code(["validate", str(model_file)]) == 0
        assert "model is valid" in capsys.readouterr().out

    def test_invalid_model_lists_violations(self, tmp_path, capsys):
        path = _write(
            tmp_path / "bad.json",
            {"state_sizes": [2], "parents": [[0]], "cims": [[[-1.0, 1.0], [1.0, -1.0]]], "initial": [[0.5, 0.5]]},
        )

        assert _exit_code(["validate", str(path)]) == 2
        assert "violation" in capsys.readouterr().out

    def test_missing_file(self, tmp_path):
        assert _exit_code(["validate", str(tmp_path / "none.json")]) == 2


class TestSampleCommand:
    """Test `ctbn sample`."""

    def test_writes_trajectories_and_stats(self, tmp_path, model_file, evidence_file):
        out = tmp_path / "run"

        code = _exit_code([
            "--log-level", "WARNING", "sample", str(model_file), str(evidence_file),
            "--chains", "2", "--burnin", "1", "--samples", "3", "--seed", "4", "--out", str(out),
        ])

        assert code == 0
        trajectories = pd.read_csv(out / "trajectories.csv", comment="#")
        assert sorted(trajectories["sample"].unique()) == list(range(6))
        initial_rows = trajectories[trajectories["time"] == 0.0]
        assert (initial_rows["new_state"] == 0).all()
        stats = pd.read_csv(out / "stats.csv", comment="#")
        residence = stats[stats["state_b"].isna()]
        assert residence["value"].sum() == pytest.approx(1.0)
        assert "# seed: 4" in (out / "stats.csv").read_text()

    def test_zero_probability_evidence(self, tmp_path):
        model = _write(
            tmp_path / "absorbing.json",
            {"state_sizes": [2], "parents": [[]], "cims": [[[0.0, 0.0], [1.0, -1.0]]], "initial": [[1.0, 0.0]]},
        )
        evidence = _write(
            tmp_path / "impossible.json",
            {"horizon": 1.0, "components": {"0": {"points": [{"time": 0.0, "state": 0}, {"time": 1.0, "state": 1}]}}},
        )

        assert _exit_code(["sample", str(model), str(evidence), "--out", str(tmp_path / "x")]) == 3

    def test_evidence_for_unknown_component(self, tmp_path, model_file):
        evidence = _write(tmp_path / "e.json", {"horizon": 1.0, "components": {"3": {"points": [{"time": 0.0, "state": 0}]}}})

        assert _exit_code(["sample", str(model_file), str(evidence), "--out", str(tmp_path / "y")]) == 2

    @pytest.mark.parametrize("command", ["sample", "exact"])
    def test_observed_change_at_the_horizon(self, tmp_path, model_file, command):
        evidence = _write(
            tmp_path / "late.json",
            {
                "horizon": 1.0,
                "components": {
                    "0": {
                        "intervals": [{"start": 0.0, "end": 1.0, "state": 0}],
                        "points": [{"time": 1.0, "state": 1}],
                    }
                },
            },
        )

        with patch("ctbn_gibbs.main.run_jobs", new_callable=AsyncMock) as run_jobs:
            code = _exit_code([command, str(model_file), str(evidence), "--out", str(tmp_path / "z")])

        assert code == 3
        run_jobs.assert_not_called()


class TestExactCommand:
    """Test `ctbn exact`."""

    def test_writes_exact_stats(self, tmp_path, model_file, evidence_file):
        out = tmp_path / "exact"

        assert _exit_code(["exact", str(model_file), str(evidence_file), "--grid", "50", "--out", str(out)]) == 0

        stats = pd.read_csv(out / "exact_stats.csv", comment="#")
        assert stats[stats["state_b"].isna()]["value"].sum() == pytest.approx(1.0, abs=1e-6)

    def test_unexpected_failure_exits_with_one(self, tmp_path, model_file, evidence_file):
        with patch("ctbn_gibbs.main.exact_sufficient_stats", side_effect=RuntimeError("boom")):
            assert _exit_code(["exact", str(model_file), str(evidence_file), "--out", str(tmp_path)]) == 1

    def test_state_space_cap(self, tmp_path, model_file, evidence_file):
        assert _exit_code(["exact", str(model_file), str(evidence_file), "--cap", "1", "--out", str(tmp_path)]) == 1


class TestExperimentCommand:
    """Test `ctbn experiment`."""

    def test_overrides_reach_the_runner(self, tmp_path, capsys):
        config = _write(tmp_path / "study.json", {"chains": 2, "workers": 1})
        out = tmp_path / "results"

        with patch("ctbn_gibbs.main.ExperimentRunner") as runner_class:
            runner_class.return_value.run = AsyncMock(return_value=out / "timescale.csv")
            code = _exit_code([
                "experiment", "timescale", "--config", str(config), "--out", str(out), "--workers", "3",
            ])

        assert code == 0
        used = runner_class.call_args.args[0]
        assert used.output == out
        assert used.workers == 3
        assert used.chains == 2
        assert "timescale.csv" in capsys.readouterr().out

    def test_invalid_config(self, tmp_path):
        config = _write(tmp_path / "study.json", {"chains": 0})

        assert _exit_code(["experiment", "scaling", "--config", str(config)]) == 2
