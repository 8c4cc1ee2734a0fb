import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from rd2.interface.curves import (
    METRICS_DIR,
    aggregate_runs,
    best_of_population,
    confidence_bounds,
    export_curves,
    load_run_metrics,
)
from rd2.interface.jsonl import JsonlWriter


def write_run(run_dir: Path, rewards):
    """``rewards`` maps trial ids to one reward per iteration."""
    for trial_id, values in rewards.items():
        writer = JsonlWriter(run_dir / METRICS_DIR / f"{trial_id}.jsonl")
        for i, reward in enumerate(values):
            writer.write(
                {
                    "kind": "iteration",
                    "trial_id": trial_id,
                    "iteration": i + 1,
                    "env_steps": 10 * (i + 1),
                    "mean_episode_reward": reward,
                }
            )
            writer.write({"kind": "evaluation", "mean_reward": 1000.0})


class TestConfidenceBounds(unittest.TestCase):
    def test_known_values(self):
        mean, low, high = confidence_bounds(np.array([1.0, 2.0, 3.0]))
        assert mean == 2.0
        # t(0.975, 2) = 4.302653, std 1, sqrt(3)
        assert high - mean == pytest.approx(4.302653 / np.sqrt(3), rel=1e-5)
        assert mean - low == pytest.approx(high - mean)

    def test_identical_values(self):
        assert confidence_bounds(np.array([4.0, 4.0])) == (4.0, 4.0, 4.0)


class TestCurves(unittest.TestCase):
    def test_load_skips_evaluation_records(self):
        with tempfile.TemporaryDirectory() as directory:
            write_run(Path(directory), {"trial-1": [0, 1], "trial-0": [5, -5]})
            metrics = load_run_metrics(directory)
        assert len(metrics) == 4
        assert list(metrics["trial_id"]) == ["trial-0", "trial-0", "trial-1", "trial-1"]
        assert metrics["mean_episode_reward"].max() == 5

    def test_missing_metrics(self):
        with tempfile.TemporaryDirectory() as directory:
            with pytest.raises(FileNotFoundError):
                load_run_metrics(directory)

    def test_best_of_population(self):
        metrics = pd.DataFrame(
            {
                "trial_id": ["a", "b", "a", "b"],
                "iteration": [1, 1, 2, 2],
                "env_steps": [10, 20, 30, 40],
                "mean_episode_reward": [-3.0, -1.0, 2.0, 0.0],
            }
        )
        best = best_of_population(metrics)
        assert list(best["mean_episode_reward"]) == [-1.0, 2.0]
        assert list(best["env_steps"]) == [15.0, 35.0]

    def test_aggregate_truncates_to_shortest(self):
        first = pd.DataFrame(
            {"iteration": [1, 2, 3], "env_steps": [1, 2, 3], "mean_episode_reward": 1.0}
        )
        second = pd.DataFrame(
            {"iteration": [1, 2], "env_steps": [3, 4], "mean_episode_reward": 3.0}
        )
        aggregate = aggregate_runs([first, second])
        assert list(aggregate["iteration"]) == [1, 2]
        assert list(aggregate["mean"]) == [2.0, 2.0]
        assert list(aggregate["env_steps"]) == [2.0, 3.0]
        assert (aggregate["ci_low"] < 2.0).all()

    def test_export(self):
        with tempfile.TemporaryDirectory() as directory:
            root = Path(directory)
            write_run(root / "run0", {"trial-0": [1, 2, 3]})
            write_run(root / "run1", {"trial-0": [3, 2], "trial-1": [0, 4]})
            written = export_curves([root / "run0", root / "run1"], root / "out")
            assert sorted(written) == [
                "aggregate",
                "best_0",
                "best_1",
                "trials_0",
                "trials_1",
            ]
            aggregate = pd.read_csv(written["aggregate"])
            trials = pd.read_csv(written["trials_1"])
        assert list(aggregate["mean"]) == [2.0, 3.0]
        assert list(aggregate["runs"]) == [2, 2]
        assert len(trials) == 4

    def test_export_needs_runs(self):
        with tempfile.TemporaryDirectory() as directory:
            with pytest.raises(ValueError):
                export_curves([], directory)
