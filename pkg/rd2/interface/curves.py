"""Export training curves from run directories to CSV.

Plots are left to external tools; this only reshapes the per-trial metric
streams written during training.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import stats

from rd2.interface.jsonl import read_records

logger = logging.getLogger(__name__)

METRICS_DIR = "metrics"
REWARD_COLUMN = "mean_episode_reward"
CONFIDENCE = 0.95

PathLike = Union[str, Path]


def load_run_metrics(run_dir: PathLike) -> pd.DataFrame:
    """All training-iteration records of a run, one row per trial iteration.

    Raises:
        FileNotFoundError: If the run has no metric files.
    """
    paths = sorted((Path(run_dir) / METRICS_DIR).glob("*.jsonl"))
    records = [
        record
        for path in paths
        for record in read_records(path)
        if record.get("kind", "iteration") == "iteration"
    ]
    if not records:
        raise FileNotFoundError(f"No training metrics found under {run_dir}")
    frame = pd.DataFrame.from_records(records)
    return frame.sort_values(["trial_id", "iteration"]).reset_index(drop=True)


def trial_curves(metrics: pd.DataFrame) -> pd.DataFrame:
    return metrics[["trial_id", "iteration", "env_steps", REWARD_COLUMN]].copy()


def best_of_population(metrics: pd.DataFrame) -> pd.DataFrame:
    """The best trial reward at every iteration."""
    grouped = metrics.groupby("iteration")
    curve = pd.DataFrame(
        {
            "env_steps": grouped["env_steps"].mean(),
            REWARD_COLUMN: grouped[REWARD_COLUMN].max(),
        }
    )
    return curve.reset_index()


def confidence_bounds(values: np.ndarray, confidence: float = CONFIDENCE):
    """Student-t bounds on the mean. A single value bounds itself.

    >>> confidence_bounds(np.array([2.0]))
    (2.0, 2.0, 2.0)
    """
    mean = float(np.mean(values))
    if len(values) < 2:
        return mean, mean, mean
    half_width = float(
        stats.t.ppf(0.5 + confidence / 2, len(values) - 1)
        * np.std(values, ddof=1)
        / np.sqrt(len(values))
    )
    return mean, mean - half_width, mean + half_width


def aggregate_runs(best_curves: Sequence[pd.DataFrame]) -> pd.DataFrame:
    """Mean and confidence bounds of best-of-population curves across seeds.

    Curves are aligned by iteration and truncated to the shortest run.
    """
    length = min(len(curve) for curve in best_curves)
    rows = []
    for i in range(length):
        rewards = np.array([curve[REWARD_COLUMN].iloc[i] for curve in best_curves])
        mean, low, high = confidence_bounds(rewards)
        rows.append(
            {
                "iteration": int(best_curves[0]["iteration"].iloc[i]),
                "env_steps": float(
                    np.mean([curve["env_steps"].iloc[i] for curve in best_curves])
                ),
                "mean": mean,
                "ci_low": low,
                "ci_high": high,
                "runs": len(best_curves),
            }
        )
    return pd.DataFrame(rows)


def export_curves(
    run_dirs: Sequence[PathLike],
    out_dir: PathLike,
    float_format: Optional[str] = None,
) -> Dict[str, Path]:
    """Write per-trial, best-of-population, and across-run CSV files.

    ``float_format`` is passed to ``DataFrame.to_csv`` for every file.

    Returns:
        The written paths by name.
    """
    if not run_dirs:
        raise ValueError("No run directories given")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: Dict[str, Path] = {}
    best_curves: List[pd.DataFrame] = []
    for index, run_dir in enumerate(run_dirs):
        metrics = load_run_metrics(run_dir)
        suffix = f"_{index}" if len(run_dirs) > 1 else ""
        trials = out_dir / f"trials{suffix}.csv"
        trial_curves(metrics).to_csv(trials, index=False, float_format=float_format)
        best = best_of_population(metrics)
        best_path = out_dir / f"best{suffix}.csv"
        best.to_csv(best_path, index=False, float_format=float_format)
        written[trials.stem] = trials
        written[best_path.stem] = best_path
        best_curves.append(best)
    aggregate = out_dir / "aggregate.csv"
    aggregate_runs(best_curves).to_csv(
        aggregate, index=False, float_format=float_format
    )
    written["aggregate"] = aggregate
    logger.info("Exported curves for %d runs to %s", len(run_dirs), out_dir)
    return written
