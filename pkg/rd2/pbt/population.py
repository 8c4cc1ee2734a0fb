"""Population based training over concurrently running trials.

Trials train in isolation between synchronization points. At each point every
trial is evaluated and checkpointed, then ``pbt_step`` lets the worst trials
copy the checkpoints and hyperparameters of the best ones before perturbing
them.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from sortedcontainers import SortedKeyList

from rd2.core.exceptions import PopulationTooSmallError, TrialCrashedError
from rd2.core.propagating_thread import PropagatingThread
from rd2.interface.jsonl import JsonlWriter
from rd2.learning.evaluation import EvaluationMetrics
from rd2.learning.trial import Trial, train_round
from rd2.pbt.hyper_space import PERTURB_FACTORS, HyperSpace, Mutation
from rd2.pbt.trial_state import TrialState

logger = logging.getLogger(__name__)

METRICS_DIR = "metrics"
CHECKPOINTS_DIR = "checkpoints"
AUDIT_FILE = "audit.jsonl"


class ExploitEvent(NamedTuple):
    target: str
    source: str
    target_score: float
    source_score: float
    mutations: List[Mutation]

    def audit_records(self, round_index: int) -> List[dict]:
        base = {
            "round": round_index,
            "target": self.target,
            "source": self.source,
            "target_score": self.target_score,
            "source_score": self.source_score,
        }
        return [dict(base, **m.to_dict()) for m in self.mutations]


def pbt_step(
    population: Sequence[TrialState],
    rng: np.random.Generator,
    space: HyperSpace,
    quantile: float = 0.25,
    resample_probability: float = 0.25,
    factors: Tuple[float, float] = PERTURB_FACTORS,
) -> Tuple[List[TrialState], List[ExploitEvent]]:
    """Apply one truncation-selection exploit and explore step.

    Each trial in the bottom ``quantile`` picks a uniformly random trial of the
    top ``quantile`` and copies its checkpoint and explored hyperparameters, but
    only if the chosen trial scored strictly higher. Equal scores keep their own
    state.

    Returns:
        The new states, in input order, and one event per copy made.

    Raises:
        PopulationTooSmallError: With fewer than two trials.
        ValueError: If any trial has not been evaluated.
    """
    if len(population) < 2:
        raise PopulationTooSmallError(
            f"Population based training needs 2 or more trials, got {len(population)}"
        )
    for state in population:
        if not state.evaluated:
            raise ValueError(f"Trial '{state.trial_id}' has not been evaluated yet")
    ranked: SortedKeyList[TrialState] = SortedKeyList(
        population, key=lambda s: s.last_eval_score
    )
    count = max(1, int(round(quantile * len(population))))
    bottom = list(ranked[:count])
    top = list(ranked[-count:])
    new_states: Dict[str, TrialState] = {s.trial_id: s for s in population}
    events = []
    for target in bottom:
        source = top[int(rng.integers(len(top)))]
        if source.last_eval_score <= target.last_eval_score:
            continue
        hyperparams, mutations = space.explore(
            source.hyperparams, rng, resample_probability, factors
        )
        new_states[target.trial_id] = replace(
            target,
            hyperparams=hyperparams,
            checkpoint=source.checkpoint,
            exploited_from=source.trial_id,
        )
        events.append(
            ExploitEvent(
                target.trial_id,
                source.trial_id,
                target.last_eval_score,
                source.last_eval_score,
                mutations,
            )
        )
        logger.info(
            "Trial %s (%.3f) copies trial %s (%.3f)",
            target.trial_id,
            target.last_eval_score,
            source.trial_id,
            source.last_eval_score,
        )
    return [new_states[s.trial_id] for s in population], events


def on_sequence_length_change(trial: Trial, sequence_length: int):
    """Flush and resize a trial's replay buffer if its sequence length changed."""
    if sequence_length == trial.buffer.sequence_length:
        return
    trial.apply_hyperparams({"sequence_length": sequence_length})


def apply_exploit(trial: Trial, state: TrialState, source: Optional[Trial] = None):
    """Load the copied checkpoint and hyperparameters into a running trial.

    Without a checkpoint on disk the networks are copied from ``source`` directly.
    """
    if state.checkpoint is not None:
        trial.load_checkpoint(state.checkpoint, weights_only=True)
    elif source is not None:
        trial.learner.load_networks(source.learner.networks)
    trial.apply_hyperparams(state.hyperparams)


class PopulationResult(NamedTuple):
    best: TrialState
    states: List[TrialState]
    events: List[ExploitEvent]


def _initial_hyperparams(config, space: HyperSpace, rng, index: int) -> dict:
    base = {name: getattr(config.learner, name) for name in space.names}
    if index == 0:
        return base
    return space.sample(rng)


def build_trial(config, index: int, run_dir: Optional[Path]) -> Trial:
    """The trial a run with ``config`` starts at population slot ``index``."""
    trial_id = f"trial-{index}"
    metrics = None
    if run_dir is not None:
        metrics = JsonlWriter(Path(run_dir) / METRICS_DIR / f"{trial_id}.jsonl")
    return Trial(
        trial_id,
        config.task,
        config.physics,
        config.learner,
        config.actors,
        seed=config.seed + index,
        metrics=metrics,
        backlog_limit=config.backlog_limit,
    )


class _TrialRunner:
    """Runs one trial's training rounds, restarting it from checkpoints on crash."""

    def __init__(self, trial: Trial, config, checkpoint_dir: Optional[Path]):
        self.trial = trial
        self.config = config
        self.checkpoint_dir = checkpoint_dir
        self.restarts = 0
        self.last_checkpoint: Optional[Path] = None

    def run_round(self) -> EvaluationMetrics:
        population = self.config.population
        while True:
            try:
                result = train_round(
                    self.trial,
                    population.iterations_per_eval,
                    population.eval_episodes,
                    self.config.eval_seed,
                )
                break
            except Exception:
                self.restarts += 1
                logger.exception(
                    "Trial %s crashed (restart %d of %d)",
                    self.trial.trial_id,
                    self.restarts,
                    population.max_restarts,
                )
                if self.restarts > population.max_restarts:
                    raise TrialCrashedError(
                        self.trial.trial_id, population.max_restarts
                    )
                if self.last_checkpoint is not None:
                    self.trial.load_checkpoint(self.last_checkpoint)
        if self.checkpoint_dir is not None:
            self.last_checkpoint = self.trial.save_checkpoint(
                self.checkpoint_dir / self.trial.trial_id
            )
        return result


def run_population(
    config, run_dir: Optional[Path] = None, trials: Optional[List[Trial]] = None
) -> PopulationResult:
    """Train a population and return the best trial's final state.

    Args:
        config: An ``ExperimentConfig``.
        run_dir: Where metrics, checkpoints and the mutation audit go. Nothing is
            written when omitted.
        trials: Prebuilt trials; by default built with ``build_trial``.

    Raises:
        TrialCrashedError: If a trial keeps crashing after its restarts.
    """
    population = config.population
    space = config.hyper_space
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    run_dir = None if run_dir is None else Path(run_dir)
    if trials is None:
        trials = [build_trial(config, i, run_dir) for i in range(population.num_trials)]
    states = []
    for index, trial in enumerate(trials):
        hyperparams = _initial_hyperparams(config, space, rng, index)
        if index:
            apply_exploit(trial, TrialState(trial.trial_id, hyperparams))
        states.append(TrialState(trial.trial_id, trial.hyperparams))
    checkpoint_dir = None if run_dir is None else run_dir / CHECKPOINTS_DIR
    audit = None if run_dir is None else JsonlWriter(run_dir / AUDIT_FILE)
    runners = [_TrialRunner(t, config, checkpoint_dir) for t in trials]
    all_events: List[ExploitEvent] = []
    for round_index in range(population.rounds):
        if population.max_env_steps is not None and all(
            t.env_steps >= population.max_env_steps for t in trials
        ):
            break
        results = _run_round(runners, config.actors.deterministic)
        states = [
            state.after_evaluation(
                result.mean_reward,
                result.success_rate,
                trial.iteration,
                runner.last_checkpoint,
            )
            for state, result, trial, runner in zip(states, results, trials, runners)
        ]
        exploit_due = (round_index + 1) % population.evals_per_exploit == 0
        if population.exploit and len(trials) > 1 and exploit_due:
            states, events = pbt_step(
                states, rng, space, population.quantile, population.resample_probability
            )
            trial_ids = [t.trial_id for t in trials]
            for event in events:
                target = trial_ids.index(event.target)
                source = trials[trial_ids.index(event.source)]
                apply_exploit(trials[target], states[target], source)
                if audit is not None:
                    audit.write_all(event.audit_records(round_index))
            all_events.extend(events)
    best = max(
        states,
        key=lambda s: float("-inf") if s.last_eval_score is None else s.last_eval_score,
    )
    logger.info("Best trial %s scored %s", best.trial_id, best.last_eval_score)
    return PopulationResult(best, states, all_events)


def _run_round(
    runners: List[_TrialRunner], sequential: bool
) -> List[EvaluationMetrics]:
    if sequential:
        return [runner.run_round() for runner in runners]
    threads = [
        PropagatingThread(runner.run_round, name=runner.trial.trial_id)
        for runner in runners
    ]
    for thread in threads:
        thread.start()
    return [thread.join() for thread in threads]
