from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional


@dataclass(frozen=True)
class TrialState:
    """What the population orchestrator knows about one trial.

    Only the orchestrator creates new states; trials never see them.
    """

    trial_id: str
    hyperparams: Dict[str, Any] = field(default_factory=dict)
    last_eval_score: Optional[float] = None
    """Mean evaluation episode reward"""
    success_rate: Optional[float] = None
    iterations_done: int = 0
    evaluations: int = 0
    checkpoint: Optional[str] = None
    """Directory of the trial's latest checkpoint"""
    exploited_from: Optional[str] = None
    """The trial copied from in the most recent exploit step"""

    @property
    def evaluated(self) -> bool:
        return self.last_eval_score is not None

    def after_evaluation(
        self, score: float, success_rate: float, iterations_done: int, checkpoint
    ) -> TrialState:
        return replace(
            self,
            last_eval_score=score,
            success_rate=success_rate,
            iterations_done=iterations_done,
            evaluations=self.evaluations + 1,
            checkpoint=None if checkpoint is None else str(checkpoint),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trial_id": self.trial_id,
            "hyperparams": dict(self.hyperparams),
            "last_eval_score": self.last_eval_score,
            "success_rate": self.success_rate,
            "iterations_done": self.iterations_done,
            "evaluations": self.evaluations,
            "checkpoint": self.checkpoint,
            "exploited_from": self.exploited_from,
        }
