"""The quasi-static assembly environment.

The piece is driven kinematically by the commanded twist; the policy only ever sees
the (optionally noisy) wrench measured by the sensor. ``reset`` and ``step`` are pure
functions of their inputs apart from the state's random generator. ``AssemblyEnv``
wraps them for callers that prefer an object holding its own state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from rd2.assembly.contact import contact_wrench, max_penetration
from rd2.assembly.noise import RunningRms, inject_noise, perturb_friction
from rd2.assembly.physics_params import PhysicsParams
from rd2.assembly.task_kind import ActionFrame, DoneReason
from rd2.assembly.task_spec import TaskSpec
from rd2.core.exceptions import DeepPenetrationError, EpisodeDoneError
from rd2.core.geom import pose_compose, pose_distance, pose_inverse
from rd2.core.math_helpers import exp_rotation, gram_schmidt, orthonormality_residual
from rd2.core.pose import ORTHONORMAL_TOLERANCE, Pose
from rd2.core.twist import Twist, TwistDef
from rd2.core.wrench import Wrench

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EnvState:
    """One moment of an episode.

    ``rng`` is shared with the states that follow from this one, so a state should
    only be stepped once.
    """

    piece_pose: Pose
    step_count: int
    rng: np.random.Generator
    friction_coeff: float
    """This episode's (possibly perturbed) friction coefficient"""
    rms: RunningRms = field(default_factory=RunningRms)
    done: bool = False


class StepResult(NamedTuple):
    observation: Wrench
    reward: float
    done: bool
    done_reason: Optional[DoneReason]
    info_distance: float
    """The pose distance to the goal. Diagnostic only; never given to a policy."""
    action_clamped: bool = False
    motion_scale: float = 1.0
    """The fraction of the commanded motion executed before hitting the
    penetration limit"""


def _integrate(pose: Pose, twist: Twist, dt: float) -> Pose:
    rotation = exp_rotation(twist.angular * dt) @ pose.rotation
    if orthonormality_residual(rotation) > ORTHONORMAL_TOLERANCE:
        rotation = gram_schmidt(rotation)
    return Pose(rotation, pose.translation + twist.linear * dt)


def _penetration(world_pose: Pose, task: TaskSpec) -> float:
    local = pose_compose(pose_inverse(task.socket_pose), world_pose)
    return max_penetration(local, task.geometry)


def _limited_motion(
    pose: Pose, twist: Twist, task: TaskSpec, params: PhysicsParams
) -> Tuple[Pose, float]:
    """Integrate ``twist``, scaled back by bisection if it would penetrate too far.

    The allowed penetration is ``params.max_penetration``, or the current
    penetration if that is already deeper, so a piece is never forced to jump out.
    """
    target = _integrate(pose, twist, params.dt)
    allowed = max(params.max_penetration, _penetration(pose, task))
    if _penetration(target, task) <= allowed:
        return target, 1.0
    # Largest displacement of any sample point per unit of scale
    reach = params.dt * (
        float(np.linalg.norm(twist.linear))
        + float(np.linalg.norm(twist.angular)) * task.geometry.piece_half_length * 2
    )
    low, high = 0.0, 1.0
    low_pose = pose
    while (high - low) * reach > params.penetration_tolerance:
        middle = (low + high) / 2
        candidate = _integrate(pose, twist * middle, params.dt)
        if _penetration(candidate, task) <= allowed:
            low, low_pose = middle, candidate
        else:
            high = middle
    return low_pose, low


def _world_twist(action: Twist, task: TaskSpec) -> Twist:
    if task.action_frame == ActionFrame.SOCKET:
        rotation = task.socket_pose.rotation
        return Twist(rotation @ action.linear, rotation @ action.angular)
    return action


def _observe(
    pose: Pose,
    task: TaskSpec,
    params: PhysicsParams,
    state_rms: RunningRms,
    friction_coeff: float,
    rng: np.random.Generator,
    velocity: Optional[Twist] = None,
) -> Tuple[Wrench, RunningRms]:
    clean = contact_wrench(pose, task, params, velocity, friction_coeff)
    rms = state_rms.updated(clean)
    noisy = inject_noise(clean, params.ft_noise_frac, rng, rms.reference_scale())
    return noisy, rms


def reset(
    task: TaskSpec, params: PhysicsParams, seed: Optional[int] = None
) -> Tuple[EnvState, Wrench]:
    """Start an episode at an offset drawn from ``task.initial_offset``.

    Raises:
        DeepPenetrationError: If the start pose penetrates deeper than
            ``params.deep_penetration_limit``.
    """
    rng = np.random.default_rng(seed)
    pose = task.start_pose(task.initial_offset.sample(rng))
    penetration = _penetration(pose, task)
    if penetration > params.deep_penetration_limit:
        raise DeepPenetrationError(penetration, params.deep_penetration_limit)
    friction = perturb_friction(params.friction_coeff, params.friction_noise_frac, rng)
    observation, rms = _observe(pose, task, params, RunningRms(), friction, rng)
    return EnvState(pose, 0, rng, friction, rms), observation


def reward_for_distance(distance: float, task: TaskSpec) -> float:
    """``-d``, plus the success bonus inside the success ball.

    >>> task = TaskSpec.lap_joint()
    >>> round(reward_for_distance(0.0004, task), 10)
    99.9996
    """
    if distance <= task.success_epsilon:
        return -distance + task.success_bonus
    return -distance


def step(
    state: EnvState, action: TwistDef, task: TaskSpec, params: PhysicsParams
) -> Tuple[EnvState, StepResult]:
    """Advance one control period.

    Action components beyond the actuation limits are clamped, which is reported in
    ``StepResult.action_clamped``.

    Raises:
        EpisodeDoneError: If ``state`` already ended its episode.
        NonFiniteValueError: If the action contains NaN or infinity.
    """
    if state.done:
        raise EpisodeDoneError("Cannot step an environment state which is done")
    twist, clamped = Twist.from_def(action).clamped(params.limits)
    if clamped:
        logger.debug("Clamped action %s", twist)
    twist = _world_twist(twist, task)
    pose, scale = _limited_motion(state.piece_pose, twist, task, params)
    observation, rms = _observe(
        pose, task, params, state.rms, state.friction_coeff, state.rng, twist * scale
    )
    distance = pose_distance(pose, task.world_goal, task.lambda_rot)
    step_count = state.step_count + 1
    reason = None
    if distance <= task.success_epsilon:
        reason = DoneReason.SUCCESS
    elif step_count >= task.max_steps:
        reason = DoneReason.TIMEOUT
    new_state = replace(
        state,
        piece_pose=pose,
        step_count=step_count,
        rms=rms,
        done=reason is not None,
    )
    result = StepResult(
        observation,
        reward_for_distance(distance, task),
        reason is not None,
        reason,
        distance,
        clamped,
        scale,
    )
    return new_state, result


class TraceRecord(NamedTuple):
    """One environment transition as exported to episode traces."""

    t: int
    obs: Wrench
    action: Twist
    reward: float
    done: bool


class AssemblyEnv:
    """A stateful environment owning one episode at a time.

    Not safe for concurrent use; give every actor its own instance.
    """

    def __init__(
        self,
        task: TaskSpec,
        params: PhysicsParams,
        recorder: Optional[Callable[[TraceRecord], None]] = None,
    ):
        """
        Args:
            task: The task to run.
            params: Physics constants.
            recorder: Called with a ``TraceRecord`` after every step.
        """
        self.task = task
        self.params = params
        self.recorder = recorder
        self._state: Optional[EnvState] = None

    @property
    def state(self) -> EnvState:
        if self._state is None:
            raise RuntimeError("Environment has not been reset")
        return self._state

    @property
    def observation_size(self) -> int:
        return 6

    @property
    def action_size(self) -> int:
        return 6

    def reset(self, seed: Optional[int] = None) -> Wrench:
        self._state, observation = reset(self.task, self.params, seed)
        return observation

    def step(self, action: TwistDef) -> StepResult:
        self._state, result = step(self.state, action, self.task, self.params)
        if self.recorder:
            self.recorder(
                TraceRecord(
                    self._state.step_count,
                    result.observation,
                    Twist.from_def(action),
                    result.reward,
                    result.done,
                )
            )
        return result
