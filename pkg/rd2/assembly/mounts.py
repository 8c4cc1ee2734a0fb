"""Sensor mounting frames and robot-agnostic transfer.

A policy is trained against a sensor at ``PhysicsParams.sensor_pose``. A robot may
carry its sensor anywhere else on the piece; ``MountedSensorEnv`` simulates that robot
and, when asked to, re-expresses its readings in the training frame with
``wrench_transform`` so the unchanged policy sees what it was trained on. Actions are
twists at the piece center and are never transformed.
"""

import math
from dataclasses import replace
from typing import Dict, Optional, Union

from rd2.assembly.environment import AssemblyEnv, StepResult
from rd2.assembly.physics_params import PhysicsParams
from rd2.assembly.task_spec import TaskSpec
from rd2.core.geom import pose_compose, pose_inverse, wrench_transform
from rd2.core.pose import Pose
from rd2.core.twist import TwistDef
from rd2.core.wrench import Wrench

MOUNT_PRESETS: Dict[str, Pose] = {
    "panda": Pose.from_rotation_vector((0.0, 0.0, -math.pi / 4), (0.0, 0.0, 0.1034)),
    "ur10": Pose.from_rotation_vector((math.pi, 0.0, 0.0), (0.0, 0.0, 0.0922)),
    "kr60": Pose.from_rotation_vector(
        (0.0, 0.0, math.pi / 2), (0.02, -0.01, 0.15)
    ),
}
"""Sensor poses in the piece frame standing in for three differently built arms."""


def resolve_mount(mount: Union[str, Pose]) -> Pose:
    """Look up a preset mount by name, or pass a pose through.

    >>> resolve_mount("ur10").translation.tolist()
    [0.0, 0.0, 0.0922]
    """
    if isinstance(mount, Pose):
        return mount
    try:
        return MOUNT_PRESETS[mount.lower()]
    except KeyError:
        raise ValueError(
            f"Unknown mount '{mount}', expected one of {sorted(MOUNT_PRESETS)}"
        ) from None


def mount_correction(training_sensor: Pose, mount: Pose) -> Pose:
    """The pose of a mounted sensor frame in the training sensor frame."""
    return pose_compose(pose_inverse(training_sensor), mount)


class MountedSensorEnv:
    """An ``AssemblyEnv`` whose sensor is carried at a different mounting frame.

    With ``correct`` set, observations are mapped back into the training sensor
    frame; without it the policy sees the raw mounted readings.
    """

    def __init__(
        self,
        task: TaskSpec,
        training_params: PhysicsParams,
        mount: Union[str, Pose],
        correct: bool = True,
        recorder=None,
    ):
        self.mount = resolve_mount(mount)
        self.correct = correct
        self.correction = mount_correction(training_params.sensor_pose, self.mount)
        self.inner = AssemblyEnv(
            task, replace(training_params, sensor_pose=self.mount), recorder
        )

    @property
    def task(self) -> TaskSpec:
        return self.inner.task

    @property
    def state(self):
        return self.inner.state

    def _convert(self, observation: Wrench) -> Wrench:
        if not self.correct:
            return observation
        return wrench_transform(self.correction, observation)

    def reset(self, seed: Optional[int] = None) -> Wrench:
        return self._convert(self.inner.reset(seed))

    def step(self, action: TwistDef) -> StepResult:
        result = self.inner.step(action)
        return result._replace(observation=self._convert(result.observation))
