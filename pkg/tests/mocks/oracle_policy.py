import numpy as np
from scipy.spatial.transform import Rotation

from rd2.assembly.physics_params import PhysicsParams
from rd2.core.wrench import Wrench


class OraclePolicy:
    """Drives the piece straight at the goal using the environment's hidden state.

    Works with ``AssemblyEnv`` and ``MountedSensorEnv``; the observation is ignored.
    """

    def __init__(self, env, params: PhysicsParams = PhysicsParams()):
        self.env = env
        self.dt = params.dt
        self.limits = params.limits.as_array()

    def reset(self):
        pass

    def act(self, observation: Wrench) -> np.ndarray:
        pose = self.env.state.piece_pose
        goal = self.env.task.world_goal
        linear = goal.translation - pose.translation
        angular = Rotation.from_matrix(goal.rotation @ pose.rotation.T).as_rotvec()
        action = np.concatenate((linear, angular)) / self.dt
        return np.clip(action, -self.limits, self.limits)
