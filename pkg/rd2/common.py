from rd2.assembly.environment import AssemblyEnv, StepResult, TraceRecord
from rd2.assembly.mounts import MOUNT_PRESETS, MountedSensorEnv, mount_correction
from rd2.assembly.offset_distribution import OffsetDistribution, difficulty_level
from rd2.assembly.physics_params import PhysicsParams
from rd2.assembly.task_kind import ActionFrame, DoneReason, TaskKind
from rd2.assembly.task_spec import TaskSpec
from rd2.core.geom import (
    pose_compose,
    pose_distance,
    pose_inverse,
    wrench_transform,
)
from rd2.core.pose import IDENTITY, Pose
from rd2.core.twist import DEFAULT_LIMITS, ActuationLimits, Twist
from rd2.core.units import ZERO, Degree, Meter, Mm, Radian, Um
from rd2.core.wrench import ZERO_WRENCH, Wrench
from rd2.interface.checkpoint import load_params, save_params
from rd2.interface.config_file import ExperimentConfig, load_config, parse_config
from rd2.learning.evaluation import NetworkPolicy, evaluate_policy, transfer_rollout
from rd2.learning.learner import LearnerConfig
from rd2.learning.network_params import NetworkParams
from rd2.learning.network_spec import CellType, NetworkRole, NetworkSpec
from rd2.learning.trial import Trial, train_trial
from rd2.pbt.hyper_space import HyperSpace
from rd2.pbt.population import pbt_step, run_population
