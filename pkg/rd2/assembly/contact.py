"""Penalty contact between the moving piece and its socket.

Every piece sample point inside the socket solid pushes back along the socket normal
with ``k * penetration + c * penetration_rate`` and drags against its sliding
direction with a regularized Coulomb force. Forces are summed into a wrench about
the piece center and then re-expressed in the sensor frame.

Contact forces are only measured: the simulation is quasi-static, so they never move
the piece.
"""

from typing import NamedTuple, Optional

import numpy as np

from rd2.assembly.physics_params import PhysicsParams
from rd2.assembly.socket_geometry import SocketGeometry
from rd2.assembly.task_spec import TaskSpec
from rd2.core.geom import pose_compose, pose_inverse, wrench_transform
from rd2.core.pose import Pose
from rd2.core.twist import Twist
from rd2.core.wrench import ZERO_WRENCH, Wrench


class ContactSet(NamedTuple):
    """The contacting sample points of one piece pose, in socket coordinates."""

    points: np.ndarray
    """``(N, 3)`` contact positions"""

    forces: np.ndarray
    """``(N, 3)`` forces the socket applies to the piece at each point"""

    penetrations: np.ndarray
    """``(N,)`` positive penetration depths"""

    @property
    def empty(self) -> bool:
        return self.points.shape[0] == 0

    def total_force(self) -> np.ndarray:
        return self.forces.sum(axis=0)

    def torque_about(self, center: np.ndarray) -> np.ndarray:
        return np.cross(self.points - center, self.forces).sum(axis=0)


def penalty_force(
    penetration: float, penetration_rate: float, params: PhysicsParams
) -> float:
    """The normal force magnitude at one contact point.

    Zero when there is no penetration. Adhesion is never produced, so damping can
    only reduce a separating contact's force to zero.

    >>> penalty_force(0.001, 0.0, PhysicsParams(contact_stiffness=2000.0))
    2.0
    """
    if penetration <= 0:
        return 0.0
    return max(
        0.0,
        params.contact_stiffness * penetration
        + params.contact_damping * penetration_rate,
    )


def penetration_depths(local_pose: Pose, geometry: SocketGeometry) -> np.ndarray:
    """Penetration of every piece sample point for a socket-frame piece pose."""
    points = geometry.piece_samples @ local_pose.rotation.T + local_pose.translation
    distance, _ = geometry.signed_distance(points)
    return -distance


def max_penetration(local_pose: Pose, geometry: SocketGeometry) -> float:
    """The deepest penetration of any piece sample point, 0 when contact-free."""
    return max(0.0, float(np.max(penetration_depths(local_pose, geometry))))


def resolve_contacts(
    local_pose: Pose,
    geometry: SocketGeometry,
    params: PhysicsParams,
    friction_coeff: Optional[float] = None,
    velocity: Optional[Twist] = None,
) -> ContactSet:
    """Compute per-point contact forces for a piece pose in socket coordinates.

    Args:
        local_pose: The piece pose in the socket frame.
        geometry: The socket and piece shapes.
        params: Contact constants.
        friction_coeff: Overrides ``params.friction_coeff``, e.g. with an
            episode's perturbed value.
        velocity: The piece twist at its center, in socket coordinates.
            ``None`` means at rest.
    """
    if friction_coeff is None:
        friction_coeff = params.friction_coeff
    points = geometry.piece_samples @ local_pose.rotation.T + local_pose.translation
    distance, normals = geometry.signed_distance(points)
    touching = distance < 0
    points = points[touching]
    normals = normals[touching]
    penetrations = -distance[touching]
    if velocity is None:
        point_velocities = np.zeros_like(points)
    else:
        point_velocities = velocity.linear + np.cross(
            velocity.angular, points - local_pose.translation
        )
    normal_speed = np.einsum("ij,ij->i", point_velocities, normals)
    normal_force = np.maximum(
        0.0,
        params.contact_stiffness * penetrations
        - params.contact_damping * normal_speed,
    )
    sliding = point_velocities - normal_speed[:, None] * normals
    sliding_speed = np.linalg.norm(sliding, axis=1)
    moving = sliding_speed > 0
    sliding_direction = np.zeros_like(sliding)
    sliding_direction[moving] = sliding[moving] / sliding_speed[moving, None]
    friction = (
        -friction_coeff
        * normal_force
        * np.tanh(sliding_speed / params.friction_smoothing)
    )
    forces = normal_force[:, None] * normals + friction[:, None] * sliding_direction
    return ContactSet(points, forces, penetrations)


def contact_wrench(
    piece_pose: Pose,
    task: TaskSpec,
    params: PhysicsParams,
    velocity: Optional[Twist] = None,
    friction_coeff: Optional[float] = None,
) -> Wrench:
    """The clean contact wrench measured by the sensor at a world piece pose.

    Gravity is compensated: the piece's weight never appears in the result.

    Args:
        piece_pose: The world pose of the piece center.
        task: The task, giving the socket geometry and placement.
        params: Contact constants and the sensor pose.
        velocity: The piece twist in world coordinates, ``None`` for at rest.
        friction_coeff: Overrides ``params.friction_coeff``.
    """
    socket_rotation_t = task.socket_pose.rotation.T
    local_pose = pose_compose(pose_inverse(task.socket_pose), piece_pose)
    local_velocity = None
    if velocity is not None:
        local_velocity = Twist(
            socket_rotation_t @ velocity.linear, socket_rotation_t @ velocity.angular
        )
    contacts = resolve_contacts(
        local_pose, task.geometry, params, friction_coeff, local_velocity
    )
    if contacts.empty:
        return ZERO_WRENCH
    to_piece = local_pose.rotation.T
    at_center = Wrench(
        to_piece @ contacts.total_force(),
        to_piece @ contacts.torque_about(local_pose.translation),
    )
    return wrench_transform(pose_inverse(params.sensor_pose), at_center)
