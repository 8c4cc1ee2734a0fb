"""Signed-distance models of the two sockets and point samplings of their pieces.

Socket coordinates put the top surface of the socket at ``z = 0`` with ``z`` pointing
up, out of the socket. The opening is centered on the ``z`` axis. A lap-joint slot is
open along ``y`` and its walls face ``+-x``; a hole is rotationally symmetric about
``z``. Both openings carry a 45 degree entrance chamfer.

Pieces are described in their own frame: the origin is the piece center and the
insertion end (the tip) lies at ``z = -half_length``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from backports.cached_property import cached_property

from rd2.assembly.task_kind import TaskKind

LAP_JOINT_HALF_WIDTH = 0.015
LAP_JOINT_HALF_LENGTH = 0.06
PEG_RADIUS = 0.010
PEG_HALF_LENGTH = 0.03
CHAMFER = 0.002
SOCKET_DEPTH = 0.03
INSERTION_DEPTH = 0.02
"""How far the tip goes below the socket surface at the goal"""
START_HEIGHT = 0.005
"""Height of the tip above the socket surface at the nominal start"""
CONTACT_SKIN = 0.00005
"""Numerical clearance given to zero-clearance holes"""

SAMPLE_LEVELS = 10
SAMPLE_LEVEL_SPACING = 0.005
RING_POINTS = 16

_INV_SQRT2 = 1 / math.sqrt(2)

# (n_s, n_z) outward normals of the wall half planes: opening side, top, chamfer
_WALL_NORMALS = np.array([[-1.0, 0.0], [0.0, 1.0], [-_INV_SQRT2, _INV_SQRT2]])


@dataclass(frozen=True)
class SocketGeometry:
    """The socket profile and piece shape for one task."""

    kind: TaskKind

    opening_half_width: float
    """Half width of the slot, or radius of the hole, at the bottom of the chamfer"""

    chamfer: float

    depth: float

    piece_half_width: float
    """Half width of the rectangular member, or radius of the peg"""

    piece_half_length: float

    @classmethod
    def for_task(cls, kind: TaskKind, clearance: float) -> SocketGeometry:
        if kind == TaskKind.LAP_JOINT:
            return cls(
                kind,
                LAP_JOINT_HALF_WIDTH + clearance / 2,
                CHAMFER,
                SOCKET_DEPTH,
                LAP_JOINT_HALF_WIDTH,
                LAP_JOINT_HALF_LENGTH,
            )
        return cls(
            kind,
            PEG_RADIUS + clearance / 2 + CONTACT_SKIN,
            CHAMFER,
            SOCKET_DEPTH,
            PEG_RADIUS,
            PEG_HALF_LENGTH,
        )

    def _radial(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Distance from the opening axis, and the unit direction away from it."""
        directions = np.zeros_like(points)
        if self.kind == TaskKind.LAP_JOINT:
            radial = np.abs(points[:, 0])
            directions[:, 0] = np.where(points[:, 0] < 0, -1.0, 1.0)
            return radial, directions
        radial = np.hypot(points[:, 0], points[:, 1])
        on_axis = radial == 0
        safe = np.where(on_axis, 1.0, radial)
        directions[:, 0] = np.where(on_axis, 1.0, points[:, 0] / safe)
        directions[:, 1] = np.where(on_axis, 0.0, points[:, 1] / safe)
        return radial, directions

    def signed_distance(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Signed distance of socket-frame points to the socket solid.

        Negative values are inside the solid. Inside the solid the value is exact;
        outside it is a lower bound, which is all the contact model needs.

        Args:
            points: An ``(N, 3)`` array of socket-frame points.

        Returns:
            The ``(N,)`` signed distances and ``(N, 3)`` unit normals pointing out of
            the solid.

            >>> g = SocketGeometry.for_task(TaskKind.LAP_JOINT, 0.002)
            >>> d, n = g.signed_distance(np.array([[0.05, 0.0, -0.001]]))
            >>> round(float(d[0]), 9), n[0].tolist()
            (-0.001, [0.0, 0.0, 1.0])
        """
        points = np.atleast_2d(points)
        radial, directions = self._radial(points)
        z = points[:, 2]
        half_planes = np.stack(
            (
                self.opening_half_width - radial,
                z,
                (self.opening_half_width + self.chamfer - radial + z) * _INV_SQRT2,
            )
        )
        face = np.argmax(half_planes, axis=0)
        wall = half_planes[face, np.arange(points.shape[0])]
        floor = z + self.depth
        use_floor = floor < wall
        distance = np.where(use_floor, floor, wall)
        planar = np.where(use_floor[:, None], [0.0, 1.0], _WALL_NORMALS[face])
        normals = planar[:, :1] * directions
        normals[:, 2] += planar[:, 1]
        return distance, normals

    @cached_property
    def piece_samples(self) -> np.ndarray:
        """Piece-frame points at which contact with the socket is checked.

        Points cover the side faces on ``SAMPLE_LEVELS`` levels starting at the tip,
        plus a patch of the tip face itself.
        """
        a = self.piece_half_width
        tip = -self.piece_half_length
        if self.kind == TaskKind.LAP_JOINT:
            edge = np.linspace(-a, a, 5)
            inner = np.array([-a / 2, 0.0, a / 2])
            outline = [(x, y) for x in (-a, a) for y in edge]
            outline += [(x, y) for y in (-a, a) for x in inner]
            face = [(x, y) for x in inner for y in inner]
        else:
            angles = 2 * np.pi * np.arange(RING_POINTS) / RING_POINTS
            outline = list(zip(a * np.cos(angles), a * np.sin(angles)))
            inner_angles = angles[::2]
            face = [(0.0, 0.0)] + list(
                zip(a / 2 * np.cos(inner_angles), a / 2 * np.sin(inner_angles))
            )
        samples = [
            (x, y, tip + level * SAMPLE_LEVEL_SPACING)
            for level in range(SAMPLE_LEVELS)
            for x, y in outline
        ]
        samples += [(x, y, tip) for x, y in face]
        result = np.array(samples, dtype=np.float64)
        result.flags.writeable = False
        return result
