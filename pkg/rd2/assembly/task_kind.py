"""Enums describing assembly tasks"""

from enum import Enum, auto


class TaskKind(Enum):
    """The two robotless assembly tasks."""

    LAP_JOINT = auto()
    """A rectangular member inserted into an open slot"""

    PEG_IN_HOLE = auto()
    """A cylindrical peg inserted into a zero-clearance chamfered hole"""

    @classmethod
    def from_name(cls, name: str) -> "TaskKind":
        """Look up a kind by a case- and separator-insensitive name.

        >>> TaskKind.from_name("peg-in-hole")
        <TaskKind.PEG_IN_HOLE: 2>
        """
        key = name.strip().upper().replace("-", "_").replace(" ", "_")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"Unknown task kind '{name}'") from None

    @property
    def config_name(self) -> str:
        return self.name.lower().replace("_", "-")


class ActionFrame(Enum):
    """The frame commanded twists are expressed in."""

    WORLD = auto()
    SOCKET = auto()


class DoneReason(Enum):
    """Why an episode ended."""

    SUCCESS = auto()
    TIMEOUT = auto()
