"""Application-wide environment variables.

Some global behavior can be switched by environment variable toggles. For example
running any rd2 command with the environment variable ``RD2_DEBUG`` set to some
truthy value will enable debug logging.
"""

import os
import pathlib
from typing import Optional


def _resolve_bool_env_variable(var):
    value = os.environ.get(var)
    return not (value is None or value == "0" or value.lower() == "false")


DEBUG = _resolve_bool_env_variable("RD2_DEBUG")
"""Whether debug logging is enabled.

Set by the environment variable ``RD2_DEBUG``.
"""


def run_slow_tests() -> bool:
    """Whether the long learning acceptance runs should execute.

    Set by the environment variable ``RD2_RUN_SLOW``.
    """
    return _resolve_bool_env_variable("RD2_RUN_SLOW")


def run_dir_override() -> Optional[pathlib.Path]:
    """The output root given by ``RD2_RUN_DIR``, if set.

    This is read on every call so that commands started from the same process pick
    up changes.
    """
    value = os.environ.get("RD2_RUN_DIR")
    if not value:
        return None
    return pathlib.Path(value)
