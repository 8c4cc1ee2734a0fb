"""Logging setup for command-line entry points.

Library modules only ever call ``logging.getLogger(__name__)``; handlers are
installed here, once, by whichever program owns the process.
"""

import logging
from typing import Optional

from rd2.core import env

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DATE_FORMAT = "%H:%M:%S"


def configure(level: Optional[int] = None):
    """Install a stream handler on the ``rd2`` logger.

    Args:
        level: The log level. Defaults to ``DEBUG`` when ``RD2_DEBUG`` is set,
            otherwise ``INFO``.
    """
    if level is None:
        level = logging.DEBUG if env.DEBUG else logging.INFO
    logger = logging.getLogger("rd2")
    if not any(getattr(h, "_rd2_handler", False) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
        handler._rd2_handler = True  # type: ignore
        logger.addHandler(handler)
    logger.setLevel(level)
