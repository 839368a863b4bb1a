"""
Logging setup for Facet.

Author: Facet Development
"""

import logging
from typing import Optional

from ..config.settings import settings

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"

_configured = False


def setup_logging(level: Optional[str] = None) -> None:
    """
    Configure the root logger once.

    Args:
        level: Level name overriding settings.LOG_LEVEL. DEBUG mode in
            settings always wins.
    """
    global _configured

    if settings.DEBUG:
        level = "DEBUG"
    level_name = (level or settings.LOG_LEVEL).upper()

    root = logging.getLogger()
    root.setLevel(level_name)
    if not _configured:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
        _configured = True
