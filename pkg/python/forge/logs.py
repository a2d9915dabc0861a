"""
Logging setup for the forge command line, plus a stage timer.
Library modules only create named loggers; handlers are installed here.
"""

import logging
import os
import time
from contextlib import contextmanager
from typing import Iterator, Optional, Union

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

_HANDLER_FLAG = "_forge_handler"


def configure_logging(level: Optional[Union[str, int]] = None) -> logging.Logger:
    """
    Attach one stream handler to the ``forge`` logger.

    The level comes from ``level``, else FORGE_LOG_LEVEL, else WARNING.
    Calling it again only updates the level.
    """
    if level is None:
        level = os.environ.get("FORGE_LOG_LEVEL", "WARNING")
    if isinstance(level, str):
        level = level.upper()
    root = logging.getLogger("forge")
    root.setLevel(level)
    if not any(getattr(h, _HANDLER_FLAG, False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        setattr(handler, _HANDLER_FLAG, True)
        root.addHandler(handler)
    root.propagate = False
    return root


@contextmanager
def stage(logger: logging.Logger, name: str, items: Optional[int] = None, unit: str = "items") -> Iterator[None]:
    "Log the wall time of a pipeline stage at INFO."
    start = time.monotonic()
    yield
    elapsed = time.monotonic() - start
    if items is None:
        logger.info("stage %s done in %.1fs", name, elapsed)
    else:
        logger.info("stage %s done in %.1fs, %d %s", name, elapsed, items, unit)
