"""Default package."""

__version__ = "0.0.0"

from hgamp import logger

LOG = logger.get_logger("hgamp")
