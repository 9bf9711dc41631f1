import logging
from typing import Optional

from .. import config

# pandas pulls these in when installed
QUIET = ("numexpr", "bottleneck")


def setup_logging(level: Optional[str] = None) -> None:
    name = (level or config.LOG_LEVEL).upper()
    logging.basicConfig(
        format="%(asctime)s | %(levelname)-7s | %(name)s | %(message)s",
        level=getattr(logging, name, logging.INFO),
    )
    # numpy overflow / invalid-value RuntimeWarnings go to the "py.warnings" logger
    logging.captureWarnings(True)
    for noisy in QUIET:
        logging.getLogger(noisy).setLevel(logging.WARNING)
