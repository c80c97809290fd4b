import logging

from harfusion.core.config import settings


LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(level: str | None = None) -> None:
    """
    Configure the root logger once for command-line runs.

    :param level: str | None, optional
        Level name; falls back to `settings.log_level`.
    """
    logging.basicConfig(level=(level or settings.log_level).upper(), format=LOG_FORMAT, force=True)
