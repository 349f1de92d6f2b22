import logging

from rich.console import Console
from rich.logging import RichHandler

_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def setup_logging(verbosity: int = 0, quiet: bool = False) -> logging.Logger:
    """
    Route the package's log records to stderr through rich.

    Parameters
    ----------
    verbosity : int, optional
        0 for INFO, 1 or more for DEBUG, by default 0.
    quiet : bool, optional
        Show warnings only, by default False.

    Returns
    -------
    logging.Logger
        The package logger.

    """
    level = _LEVELS[0] if quiet else _LEVELS[min(verbosity + 1, 2)]
    logger = logging.getLogger("kamforge")
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(
        console=Console(stderr=True), show_path=False, rich_tracebacks=True
    )
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    logger.addHandler(handler)
    logger.setLevel(level)
    return logger
