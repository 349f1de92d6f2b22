import logging

import pytest
from rich.logging import RichHandler

from kamforge._logging import setup_logging


@pytest.mark.parametrize(
    "verbosity, quiet, level",
    [
        (0, False, logging.INFO),
        (1, False, logging.DEBUG),
        (3, False, logging.DEBUG),
        (2, True, logging.WARNING),
    ],
)
def test_setup_logging_level(verbosity: int, quiet: bool, level: int) -> None:
    logger = setup_logging(verbosity, quiet)
    assert logger.name == "kamforge"
    assert logger.level == level


def test_setup_logging_replaces_handler() -> None:
    setup_logging()
    logger = setup_logging()
    assert sum(isinstance(h, RichHandler) for h in logger.handlers) == 1
