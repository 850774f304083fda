"""Shared fixtures of the stagrover test suite."""

# Standard library modules
import logging

# Third party modules
import pytest

# Project modules
from stagrover import cli
from stagrover.utilities import csv_read


@pytest.fixture(autouse=True)
def _reset_loggers():
    """Drop handlers installed by command line runs."""
    yield
    root_logger = logging.getLogger()
    for handler in cli._installed_handlers:
        root_logger.removeHandler(handler)
        handler.close()
    cli._installed_handlers.clear()


@pytest.fixture
def run_cli(tmp_path):
    """Return a function running the command line with `--out` in tmp_path.

    It returns the exit code and the rows of the written CSV file.
    """
    def run(*arguments, out='out.csv'):
        out = str(tmp_path / out)
        code = cli.main(list(arguments) + ['--out', out, '--quiet'])
        return code, csv_read(out)
    return run
