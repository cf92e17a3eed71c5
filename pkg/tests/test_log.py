import logging
from logging.handlers import RotatingFileHandler

import pytest

from tomocheck.log import MAX_LOG_SIZE, configure_logging


@pytest.fixture(autouse=True)
def restore_package_logger():
    yield
    configure_logging("WARNING", log_path=None)


def test_level_from_environment(monkeypatch):
    monkeypatch.setenv("TOMOCHECK_LOG_LEVEL", "debug")
    monkeypatch.delenv("TOMOCHECK_LOG_PATH", raising=False)
    logger = configure_logging()
    assert logger.level == logging.DEBUG
    assert len(logger.handlers) == 1
    # explicit level wins over the environment
    assert configure_logging("error").level == logging.ERROR


def test_unknown_level_falls_back_to_info(monkeypatch):
    monkeypatch.delenv("TOMOCHECK_LOG_PATH", raising=False)
    assert configure_logging("chatty").level == logging.INFO


def test_rotating_file_log(tmp_path, monkeypatch):
    path = tmp_path / "tomocheck.log"
    monkeypatch.setenv("TOMOCHECK_LOG_PATH", str(path))
    logger = configure_logging("INFO")
    file_handlers = [h for h in logger.handlers if isinstance(h, RotatingFileHandler)]
    assert len(file_handlers) == 1
    assert file_handlers[0].maxBytes == MAX_LOG_SIZE
    assert file_handlers[0].backupCount == 1

    logging.getLogger("tomocheck.moment_engine").info("table built")
    file_handlers[0].flush()
    line = path.read_text().strip().splitlines()[-1]
    assert " - tomocheck.moment_engine - INFO - test_rotating_file_log - table built" in line

    monkeypatch.delenv("TOMOCHECK_LOG_PATH")
    assert not any(isinstance(h, RotatingFileHandler) for h in configure_logging("INFO").handlers)
