import logging
import os
from logging.handlers import RotatingFileHandler

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s - %(message)s'
MAX_LOG_SIZE = 10 * 1024 * 1024  # 10 MB
BACKUP_COUNT = 1


def configure_logging(level=None, log_path=None):
    '''
    Configure the ``tomocheck`` logger hierarchy.

    :param level: level name; falls back to ``TOMOCHECK_LOG_LEVEL`` then INFO
    :param log_path: rotating log file; falls back to ``TOMOCHECK_LOG_PATH``.
        Without either, only stderr is used.
    :return: the package logger
    '''
    logger = logging.getLogger('tomocheck')
    level_name = (level or os.environ.get("TOMOCHECK_LOG_LEVEL", "INFO")).upper()
    log_level = logging.getLevelName(level_name)
    if not isinstance(log_level, int):
        log_level = logging.INFO
    logger.setLevel(log_level)

    # drop handlers left by an earlier call
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT)
    stream_handler = logging.StreamHandler()
    stream_handler.setLevel(log_level)
    stream_handler.setFormatter(formatter)
    logger.addHandler(stream_handler)

    log_file_path = log_path or os.environ.get("TOMOCHECK_LOG_PATH")
    if log_file_path:
        file_handler = RotatingFileHandler(
            log_file_path, maxBytes=MAX_LOG_SIZE, backupCount=BACKUP_COUNT)
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
        logger.debug(f"File logging enabled at {log_file_path}")

    logger.propagate = False
    return logger
