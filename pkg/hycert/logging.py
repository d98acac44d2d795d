""":mod:`hycert.logging` --- Verifier logger
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

"""
import os
import sys
from logging import (DEBUG, INFO, Formatter, StreamHandler, getLogger,
                     getLoggerClass)
from logging.handlers import TimedRotatingFileHandler
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .verifier import Verifier

PROD_LOG_FORMAT = '[%(asctime)s] %(levelname)s in %(module)s: %(message)s'
DEBUG_LOG_FORMAT = (
    '-' * 80 + '\n' +
    '%(levelname)s in %(module)s [%(pathname)s:%(lineno)d]:\n' +
    '%(message)s\n' +
    '-' * 80
)

_Logger = getLoggerClass()


def _should_log(verifier: 'Verifier', mode: str) -> bool:
    policy = verifier.config['LOGGER_HANDLER_POLICY']
    return policy == mode or policy == 'always'


def _gated(base, verifier: 'Verifier', debug: bool):
    mode = 'debug' if debug else 'production'

    class Handler(base):
        def emit(self, record):
            if verifier.debug == debug and _should_log(verifier, mode):
                super().emit(record)

    Handler.__name__ = '{0}{1}'.format(mode.title(), base.__name__)
    return Handler


def create_logger(verifier: 'Verifier') -> _Logger:
    """Logger named after the verifier.  Debug records go out only in
    debug mode and production records only outside it, each subject to
    ``LOGGER_HANDLER_POLICY``."""

    class DebugLogger(_Logger):
        def getEffectiveLevel(self):
            if self.level == 0 and verifier.debug:
                return DEBUG
            return super().getEffectiveLevel()

    debug_handler = _gated(StreamHandler, verifier, True)()
    debug_handler.setLevel(DEBUG)
    debug_handler.setFormatter(Formatter(DEBUG_LOG_FORMAT))

    prod_handler = _gated(StreamHandler, verifier, False)()
    prod_handler.setLevel(INFO)
    prod_handler.setFormatter(Formatter(PROD_LOG_FORMAT))

    logger = getLogger(verifier.name)
    del logger.handlers[:]
    logger.__class__ = DebugLogger
    logger.addHandler(debug_handler)
    logger.addHandler(prod_handler)
    if (verifier.log_folder is not None and
            not hasattr(sys, '_called_from_test')):
        log_path = os.path.join(verifier.root_path, verifier.log_folder)
        os.makedirs(log_path, exist_ok=True)
        log_file = os.path.join(log_path, '{0!s}.log'.format(verifier.name))
        rotation = dict(
            when=verifier.config['LOG_ROLLOVER'],
            utc=True,
            interval=verifier.config['LOG_INTERVAL'],
            backupCount=verifier.config['LOG_BACKUP_COUNT'],
        )
        for debug, level, fmt in ((True, DEBUG, DEBUG_LOG_FORMAT),
                                  (False, INFO, PROD_LOG_FORMAT)):
            handler = _gated(TimedRotatingFileHandler, verifier, debug)(
                log_file, **rotation
            )
            handler.setLevel(level)
            handler.setFormatter(Formatter(fmt))
            logger.addHandler(handler)
    logger.propagate = False
    return logger
