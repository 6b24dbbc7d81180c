# -*- coding = utf-8 -*-
# @Time: 2026-08-16 19:22:08
# @Author: xchain-sync developers
# @Site:
# @File: logger.py
import logging
import sys

LOGGER_NAME = "xchain_sync"


class _BraceAdapter(logging.LoggerAdapter):
    """Gives the stdlib fallback loguru's ``{}`` placeholder style."""

    def log(self, level, msg, *args, **kwargs):
        if self.isEnabledFor(level):
            if args:
                msg = str(msg).format(*args)
            kwargs.setdefault("stacklevel", 3)
            self.logger.log(level, msg, **kwargs)


def configure_logging(
        level: int = logging.INFO,
        stream=sys.stdout,
        formatter: logging.Formatter | None = None,
):
    try:
        from loguru import logger
        return logger
    except ImportError:
        pass
    if formatter is None:
        formatter = logging.Formatter(
            "%(asctime)s | %(levelname)s | %(name)s | %(filename)s:%(lineno)d  %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
    handler = logging.StreamHandler(stream)
    handler.setFormatter(formatter)
    target = logging.getLogger(LOGGER_NAME)
    for existing in list(target.handlers):
        if isinstance(existing, logging.StreamHandler):
            target.removeHandler(existing)
    target.addHandler(handler)
    target.setLevel(level)
    return _BraceAdapter(target, {})


logger = configure_logging()


def set_level(level: str) -> None:
    """Re-emit logs to stderr at ``level`` (used by the CLI)."""
    if isinstance(logger, _BraceAdapter):
        logger.logger.setLevel(level.upper())
        return
    logger.remove()
    logger.add(sys.stderr, level=level.upper())
