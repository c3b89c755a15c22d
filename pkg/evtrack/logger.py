"""Logging setup for evtrack.

All library loggers live under the ``evtrack`` namespace; the CLI configures
that namespace once. Per-event code never logs per event: track transitions
go out at DEBUG and :class:`StreamProgressLogger` emits one line per slice of
stream time.
"""

import logging
import sys

ROOT_LOGGER_NAME = "evtrack"

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
SIMPLE_FORMAT = "%(levelname)s: %(message)s"

_loggers: dict[str, logging.Logger] = {}


def _root() -> logging.Logger:
    return logging.getLogger(ROOT_LOGGER_NAME)


def _make_handler(handler: logging.Handler, level: int, fmt: str) -> logging.Handler:
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(fmt))
    return handler


def setup_logging(
    level: int = logging.INFO,
    format_string: str | None = None,
    log_file: str | None = None,
    simple: bool = True,
) -> None:
    """(Re)configure the ``evtrack`` logger.

    Args:
        level: Threshold for the logger and its handlers
        format_string: Console format (overrides ``simple``)
        log_file: Also log to this file, always with timestamps
        simple: Console lines without timestamps
    """
    fmt = format_string or (SIMPLE_FORMAT if simple else DEFAULT_FORMAT)
    handlers = [_make_handler(logging.StreamHandler(sys.stderr), level, fmt)]
    if log_file:
        handlers.append(
            _make_handler(logging.FileHandler(log_file, encoding="utf-8"), level, DEFAULT_FORMAT)
        )

    root = _root()
    root.setLevel(level)
    for old in list(root.handlers):
        root.removeHandler(old)
        old.close()
    for handler in handlers:
        root.addHandler(handler)


def get_logger(name: str) -> logging.Logger:
    """Logger for ``name`` inside the ``evtrack`` namespace."""
    logger = _loggers.get(name)
    if logger is None:
        qualified = name if name.startswith(ROOT_LOGGER_NAME) else f"{ROOT_LOGGER_NAME}.{name}"
        logger = _loggers[name] = logging.getLogger(qualified)
    return logger


def set_level(level: int) -> None:
    """Change the threshold of the ``evtrack`` logger and all its handlers."""
    root = _root()
    root.setLevel(level)
    for handler in root.handlers:
        handler.setLevel(level)


def enable_debug() -> None:
    set_level(logging.DEBUG)


def enable_quiet() -> None:
    """Warnings and errors only."""
    set_level(logging.WARNING)


class StreamProgressLogger:
    """Logs a progress line every ``every_us`` of *stream* time.

    Counters handed to :meth:`tick` are reported at DEBUG, at most once per
    slice, whatever the event rate.
    """

    def __init__(self, logger: logging.Logger, every_us: int = 1_000_000):
        self.logger = logger
        self.every_us = every_us
        self._next_t: int | None = None

    def tick(self, t_us: int, **counters: int) -> None:
        if self._next_t is None:
            self._next_t = t_us + self.every_us
            return
        if t_us < self._next_t:
            return
        self._next_t = t_us + self.every_us
        if self.logger.isEnabledFor(logging.DEBUG):
            summary = ", ".join(f"{key}={value}" for key, value in counters.items())
            self.logger.debug("t=%.3f s: %s", t_us / 1e6, summary)
