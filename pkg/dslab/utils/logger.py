"""Structured logging for numerical runs, built on structlog.

Events are snake_case with key/value context. Each module logger carries a
``component`` field, and the CLI binds the command and run label for the
duration of a run. numpy scalars and small arrays in event context are turned
into plain Python values, so the JSON renderer can serialize them.
"""

import logging
import sys
import time
from contextlib import contextmanager
from typing import Optional

import numpy as np
import structlog

MAX_LOGGED_ARRAY = 16


def _numpy_to_python(logger, method_name, event_dict):
    for key, value in event_dict.items():
        if isinstance(value, np.generic):
            event_dict[key] = value.item()
        elif isinstance(value, np.ndarray):
            if value.size <= MAX_LOGGED_ARRAY:
                event_dict[key] = value.tolist()
            else:
                event_dict[key] = f"<array shape={value.shape} max|.|={np.max(np.abs(value)):.3e}>"
    return event_dict


def setup_logging(level: str = "INFO", json_output: bool = False):
    """Configure structured logging for a dslab run.

    Args:
        level: Log level (DEBUG, INFO, WARNING, ERROR)
        json_output: If True, emit JSON lines. Otherwise, plain console output.
    """
    log_level = getattr(logging, level.upper(), logging.INFO)

    # stdout is reserved for result tables and error JSON
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=log_level)

    processors = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.StackInfoRenderer(),
        structlog.processors.TimeStamper(fmt="iso"),
        _numpy_to_python,
    ]

    if json_output:
        processors.append(structlog.processors.JSONRenderer())
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=False))

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(log_level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        # module loggers are created at import, before the CLI configures logging
        cache_logger_on_first_use=False,
    )


def get_logger(name: Optional[str] = None):
    """Get a structured logger tagged with its component name."""
    if name is None:
        return structlog.get_logger()
    return structlog.get_logger(component=name)


def bind_run(command: str, label: Optional[str] = None, seed: Optional[int] = None):
    """Attach run identifiers to every event until ``clear_run`` is called."""
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(command=command, label=label, seed=seed)


def clear_run():
    structlog.contextvars.clear_contextvars()


@contextmanager
def timed(logger, event: str, **context):
    """Log ``<event>_finished`` with the wall time of the block."""
    start = time.perf_counter()
    yield
    logger.info(f"{event}_finished", elapsed_s=round(time.perf_counter() - start, 3), **context)
