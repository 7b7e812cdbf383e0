"""
Flagforge — Centralized event logging.

Use log_event() for explicit logging; use @log_exceptions for automatic exception capture.
Events go through Python logging under the caller's category so that settings.LOGGING
decides where they end up (console, rotating experiments log).
"""

import functools
import logging
import traceback
from typing import Any, Callable, Optional

logger = logging.getLogger(__name__)


class Category:
    GEOMETRY = 'GEOMETRY'
    COUNTING = 'COUNTING'
    CONSTRUCTION = 'CONSTRUCTION'
    EXPERIMENT = 'EXPERIMENT'
    CLI = 'CLI'


_LEVELS = {
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARNING': logging.WARNING,
    'ERROR': logging.ERROR,
    'CRITICAL': logging.CRITICAL,
}


def _render_metadata(metadata: dict) -> str:
    parts = []
    for key in sorted(metadata):
        value = metadata[key]
        text = str(value)
        if len(text) > 200:
            text = text[:197] + '...'
        parts.append(f'{key}={text}')
    return ' '.join(parts)


def log_event(
    level: str,
    category: str,
    message: str,
    *,
    target: Optional[logging.Logger] = None,
    **metadata: Any,
) -> str:
    """
    Emit one structured log line: "[CATEGORY] message key=value ...".
    Levels: DEBUG, INFO, WARNING, ERROR, CRITICAL. Returns the rendered line.
    """
    line = f'[{category}] {message or ""}'
    if metadata:
        line = f'{line} {_render_metadata(metadata)}'
    (target or logger).log(_LEVELS.get(level.upper(), logging.INFO), line)
    return line


def _traceback_to_dict(exc: BaseException) -> dict:
    """Convert Python traceback to a structured dict."""
    tb_lines = traceback.format_exception(type(exc), exc, exc.__traceback__)
    return {
        'type': type(exc).__name__,
        'message': str(exc)[:2000],
        'traceback': ''.join(tb_lines)[:8000],
    }


def log_exception(
    exc: BaseException,
    category: str,
    message: str,
    *,
    target: Optional[logging.Logger] = None,
    **metadata: Any,
) -> str:
    """Log an exception with full traceback."""
    details = _traceback_to_dict(exc)
    line = log_event(
        'ERROR',
        category,
        f'{message}: {details["type"]}: {details["message"]}',
        target=target,
        **metadata,
    )
    (target or logger).debug(details['traceback'])
    return line


def log_exceptions(
    category: str,
    message_prefix: str = 'Error in',
) -> Callable:
    """
    Decorator to catch exceptions in any service and log them.
    Re-raises the exception after logging.
    """

    def decorator(func: Callable) -> Callable:
        target = logging.getLogger(func.__module__)

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as exc:
                # Only scalar kwargs are worth echoing; families can hold 10^5 flats.
                context = {
                    k: v for k, v in kwargs.items()
                    if not k.startswith('_') and isinstance(v, (int, str, float, bool))
                }
                log_exception(
                    exc,
                    category,
                    f'{message_prefix} {func.__name__}',
                    target=target,
                    **context,
                )
                raise

        return wrapper

    return decorator
