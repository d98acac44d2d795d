""":mod:`hycert.helpers` --- Implements various helpers
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

"""
import functools
import hashlib
from threading import RLock
from types import TracebackType
from typing import Optional, Tuple, Type

_missing = object()

ExcInfo = Tuple[Type[BaseException], BaseException, Optional[TracebackType]]


class locked_cached_property(object):
    """Computed once per instance, even when several greenlets or threads
    ask at the same time."""

    def __init__(self, func) -> None:
        functools.update_wrapper(self, func)
        self.func = func
        self.attrname = func.__name__
        self.lock = RLock()

    def __set_name__(self, owner, name: str) -> None:
        self.attrname = name

    def __get__(self, obj, owner=None):
        if obj is None:
            return self
        cache = obj.__dict__
        with self.lock:
            value = cache.get(self.attrname, _missing)
            if value is _missing:
                value = cache[self.attrname] = self.func(obj)
        return value


def reraise(exc_info: ExcInfo) -> None:
    """Raise a stored ``sys.exc_info()`` triple with its traceback."""
    _, value, tb = exc_info
    raise value.with_traceback(tb)


def digest(text: str) -> str:
    """Hex SHA-256 of ``text`` with line endings normalized."""
    normalized = '\n'.join(line.rstrip() for line in text.splitlines())
    return hashlib.sha256(normalized.encode('utf-8')).hexdigest()
