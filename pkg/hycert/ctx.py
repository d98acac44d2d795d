""":mod:`hycert.ctx` --- Verifier and obligation contexts
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

"""
import sys
from contextlib import AbstractContextManager
from typing import TYPE_CHECKING

from .globals import _obligation_ctx_stack, _verifier_ctx_stack

if TYPE_CHECKING:
    from .pipeline import Obligation
    from .verifier import Verifier

_sentinel = object()


def has_obligation_context() -> bool:
    return _obligation_ctx_stack.top is not None


def has_verifier_context() -> bool:
    return _verifier_ctx_stack.top is not None


class VerifierContext(AbstractContextManager):
    """Binds :data:`~hycert.globals.current_verifier`.  Pushes nest;
    teardown callbacks run when the last push is popped."""

    def __init__(self, verifier: 'Verifier') -> None:
        self.verifier = verifier
        self._refcnt = 0

    def __enter__(self):
        self.push()
        return self

    def __exit__(self, exc_type, exc_value, tb):
        self.pop(exc_value)
        return None

    def push(self) -> None:
        self._refcnt += 1
        _verifier_ctx_stack.push(self)

    def pop(self, exc=_sentinel) -> None:
        try:
            self._refcnt -= 1
            if self._refcnt <= 0:
                if exc is _sentinel:
                    exc = sys.exc_info()[1]
                self.verifier.do_teardown_verifier(exc)
        finally:
            rv = _verifier_ctx_stack.pop()
        assert rv is self, 'Popped wrong verifier context.  ' \
                           '({0!r} instead of {1!r})'.format(rv, self)


class ObligationContext(AbstractContextManager):
    def __init__(self, verifier: 'Verifier',
                 obligation: 'Obligation') -> None:
        self.verifier = verifier
        self.obligation = obligation
        self.result = None

    def __enter__(self):
        self.push()
        return self

    def __exit__(self, exc_type, exc_val, tb):
        self.pop(exc_val)
        return None

    def push(self) -> None:
        _obligation_ctx_stack.push(self)
        self.verifier.do_before_obligation(self.obligation)

    def pop(self, exc=_sentinel) -> None:
        try:
            if exc is _sentinel:
                exc = sys.exc_info()[1]
            if exc is None:
                self.verifier.do_after_obligation(self.obligation,
                                                  self.result)
        finally:
            rv = _obligation_ctx_stack.pop()
        assert rv is self, 'Popped wrong obligation context.  ' \
                           '({0!r} instead of {1!r})'.format(rv, self)
