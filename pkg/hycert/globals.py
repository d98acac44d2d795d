""":mod:`hycert.globals` --- Context-local verifier and obligation
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

"""
from functools import partial

from werkzeug.local import LocalProxy, LocalStack


def _lookup_obligation_object(name):
    top = _obligation_ctx_stack.top
    if top is None:
        raise RuntimeError('Working outside of obligation context.')
    return getattr(top, name)


def _find_verifier():
    top = _verifier_ctx_stack.top
    if top is None:
        raise RuntimeError('Working outside of verifier context.')
    return top.verifier


_obligation_ctx_stack = LocalStack()
_verifier_ctx_stack = LocalStack()
current_verifier = LocalProxy(_find_verifier)
obligation = LocalProxy(partial(_lookup_obligation_object, 'obligation'))
