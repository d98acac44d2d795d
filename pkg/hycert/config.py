""":mod:`hycert.config` --- Verifier configuration
~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~

Options live in a :class:`Config` mapping filled from defaults, Python
files and objects.  Only UPPERCASE names are read.  Related solver
options share a prefix (``SDP_``, ``BMI_``, ``PSD_``, ``APPROX_``) and are
handed to the numeric layers as keyword arguments through
:meth:`Config.get_namespace`.

"""
import errno
import os
import types
from fractions import Fraction
from typing import Any, Dict, Optional, Sequence, Tuple

from typeguard import typechecked
from werkzeug.datastructures import ImmutableDict
from werkzeug.utils import import_string

from .interval import to_fraction
from .rational import DENOMINATOR_SCHEDULE

__all__ = 'DEFAULTS', 'Config', 'ConfigAttribute', 'to_degrees'

DEFAULTS = ImmutableDict({
    'DEBUG': False,
    'EPSILON': Fraction(1, 10),
    'DELTA': Fraction(0),
    'TEMPLATE_DEGREE': 2,
    'AUTO_DEGREES': (2, 4),
    'MULTIPLIER_DEGREE': None,
    'SYNTHESIS_MARGIN': Fraction(1, 100),
    'DENOMINATOR_SCHEDULE': DENOMINATOR_SCHEDULE,
    'OBLIGATION_POOL_SIZE': 4,
    'SKIP_RECONSTRUCTED': False,
    'SDP_BOUND': 1e4,
    'SDP_ABSTOL': 1e-9,
    'SDP_RELTOL': 1e-9,
    'SDP_FEASTOL': 1e-10,
    'SDP_MAXITERS': 100,
    'BMI_MAX_ITERS': 50,
    'BMI_TOLERANCE': 1e-10,
    'BMI_FREE_STARTS': (-1.0, 0.0, 1.0),
    'PSD_TAU': 1e-6,
    'PSD_LAMBDA_TOL': Fraction(1, 10 ** 6),
    'PSD_KRAWCZYK_RETRIES': 3,
    'APPROX_DEGREE': 3,
    'APPROX_SPACING': Fraction(1, 4),
    'APPROX_SUBDIVISION': 4,
    'LOGGER_HANDLER_POLICY': 'always',
    'LOG_ROLLOVER': 'd',
    'LOG_INTERVAL': 1,
    'LOG_BACKUP_COUNT': 2,
})


def to_degrees(value) -> Tuple[int, ...]:
    if isinstance(value, int):
        return (value,)
    return tuple(int(d) for d in value)


class ConfigAttribute(object):
    """Make an attribute forward to the config"""

    def __init__(self, name: str, get_converter=None) -> None:
        self.__name__ = name
        self.get_converter = get_converter

    def __get__(self, obj: object, type_=None) -> object:
        if obj is None:
            return self
        rv = obj.config[self.__name__]
        if self.get_converter is not None and rv is not None:
            rv = self.get_converter(rv)
        return rv

    def __set__(self, obj: object, value: object) -> None:
        obj.config[self.__name__] = value


class Config(dict):
    @typechecked
    def __init__(self, root_path: str,
                 defaults: Optional[ImmutableDict] = None) -> None:
        super().__init__(defaults or {})
        self.root_path = root_path

    @typechecked
    def from_envvar(self, variable_name: str, silent: bool = False) -> bool:
        """Load the Python file named by an environment variable."""
        rv = os.environ.get(variable_name)
        if not rv:
            if silent:
                return False
            raise RuntimeError(
                'The environment variable {0!r} is not set; it should point '
                'to a configuration file'.format(variable_name)
            )
        return self.from_pyfile(rv, silent=silent)

    @typechecked
    def from_pyfile(self, filename: str, silent: bool = False) -> bool:
        """Execute a Python file (relative to the root path) and copy its
        UPPERCASE globals."""
        path = os.path.join(self.root_path, filename)
        module = types.ModuleType('config')
        module.__file__ = path
        try:
            with open(path, 'r', encoding='utf-8') as f:
                source = f.read()
        except OSError as e:
            if silent and e.errno in (errno.ENOENT, errno.EISDIR):
                return False
            e.strerror = 'Unable to load configuration file ({0})'.format(
                e.strerror
            )
            raise
        exec(compile(source, path, 'exec'), module.__dict__)
        self.from_object(module)
        return True

    @typechecked
    def from_object(self, obj) -> None:
        """Copy the UPPERCASE attributes of ``obj`` (or of the object an
        import string names)."""
        source = import_string(obj) if isinstance(obj, str) else obj
        self.update((key, getattr(source, key))
                    for key in dir(source) if key.isupper())

    @typechecked
    def get_namespace(self,
                      namespace: str,
                      lowercase: bool = True,
                      trim_namespace: bool = True) -> Dict[str, Any]:
        """Options sharing ``namespace`` as a keyword argument mapping."""
        def rename(key: str) -> str:
            if trim_namespace:
                key = key[len(namespace):]
            return key.lower() if lowercase else key

        return {rename(k): v for k, v in self.items()
                if k.startswith(namespace)}

    def rational(self, key: str) -> Fraction:
        return to_fraction(self[key])

    def schedule(self) -> Sequence[int]:
        return tuple(int(b) for b in self['DENOMINATOR_SCHEDULE'])
