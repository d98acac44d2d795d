import os.path

import numpy as np
import pytest

from hycert import Verifier
from hycert.system import parse_system

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


def pytest_configure(config):
    import sys
    sys._called_from_test = True
    config.addinivalue_line('markers', 'slow: runs the numeric solvers end '
                                       'to end')


@pytest.fixture
def fixture_path():
    def path(name: str) -> str:
        return os.path.join(FIXTURES, name)
    return path


@pytest.fixture
def example_system(fixture_path):
    def load(name: str):
        with open(fixture_path(name + '.hs'), encoding='utf-8') as f:
            return parse_system(f.read())
    return load


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def verifier(tmpdir) -> Verifier:
    verifier = Verifier(__name__, root_path=str(tmpdir))
    verifier.config['OBLIGATION_POOL_SIZE'] = 2
    return verifier
