import json
import random
from fractions import Fraction

import numpy as np
import pytest

from src.core.models import GoldstoneParams, LameParams, SexticParams


@pytest.fixture
def sextic_standard():
    """p1 = 0, p2 = 1, kappa0 = 1, m = 2, eps = 0"""
    return SexticParams(p1=0, p2=1, kappa0=1, m=2)


@pytest.fixture
def lame_case1():
    """case 1, m = 0, delta = 1, k^2 = 1/2, space V1"""
    return LameParams(case=1, m=0, delta=1, ksq=Fraction(1, 2), space="V1")


@pytest.fixture
def goldstone():
    return GoldstoneParams(coupling=4)


@pytest.fixture
def rand():
    return random.Random(1234)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def write_config(tmp_path):
    """Write a config mapping to a JSON file and return its path"""

    def _write(content, name="config.json"):
        path = tmp_path / name
        if isinstance(content, str):
            path.write_text(content)
        else:
            path.write_text(json.dumps(content))
        return str(path)

    return _write
