import random
from fractions import Fraction

import pytest
from hypothesis import settings

from qtilde import core, fixtures

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

F = Fraction


@pytest.fixture
def ternary():
    return fixtures.ternary_uniform()


@pytest.fixture
def cantor():
    return fixtures.get("example4_sc").measure


@pytest.fixture
def lebesgue():
    return fixtures.get("example3_ac").measure


@pytest.fixture
def rng():
    return random.Random(2024)


def matrix(*columns, tail=None, kind="Q"):
    cols = tuple(core.ColumnSpec(tuple(c)) for c in columns)
    if tail is None:
        tail = core.Constant(cols[-1])
    return core.MatrixSpec(cols, tail, kind)
