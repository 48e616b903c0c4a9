import numpy as np
import pytest
from hypothesis import settings

from sizebias.streams import stream

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

#: fixed seed for every statistical test in this directory
SEED = 20240611


@pytest.fixture
def rng(request):
    return stream(SEED, request.node.name)


def make_rng(name, index=0):
    return stream(SEED, name, index)


@pytest.fixture
def exp1():
    from sizebias import family

    return family("exponential", alpha=1.0)


def allclose(a, b, tol):
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol
