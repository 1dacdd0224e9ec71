import numpy as np
import pytest

from anyonforge.anyon_model import build_model

MODEL_NAMES = ("ising", "fib", "su2k(3)")


@pytest.fixture(scope="session")
def ising():
    return build_model("ising")


@pytest.fixture(scope="session")
def fib():
    return build_model("fib")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
