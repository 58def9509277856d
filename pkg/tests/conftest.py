import numpy as np
import pytest

from annealed_posterior import MeasurementModel


def random_operator(rng, m, d, norm=1.0):
    A = rng.standard_normal((m, d))
    return A * (norm / np.linalg.norm(A, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_model(rng):
    return MeasurementModel(random_operator(rng, 2, 3), 0.5)
