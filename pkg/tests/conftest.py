import numpy as np
import pytest

from seqsearch import Parameters, RngStream, build_draw_set, simulate_dataset

TRUTH = Parameters(beta=np.array([1.0, 0.7, 0.5, 0.3]), log_c=-3.0)


@pytest.fixture(scope="session")
def truth():
    return TRUTH


@pytest.fixture(scope="session")
def small_dataset():
    """A 60-consumer dataset at the default truth, fixed seed."""
    return simulate_dataset(TRUTH, 60, 4, RngStream(4242, (0,)))


@pytest.fixture(scope="session")
def small_draws(small_dataset):
    return build_draw_set(len(small_dataset), small_dataset.J, 25,
                          RngStream(4242, (1,)))
