import numpy as np
import pytest

from dfframe.nn import backend


@pytest.fixture(params=backend.available())
def kernel_backend(request):
    previous = backend.use_backend(request.param)
    yield request.param
    backend.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
