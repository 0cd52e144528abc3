import warnings

import numpy as np
import pytest

from gaussrough.gaussian import SingularConditioning


@pytest.fixture(autouse=True)
def _quiet_conditioning():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularConditioning)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
