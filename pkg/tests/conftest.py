import hypothesis
import numpy as np
import pytest

from flightcore import kernels

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=50)
hypothesis.settings.register_profile(
    "fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    """Pay the JIT cost once, outside any timed assertions."""
    kernels.warmup()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
