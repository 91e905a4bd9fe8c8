import pytest

from instances import rng_for


@pytest.fixture
def rng():
    return rng_for(20240917)
