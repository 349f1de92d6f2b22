import numpy as np
import pytest

from kamforge._divisors import golden_like_frequency


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for sample points."""
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def golden() -> float:
    return float(golden_like_frequency([1])[0])
