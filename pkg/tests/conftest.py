"""Shared fixtures."""

import numpy as np
import pytest

from app.config import get_settings
from app.models.states import CqState
from app.tasks.generators import rng_for


@pytest.fixture(autouse=True)
def fresh_settings():
    """Settings are re-read from the environment for every test."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return rng_for(1234, 0)


@pytest.fixture
def plus_zero_state():
    """Equal mixture of |0> and |+> labelled by a classical bit."""
    zero = np.array([[1.0, 0.0], [0.0, 0.0]])
    plus = 0.5 * np.ones((2, 2))
    return CqState(("0", "1"), np.array([0.5 * zero, 0.5 * plus]))


@pytest.fixture
def classical_state():
    joint = np.array([[0.3, 0.1], [0.05, 0.25], [0.2, 0.1]])
    return CqState.classical(joint)
