import numpy as np
import pytest
from hypothesis import strategies as st

from semicont.operators import random_density


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def hermitian(dim, rng):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (a + a.conj().T)


seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=6)


def density(dim, seed, rank=None):
    return random_density(dim, rank, seed)
