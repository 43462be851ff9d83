import numpy as np
import pytest

from nfvlab import BitMatrix, NfvCode


def random_code_matrix(rng, K, N) -> BitMatrix:
    """Random K x N binary matrix with no all-zero column (valid combining code)."""
    while True:
        arr = (rng.random((K, N)) < 0.5).astype(np.uint8)
        if arr.sum(axis=0).min() > 0:
            return BitMatrix.from_array(arr)


def random_code(rng, K, N) -> NfvCode:
    return NfvCode(random_code_matrix(rng, K, N))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
