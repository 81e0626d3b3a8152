import numpy as np
import pytest

from tds.system import TridiagonalSystem


def random_dominant(n, seed, periodic=False, ratio=0.3):
    """Strictly dominant system with off-diagonals up to ratio*diag."""
    rng = np.random.default_rng(seed)
    b = 2.0 + rng.random(n)
    a = ratio * (2.0 * rng.random(n) - 1.0)
    c = ratio * (2.0 * rng.random(n) - 1.0)
    return TridiagonalSystem(a, b, c, periodic=periodic)


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
