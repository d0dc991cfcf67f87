import numpy as np
import pytest

from spurmin import Dataset, LossKind, fit_linear, relu, xor_dataset


@pytest.fixture(scope="session")
def xor():
    return xor_dataset()


@pytest.fixture(scope="session")
def xor_fit(xor):
    return fit_linear(xor, LossKind.SQUARED)


@pytest.fixture(scope="session")
def relu_act():
    return relu()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_two_output_dataset(seed: int = 3, n: int = 6) -> Dataset:
    """Small d_Y = 2 regression set that no affine map fits."""
    r = np.random.default_rng(seed)
    X = r.standard_normal((2, n))
    Y = np.vstack([np.sin(3.0 * X[0]) + X[1] ** 2, X[0] * X[1]])
    return Dataset(X, Y)
