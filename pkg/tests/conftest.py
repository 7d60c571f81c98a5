import math

import pytest

from mimocorr.geometry import uniform_circular_array
from mimocorr.psd import GaussianPsd, MixturePsd, PsdParams

CLUSTER_MEANS = [(-40, 40), (0, -40), (50, 0)]


def three_cluster_mixture():
    return MixturePsd.equal_weights(
        [GaussianPsd(PsdParams.from_degrees(a, b, 5, 5, 0.8)) for a, b in CLUSTER_MEANS])


@pytest.fixture(scope="session")
def uca3():
    return uniform_circular_array(3, 0.5)


@pytest.fixture(scope="session")
def mixture():
    return three_cluster_mixture()


@pytest.fixture(scope="session")
def gaussian_10_10():
    return GaussianPsd(PsdParams.from_degrees(90, 90, 10, 10, 0.8))


def deg(x):
    return math.radians(x)
