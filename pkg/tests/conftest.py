import numpy as np
import pytest

from qprobe.headways import poisson_count_pmf
from qprobe.pmf import Pmf


def small_pmf_battery() -> list[Pmf]:
    """Hand-picked plus random pmfs reused by the identity tests."""
    rng = np.random.default_rng(20240601)
    pmfs = [
        Pmf.point_mass(0),
        Pmf.point_mass(3),
        Pmf(np.array([0.5, 0.5])),
        Pmf.from_weights([0.0, 1.0, 1.0]),
        Pmf.from_weights([0.7, 0.0, 0.0, 0.3]),
        poisson_count_pmf(10.0),
        poisson_count_pmf(0.5),
    ]
    for _ in range(6):
        size = int(rng.integers(2, 16))
        weights = rng.random(size)
        weights[rng.random(size) < 0.25] = 0.0
        if weights.sum() == 0.0:
            weights[0] = 1.0
        pmfs.append(Pmf.from_weights(weights))
    return pmfs


@pytest.fixture(scope="session")
def pmf_battery():
    return small_pmf_battery()
