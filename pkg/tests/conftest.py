import numpy as np
import pytest

from belldist import DistSpec, SampleBatch
from belldist.gof import ks_statistic


def ks_against(values: np.ndarray, law: DistSpec) -> float:
    """Two-sided KS of raw values against a DistSpec law."""
    return ks_statistic(SampleBatch(np.asarray(values, dtype=float)), law)


@pytest.fixture
def rng():
    # Philox so test draws share the package's counter-based generator family.
    return np.random.Generator(np.random.Philox(key=20240817))
