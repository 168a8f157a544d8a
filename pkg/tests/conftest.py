import numpy as np
import pytest

from upliftrank.data import UpliftDataset, rank_by_scores, Partition


@pytest.fixture
def worked_example():
    """Four-instance dataset with |T|=3, |C|=1, ranked in listed order."""
    return UpliftDataset(np.zeros((4, 1)), y=[0, 1, 1, 1], t=[1, 1, 0, 1])


@pytest.fixture
def worked_example_joint(worked_example):
    return rank_by_scores(worked_example, [4.0, 3.0, 2.0, 1.0],
                          Partition.JOINT)


@pytest.fixture
def worked_example_separate(worked_example):
    return rank_by_scores(worked_example, [4.0, 3.0, 2.0, 1.0],
                          Partition.SEPARATE)


def random_dataset(rng, max_n=50, min_n=2, with_scores=True,
                   require_both_groups=True):
    """Random small dataset; guarantees both groups non-empty by default."""
    n = int(rng.integers(min_n, max_n + 1))
    y = rng.integers(0, 2, size=n)
    t = rng.integers(0, 2, size=n)
    if require_both_groups:
        t[0] = 1
        t[min(1, n - 1)] = 0
    ds = UpliftDataset(rng.normal(size=(n, 2)), y, t)
    if not with_scores:
        return ds
    return ds, rng.normal(size=n)
