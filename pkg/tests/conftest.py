import numpy as np
import pytest

import pathreg as pr

# Worked-example tables, counts[i][j][k] indexed (Y, X1, X2).
LOAN_COUNTS = [[[15, 10], [16, 27]], [[15, 14], [5, 8]]]
DEATH_COUNTS = [[[132, 52], [9, 97]], [[19, 11], [0, 6]]]


@pytest.fixture
def loan_table() -> pr.ContingencyTable222:
    return pr.ContingencyTable222(np.array(LOAN_COUNTS))


@pytest.fixture
def loan_ds(loan_table) -> pr.Dataset:
    return pr.encode(loan_table)


@pytest.fixture
def death_table() -> pr.ContingencyTable222:
    return pr.ContingencyTable222(np.array(DEATH_COUNTS))


@pytest.fixture
def death_ds(death_table) -> pr.Dataset:
    return pr.encode(death_table)


@pytest.fixture
def cv_table() -> pr.ContingencyTable222:
    return pr.load_fixture("pathological-default")


def random_table(rng: np.random.Generator, max_count: int = 30) -> pr.ContingencyTable222:
    while True:
        counts = rng.integers(0, max_count + 1, size=(2, 2, 2))
        if counts.sum() > 0:
            return pr.ContingencyTable222(counts)
