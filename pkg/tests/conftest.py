from pathlib import Path

import pytest

from netfloc import Instance

DATA = Path(__file__).parent / "data"

LINE5_POINTS = [[0], [25], [50], [100], [101]]


@pytest.fixture
def line5():
    return Instance.load(DATA / "line5.json")


@pytest.fixture
def line5_cheap_f1():
    """LINE5 with the second facility one unit cheaper."""
    return Instance("euclidean-L2", points=LINE5_POINTS,
                    facilities=[(0, 10), (3, 9)], kappa=2)


@pytest.fixture
def data_dir():
    return DATA
