import pytest
from fractions import Fraction

from srbounds import ForcedDoubleWellParams, lift_forced_double_well


@pytest.fixture(scope="session")
def paper_params():
    return ForcedDoubleWellParams(Fraction(3, 10), Fraction(1, 2), Fraction(1, 2))


@pytest.fixture(scope="session")
def paper_model(paper_params):
    return lift_forced_double_well(paper_params)
