import pytest

from randes.base.collection import CompleteCollection, ExplicitCollection, OrderedCollection


@pytest.fixture(scope="package")
def ordered():
    return OrderedCollection(p=8, dmax=4)


@pytest.fixture(scope="package")
def complete():
    return CompleteCollection(p=8, dmax=3)


@pytest.fixture(scope="package")
def explicit_with_priors():
    return ExplicitCollection(p=8, models=["1,2", "", "1", "3,4,5"], priors=[0.25, 0.25, 0.25, 0.25])
