import pytest

from mpcml.fields import PrimeField, choose_prime
from mpcml.fixedpoint import FixedPointParams


@pytest.fixture(scope="session")
def small_field():
    return PrimeField(101)


@pytest.fixture(scope="session")
def params16():
    return FixedPointParams(f=16, k=32, s=40)


@pytest.fixture(scope="session")
def field16(params16):
    return PrimeField(choose_prime(params16.min_field_bits()))


@pytest.fixture(scope="session")
def params13():
    return FixedPointParams(f=13, k=26, s=40)


@pytest.fixture(scope="session")
def field13(params13):
    return PrimeField(choose_prime(params13.min_field_bits()))
