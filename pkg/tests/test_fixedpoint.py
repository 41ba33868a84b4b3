import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpcml.errors import ConfigurationError, RangeOverflowError
from mpcml.fields import PrimeField
from mpcml.fixedpoint import (
    FixedPointParams,
    field_for_params,
    fx_decode,
    fx_encode,
    params_for_precision,
)


def test_encode_examples():
    params = params_for_precision(13)
    field = field_for_params(params)
    assert field.to_signed(fx_encode(0.5, params, field)) == 4096
    assert fx_encode(-0.5, params, field) == field.p - 4096

    p2 = FixedPointParams(f=2, k=8)
    f2 = field_for_params(p2)
    assert field_for_params(p2).to_signed(fx_encode(1.75, p2, f2)) == 7


def test_decode_examples():
    params = params_for_precision(13)
    field = field_for_params(params)
    assert fx_decode(field.from_signed(4096), params, field) == 0.5
    assert fx_decode(0, params, field) == 0.0
    x = fx_decode(fx_encode(0.3, params, field), params, field)
    assert abs(x - 0.3) <= 2.0**-14


@settings(max_examples=300)
@given(st.floats(min_value=-8000.0, max_value=8000.0, allow_nan=False))
def test_roundtrip_error_bound(x):
    params = params_for_precision(13)
    field = field_for_params(params)
    got = fx_decode(fx_encode(x, params, field), params, field)
    assert abs(got - x) <= 2.0 ** -(params.f + 1)


@settings(max_examples=200)
@given(
    st.integers(min_value=-(2**20), max_value=2**20),
    st.integers(min_value=-(2**20), max_value=2**20),
)
def test_addition_is_exact(ma, mb):
    # encodings of grid points add exactly: no truncation on addition
    params = params_for_precision(28)
    field = field_for_params(params)
    a = ma * params.resolution
    b = mb * params.resolution
    ra = fx_encode(a, params, field)
    rb = fx_encode(b, params, field)
    assert field.add(ra, rb) == fx_encode(a + b, params, field)


def test_presets():
    for f in (13, 28, 60):
        params = params_for_precision(f)
        assert params.k == 2 * f
        field = field_for_params(params)
        assert field.bit_length >= params.min_field_bits()


def test_overflow_and_validation():
    params = params_for_precision(13)
    field = field_for_params(params)
    with pytest.raises(RangeOverflowError):
        fx_encode(2.0**13, params, field)
    with pytest.raises(RangeOverflowError):
        fx_encode(float("inf"), params, field)
    with pytest.raises(ConfigurationError):
        FixedPointParams(f=0, k=10)
    with pytest.raises(ConfigurationError):
        FixedPointParams(f=11, k=10)


def test_ties_round_away_from_zero():
    params = FixedPointParams(f=1, k=8)
    field = field_for_params(params)
    assert field.to_signed(fx_encode(0.25, params, field)) == 1
    assert field.to_signed(fx_encode(-0.25, params, field)) == -1
