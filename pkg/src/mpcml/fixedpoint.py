"""Fixed-point encoding of reals into field elements.

A real x is stored as round(x * 2^f) under the centered lift, so the
decoded value is lift(raw) / 2^f.  f is the number of fractional bits,
k the total significand bits (integer + fraction, sign excluded), s the
statistical masking headroom used by truncation and comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError, RangeOverflowError
from .fields import PrimeField, choose_prime

DEFAULT_STAT_SEC = 40

# Precision presets used by the experiment grids.  k defaults to 2f: equal
# integer and fractional headroom.
PRECISION_PRESETS = (13, 28, 60)


@dataclass(frozen=True)
class FixedPointParams:
    f: int
    k: int
    s: int = DEFAULT_STAT_SEC

    def __post_init__(self):
        if not 0 < self.f <= self.k:
            raise ConfigurationError("need 0 < f <= k")
        if self.s < 1:
            raise ConfigurationError("statistical security must be positive")

    @property
    def scale(self) -> int:
        return 1 << self.f

    @property
    def resolution(self) -> float:
        return 2.0 ** (-self.f)

    @property
    def max_magnitude(self) -> float:
        """Largest encodable magnitude, 2^(k-f)."""
        return float(1 << (self.k - self.f))

    def min_field_bits(self) -> int:
        # 2k + s + 2 so a shifted product plus its truncation mask fits.
        return 2 * self.k + self.s + 2


def params_for_precision(f: int, k: int | None = None, s: int = DEFAULT_STAT_SEC) -> FixedPointParams:
    return FixedPointParams(f=f, k=k if k is not None else 2 * f, s=s)


def field_for_params(params: FixedPointParams) -> PrimeField:
    return PrimeField(choose_prime(params.min_field_bits()))


def fx_encode(x: float, params: FixedPointParams, field: PrimeField) -> int:
    """Round-to-nearest encoding, ties away from zero."""
    if not math.isfinite(x):
        raise RangeOverflowError(f"cannot encode {x!r}")
    m = int(math.floor(abs(x) * params.scale + 0.5))
    if m >= (1 << params.k):
        raise RangeOverflowError(f"|{x}| exceeds fixed-point range 2^{params.k - params.f}")
    return field.from_signed(-m if x < 0 else m)

def fx_decode(raw: int, params: FixedPointParams, field: PrimeField) -> float:
    return field.to_signed(raw) / params.scale


def fx_encode_vec(xs, params: FixedPointParams, field: PrimeField) -> list[int]:
    return [fx_encode(float(x), params, field) for x in xs]


def fx_decode_vec(raws, params: FixedPointParams, field: PrimeField) -> list[float]:
    return [fx_decode(r, params, field) for r in raws]
