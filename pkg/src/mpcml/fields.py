"""Prime field arithmetic on plain Python integers.

Elements are ints in [0, p).  A PrimeField instance holds the modulus and
provides the operations; keeping elements unboxed keeps the protocol hot
loops cheap.  Operations are not constant-time (desk-scale research code,
no side-channel claims).
"""

from __future__ import annotations

import random

from .errors import ConfigurationError, RangeOverflowError

# Largest prime below each power of two.  The session picks the smallest
# entry whose bit length covers 2k + s + 2, the headroom probabilistic
# truncation needs on top of the fixed-point word.
PRIMES_BY_BITS = {
    128: 2**128 - 159,
    160: 2**160 - 47,
    192: 2**192 - 237,
    224: 2**224 - 63,
    256: 2**256 - 189,
    288: 2**288 - 167,
}


def choose_prime(min_bits: int) -> int:
    for bits in sorted(PRIMES_BY_BITS):
        if bits >= min_bits:
            return PRIMES_BY_BITS[bits]
    raise ConfigurationError(f"no stock prime with >= {min_bits} bits")


class PrimeField:
    """Z_p with a centered lift convention for signed values."""

    def __init__(self, p: int):
        if p < 3:
            raise ConfigurationError("modulus must be an odd prime >= 3")
        self.p = p
        self.bit_length = p.bit_length()
        self.byte_length = (self.bit_length + 7) // 8
        self.half = p // 2
        # Field inverse of 2, used by the bit-AND identity.
        self.inv2 = (p + 1) // 2

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        return (-a) % self.p

    def inv(self, a: int) -> int:
        if a % self.p == 0:
            raise ZeroDivisionError("no inverse of 0")
        return pow(a, self.p - 2, self.p)

    def from_signed(self, x: int) -> int:
        """Centered lift: signed x with |x| < p/2 to its residue."""
        if 2 * abs(x) >= self.p:
            raise RangeOverflowError(f"|{x}| >= p/2, cannot lift")
        return x % self.p

    def to_signed(self, a: int) -> int:
        """Inverse of from_signed: residues above p/2 map to negatives."""
        return a - self.p if a > self.half else a

    def rand(self, rng: random.Random) -> int:
        # getrandbits + reduction: bias < 2^-64, cheaper than randrange.
        return rng.getrandbits(self.bit_length + 64) % self.p

    def encode(self, a: int) -> bytes:
        """Fixed-width little-endian wire encoding."""
        return a.to_bytes(self.byte_length, "little")

    def decode(self, buf: bytes) -> int:
        a = int.from_bytes(buf, "little")
        if a >= self.p:
            raise ValueError("encoded value exceeds modulus")
        return a

    def encode_vec(self, values) -> bytes:
        n = self.byte_length
        out = bytearray(n * len(values))
        for i, a in enumerate(values):
            out[i * n : (i + 1) * n] = a.to_bytes(n, "little")
        return bytes(out)

    def decode_vec(self, buf: bytes) -> list[int]:
        n = self.byte_length
        if len(buf) % n:
            raise ValueError("payload is not a whole number of field elements")
        p = self.p
        vals = []
        for i in range(0, len(buf), n):
            a = int.from_bytes(buf[i : i + n], "little")
            if a >= p:
                raise ValueError("encoded value exceeds modulus")
            vals.append(a)
        return vals

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(self.p)

    def __repr__(self):
        return f"PrimeField(bits={self.bit_length})"
