import random

from mpcml.fields import PRIMES_BY_BITS, PrimeField
from mpcml.shares import (
    AuthShare,
    add_public,
    public_share,
    reconstruct,
    reconstruct_mac,
    split_authenticated,
)

FIELD = PrimeField(PRIMES_BY_BITS[128])


def test_share_reconstruct_roundtrip():
    rng = random.Random(11)
    alpha = FIELD.rand(rng)
    for _ in range(10_000):
        x = FIELD.rand(rng)
        n = rng.choice((2, 3, 4))
        shares = split_authenticated(FIELD, alpha, x, n, rng)
        assert reconstruct(shares) == x
        assert reconstruct_mac(shares) == FIELD.mul(alpha, x)


def test_linearity_random_affine_combo():
    rng = random.Random(12)
    alpha = FIELD.rand(rng)
    n = 3
    for _ in range(300):
        xs = [FIELD.rand(rng) for _ in range(4)]
        cs = [FIELD.rand(rng) for _ in range(4)]
        share_sets = [split_authenticated(FIELD, alpha, x, n, rng) for x in xs]
        combo = [
            AuthShare(FIELD, 0, 0)
            for _ in range(n)
        ]
        for c, shares in zip(cs, share_sets):
            combo = [acc + s.scale(c) for acc, s in zip(combo, shares)]
        expect = sum(FIELD.mul(c, x) for c, x in zip(cs, xs)) % FIELD.p
        assert reconstruct(combo) == expect
        assert reconstruct_mac(combo) == FIELD.mul(alpha, expect)


def test_add_sub_neg():
    rng = random.Random(13)
    alpha = FIELD.rand(rng)
    a = split_authenticated(FIELD, alpha, 3, 2, rng)
    b = split_authenticated(FIELD, alpha, 4, 2, rng)
    assert reconstruct([x + y for x, y in zip(a, b)]) == 7
    assert reconstruct([x - y for x, y in zip(a, b)]) == FIELD.p - 1
    assert reconstruct([-x for x in a]) == FIELD.p - 3
    assert reconstruct([s.scale(2) for s in split_authenticated(FIELD, alpha, 5, 2, rng)]) == 10


def test_add_public_keeps_mac_relation():
    rng = random.Random(14)
    alpha = FIELD.rand(rng)
    alpha_shares = [FIELD.rand(rng)]
    alpha_shares.append((alpha - alpha_shares[0]) % FIELD.p)
    shares = split_authenticated(FIELD, alpha, 5, 2, rng)
    shifted = [
        add_public(s, 1, party_id=i, alpha_share=alpha_shares[i]) for i, s in enumerate(shares)
    ]
    assert reconstruct(shifted) == 6
    assert reconstruct_mac(shifted) == FIELD.mul(alpha, 6)


def test_public_share():
    rng = random.Random(15)
    alpha = FIELD.rand(rng)
    alpha_shares = [FIELD.rand(rng), 0]
    alpha_shares[1] = (alpha - alpha_shares[0]) % FIELD.p
    shares = [
        public_share(FIELD, 42, party_id=i, alpha_share=alpha_shares[i]) for i in range(2)
    ]
    assert reconstruct(shares) == 42
    assert reconstruct_mac(shares) == FIELD.mul(alpha, 42)
