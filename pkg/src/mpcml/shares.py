"""Authenticated additive shares.

Each party holds one AuthShare per secret x: an additive share of x and an
additive share of alpha*x under the global MAC key alpha.  Both components
are linear, so +, -, and multiplication by public integers are local.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .fields import PrimeField


@dataclass(slots=True)
class AuthShare:
    field: PrimeField
    value: int
    mac: int

    def __add__(self, other: "AuthShare") -> "AuthShare":
        f = self.field
        return AuthShare(f, (self.value + other.value) % f.p, (self.mac + other.mac) % f.p)

    def __sub__(self, other: "AuthShare") -> "AuthShare":
        f = self.field
        return AuthShare(f, (self.value - other.value) % f.p, (self.mac - other.mac) % f.p)

    def __neg__(self) -> "AuthShare":
        f = self.field
        return AuthShare(f, (-self.value) % f.p, (-self.mac) % f.p)

    def scale(self, c: int) -> "AuthShare":
        """Multiply by a public integer constant (mod p)."""
        f = self.field
        return AuthShare(f, (self.value * c) % f.p, (self.mac * c) % f.p)


def add_public(share: AuthShare, c: int, party_id: int, alpha_share: int) -> AuthShare:
    """Add a public constant: party 0 absorbs it into the value share,
    everyone corrects the MAC share by alpha_i * c."""
    f = share.field
    v = (share.value + c) % f.p if party_id == 0 else share.value
    return AuthShare(f, v, (share.mac + alpha_share * c) % f.p)


def public_share(field: PrimeField, c: int, party_id: int, alpha_share: int) -> AuthShare:
    """Shares of a public constant (no dealer material needed)."""
    return AuthShare(field, c % field.p if party_id == 0 else 0, (alpha_share * c) % field.p)


def split_authenticated(
    field: PrimeField, alpha: int, value: int, n_parties: int, rng: random.Random
) -> list[AuthShare]:
    """Dealer-side: fresh authenticated sharing of a known value."""
    mac_total = (alpha * value) % field.p
    vals = [field.rand(rng) for _ in range(n_parties - 1)]
    macs = [field.rand(rng) for _ in range(n_parties - 1)]
    vals.append((value - sum(vals)) % field.p)
    macs.append((mac_total - sum(macs)) % field.p)
    return [AuthShare(field, v, m) for v, m in zip(vals, macs)]


def reconstruct(shares: list[AuthShare]) -> int:
    field = shares[0].field
    return sum(s.value for s in shares) % field.p


def reconstruct_mac(shares: list[AuthShare]) -> int:
    field = shares[0].field
    return sum(s.mac for s in shares) % field.p
