"""SPDZ online phase: inputs, linear algebra on shares, Beaver products,
batched openings, and the deferred batch MAC check.

All communication goes through Session.broadcast_round, so every operation
has a fixed, data-independent round count.  Opened values are only trusted
after mac_check passes; the engine keeps an OpenRecord per opening until
then.  A tamper hook lets tests and the CLI corrupt one share to exercise
the abort path.
"""

from __future__ import annotations

import hashlib
import random
import struct

from .errors import MacCheckFailure, ProtocolError
from .fields import PrimeField
from .preprocessing import Budget
from .shares import AuthShare, add_public, public_share
from .transport import MsgType, Session

DEFAULT_CHECK_INTERVAL = 10_000
_COMMIT_SALT_LEN = 16


class SpdzEngine:
    def __init__(
        self,
        session: Session,
        material,
        field: PrimeField,
        check_interval: int = DEFAULT_CHECK_INTERVAL,
    ):
        self.session = session
        self.material = material
        self.field = field
        self.party_id = session.party_id
        self.n_parties = session.n_parties
        self.alpha_share = material.alpha_share
        self.check_interval = check_interval
        # OpenRecords: (opened_value, own_mac_share) awaiting the MAC check.
        self.pending: list[tuple[int, int]] = []
        self.openings = 0
        self.mac_checks = 0
        self._tamper_delta = 0
        # Commit/reveal randomness; deterministic per party for replayability.
        self._commit_rng = random.Random(
            int.from_bytes(
                hashlib.sha256(session.config.session_id + bytes([self.party_id])).digest(), "big"
            )
        )

    # ----- local linear layer -------------------------------------------------

    def public_share(self, c: int) -> AuthShare:
        return public_share(self.field, c, self.party_id, self.alpha_share)

    def add_public(self, share: AuthShare, c: int) -> AuthShare:
        return add_public(share, c, self.party_id, self.alpha_share)

    # ----- input phase ----------------------------------------------------------

    def input_values(self, owner: int, raws: list[int] | None, count: int) -> list[AuthShare]:
        """Secret-share `count` field elements known to `owner`.

        The owner opens x - r against its dealer masks; everyone shifts the
        mask share.  One round; only the owner reveals anything.
        """
        mask_shares, clears = self.material.take_masks(owner, count)
        if owner == self.party_id:
            if raws is None or len(raws) != count:
                raise ProtocolError("input owner must supply its values")
            p = self.field.p
            deltas = [(x - r) % p for x, r in zip(raws, clears)]
            payload = self.field.encode_vec(deltas)
        else:
            payload = b""
        payloads = self.session.broadcast_round(MsgType.INPUT_BROADCAST, payload)
        deltas = self.field.decode_vec(payloads[owner])
        if len(deltas) != count:
            raise ProtocolError("input broadcast has wrong length")
        return [self.add_public(s, d) for s, d in zip(mask_shares, deltas)]

    # ----- openings -------------------------------------------------------------

    def inject_tamper(self, delta: int = 1) -> None:
        """Corrupt this party's next broadcast value share by +delta."""
        self._tamper_delta = delta % self.field.p

    def open_shares(self, shares: list[AuthShare]) -> list[int]:
        """Open a batch in one round; MACs are checked later in mac_check."""
        if not shares:
            return []
        field = self.field
        values = [s.value for s in shares]
        if self._tamper_delta:
            values = list(values)
            values[0] = (values[0] + self._tamper_delta) % field.p
            self._tamper_delta = 0
        payloads = self.session.broadcast_round(MsgType.OPEN_BATCH, field.encode_vec(values))
        # Sum value shares across parties.
        vecs = []
        for pid in range(self.n_parties):
            if pid == self.party_id:
                vecs.append(values)
            else:
                vec = field.decode_vec(payloads[pid])
                if len(vec) != len(shares):
                    raise ProtocolError("open batch length mismatch")
                vecs.append(vec)
        p = field.p
        opened = [sum(col) % p for col in zip(*vecs)]
        self.pending.extend((v, s.mac) for v, s in zip(opened, shares))
        self.openings += len(opened)
        if len(self.pending) >= self.check_interval:
            self.mac_check()
        return opened

    # ----- multiplication layer --------------------------------------------------

    def mul_shares(self, xs: list[AuthShare], ys: list[AuthShare]) -> list[AuthShare]:
        """Beaver multiplication of aligned batches; field product, untruncated.
        One opening round for all eps/delta values."""
        n = len(xs)
        if n != len(ys):
            raise ProtocolError("mul batch length mismatch")
        if n == 0:
            return []
        triples = self.material.triples.take(n)
        eps = [x - t[0] for x, t in zip(xs, triples)]
        det = [y - t[1] for y, t in zip(ys, triples)]
        opened = self.open_shares(eps + det)
        p = self.field.p
        out = []
        for i, (a, b, c) in enumerate(triples):
            e = opened[i]
            d = opened[n + i]
            res = c + b.scale(e) + a.scale(d)
            out.append(self.add_public(res, (e * d) % p))
        return out

    def square_shares(self, xs: list[AuthShare]) -> list[AuthShare]:
        """x^2 from a dealer square pair; one opened element per item
        (half the traffic of a Beaver product)."""
        if not xs:
            return []
        pairs = self.material.squares.take(len(xs))
        diffs = [x - pr[0] for x, pr in zip(xs, pairs)]
        opened = self.open_shares(diffs)
        p = self.field.p
        out = []
        for d, (r, r2) in zip(opened, pairs):
            res = r2 + r.scale((2 * d) % p)
            out.append(self.add_public(res, (d * d) % p))
        return out

    # ----- MAC check ---------------------------------------------------------------

    def _commit_reveal(self, blob: bytes) -> list[bytes]:
        """Hash commit then reveal one blob per party; returns all blobs."""
        salt = self._commit_rng.randbytes(_COMMIT_SALT_LEN)
        commitment = hashlib.sha256(salt + blob).digest()
        commits = self.session.broadcast_round(MsgType.COMMIT, commitment)
        reveals = self.session.broadcast_round(MsgType.REVEAL, salt + blob)
        out = []
        for pid in range(self.n_parties):
            body = reveals[pid]
            if hashlib.sha256(body).digest() != commits[pid]:
                self.session.abort("commitment mismatch")
                raise MacCheckFailure(f"party {pid} opened a value not matching its commitment")
            out.append(body[_COMMIT_SALT_LEN:])
        return out

    def mac_check(self) -> None:
        """Batch-verify every opening since the last check.

        Parties agree on random coefficients r_j by committing to seeds,
        then commit-and-open sigma_i = sum_j r_j*(mac_ij - alpha_i*v_j).
        Honest runs have sum_i sigma_i = 0; anything else aborts.
        """
        if not self.pending:
            return
        records, self.pending = self.pending, []
        seeds = self._commit_reveal(self._commit_rng.randbytes(32))
        coeff_rng = random.Random(int.from_bytes(hashlib.sha256(b"".join(seeds)).digest(), "big"))
        field = self.field
        p = field.p
        alpha_i = self.alpha_share
        sigma = 0
        for v, mac_share in records:
            r_j = field.rand(coeff_rng)
            sigma += r_j * (mac_share - alpha_i * v)
        sigma %= p
        sigma_blobs = self._commit_reveal(field.encode(sigma))
        total = sum(field.decode(b) for b in sigma_blobs) % p
        self.mac_checks += 1
        if total != 0:
            self.session.abort("mac check failed")
            raise MacCheckFailure(f"MAC check failed over {len(records)} openings")

    def open_and_check(self, shares: list[AuthShare]) -> list[int]:
        """Open a batch and immediately verify all pending MACs (used for
        protocol outputs)."""
        opened = self.open_shares(shares)
        self.mac_check()
        return opened

    # ----- accounting ----------------------------------------------------------------

    def consumed(self) -> Budget:
        mat = self.material
        return Budget(
            triples=mat.triples.consumed,
            squares=mat.squares.consumed,
            trunc_pairs=mat.trunc_pairs.consumed,
            bits=mat.bits.consumed,
            masks={o: pool.consumed for o, pool in mat.masks.items() if pool.consumed},
        )


def derive_session_id(seed: int, tag: str = "") -> bytes:
    return hashlib.sha256(f"mpcml-session|{seed}|{tag}".encode()).digest()[:16]


def pack_counters(budget: Budget, openings: int, rounds: int) -> bytes:
    """Compact encoding used in result rows and transcript comparisons."""
    return struct.pack(
        "<QQQQQQ",
        budget.triples,
        budget.squares,
        budget.trunc_pairs,
        budget.bits,
        openings,
        rounds,
    )
