"""Trusted-dealer simulation of the SPDZ offline phase.

The dealer replaces cryptographic preprocessing: it samples the global MAC
key, Beaver triples, square pairs, truncation pairs, random bit shares, and
input masks, and hands each party its slice.  Generation is chunked and
deterministic in (seed, kind, chunk): the same seed yields bit-identical
material whether it is pregenerated, written to per-party files, or streamed
on demand during the online phase.  Secret values are drawn from a stream
that does not depend on the party count, so runs with 2, 3, or 4 parties
see identical masks and therefore identical opened results.

Per-party file format (little-endian, fixed field-element width W =
ceil(bitlen(p)/8) bytes):

    magic    4s   = b"MPML"
    version  u16  = 1
    party_id u16
    n_parties u16
    mod_len  u16, modulus (mod_len bytes)
    alpha_share (W bytes)
    counts: triples u64, squares u64, trunc_pairs u64, bits u64,
            masks u64 per owner (n_parties entries)
    elements in kind order:
      triples:     a.value a.mac b.value b.mac c.value c.mac
      squares:     r.value r.mac r2.value r2.mac
      trunc_pairs: r_full.value r_full.mac r_top.value r_top.mac
      bits:        b.value b.mac
      masks (owner 0..n-1): r.value r.mac, plus the clear value when
                            owner == party_id
"""

from __future__ import annotations

import hashlib
import random
import struct
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from .errors import ConfigurationError, PreprocessingExhausted, ProtocolError
from .fields import PrimeField
from .fixedpoint import FixedPointParams
from .shares import AuthShare

MAGIC = b"MPML"
VERSION = 1
CHUNK = 4096

KINDS = ("triples", "squares", "trunc_pairs", "bits")


@dataclass
class Budget:
    """Requested (or consumed) material counts per kind."""

    triples: int = 0
    squares: int = 0
    trunc_pairs: int = 0
    bits: int = 0
    masks: dict = dc_field(default_factory=dict)  # owner party id -> count

    def __add__(self, other: "Budget") -> "Budget":
        masks = dict(self.masks)
        for owner, n in other.masks.items():
            masks[owner] = masks.get(owner, 0) + n
        return Budget(
            self.triples + other.triples,
            self.squares + other.squares,
            self.trunc_pairs + other.trunc_pairs,
            self.bits + other.bits,
            masks,
        )

    def scaled(self, factor: int) -> "Budget":
        return Budget(
            self.triples * factor,
            self.squares * factor,
            self.trunc_pairs * factor,
            self.bits * factor,
            {o: n * factor for o, n in self.masks.items()},
        )

    def covers(self, other: "Budget") -> bool:
        if (
            self.triples < other.triples
            or self.squares < other.squares
            or self.trunc_pairs < other.trunc_pairs
            or self.bits < other.bits
        ):
            return False
        return all(self.masks.get(o, 0) >= n for o, n in other.masks.items())

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in KINDS}
        d["masks"] = dict(self.masks)
        return d


def _chunk_rng(seed: int, label: str, kind: str, chunk_no: int) -> random.Random:
    digest = hashlib.sha256(f"{seed}|{label}|{kind}|{chunk_no}".encode()).digest()
    return random.Random(int.from_bytes(digest, "big"))


class DealerRandomness:
    """Chunk-deterministic sampling of secrets and their sharings."""

    def __init__(self, field: PrimeField, n_parties: int, params: FixedPointParams, seed: int):
        if 2 * params.k + params.s + 2 > field.bit_length:
            raise ConfigurationError(
                f"field of {field.bit_length} bits too small for k={params.k}, s={params.s}"
            )
        self.field = field
        self.n = n_parties
        self.params = params
        self.seed = seed
        self.alpha = _chunk_rng(seed, "alpha", "key", 0).randrange(field.p)
        rng = _chunk_rng(seed, "alpha-shares", "key", self.n)
        shares = [field.rand(rng) for _ in range(n_parties - 1)]
        shares.append((self.alpha - sum(shares)) % field.p)
        self.alpha_shares = shares

    def _share_into(self, value: int, rng: random.Random, out: list) -> None:
        """Append one authenticated sharing of value to each party's list."""
        f = self.field
        p = f.p
        mac_total = (self.alpha * value) % p
        vsum = 0
        msum = 0
        for i in range(self.n - 1):
            v = f.rand(rng)
            m = f.rand(rng)
            out[i].append(AuthShare(f, v, m))
            vsum += v
            msum += m
        out[-1].append(AuthShare(f, (value - vsum) % p, (mac_total - msum) % p))

    def chunk(self, kind: str, chunk_no: int, count: int, owner: int | None = None):
        """Generate `count` items of `kind` for chunk `chunk_no`.

        Returns (per_party_lists, clears) where clears is non-None only for
        masks (the owner's plaintext mask values).
        """
        label = kind if owner is None else f"{kind}:{owner}"
        rng_secret = _chunk_rng(self.seed, "secret", label, chunk_no)
        rng_share = _chunk_rng(self.seed, f"share{self.n}", label, chunk_no)
        f = self.field
        p = f.p
        params = self.params
        per_party: list[list] = [[] for _ in range(self.n)]
        clears: list[int] | None = None

        if kind == "triples":
            for _ in range(count):
                a = f.rand(rng_secret)
                b = f.rand(rng_secret)
                self._share_into(a, rng_share, per_party)
                self._share_into(b, rng_share, per_party)
                self._share_into((a * b) % p, rng_share, per_party)
        elif kind == "squares":
            for _ in range(count):
                r = f.rand(rng_secret)
                self._share_into(r, rng_share, per_party)
                self._share_into((r * r) % p, rng_share, per_party)
        elif kind == "trunc_pairs":
            bound = 1 << (params.k + params.f + params.s)
            for _ in range(count):
                r_full = rng_secret.getrandbits(params.k + params.f + params.s) % bound
                self._share_into(r_full, rng_share, per_party)
                self._share_into(r_full >> params.f, rng_share, per_party)
        elif kind == "bits":
            for _ in range(count):
                self._share_into(rng_secret.getrandbits(1), rng_share, per_party)
        elif kind == "masks":
            clears = []
            for _ in range(count):
                r = f.rand(rng_secret)
                clears.append(r)
                self._share_into(r, rng_share, per_party)
        else:
            raise ConfigurationError(f"unknown material kind {kind!r}")
        return per_party, clears


class Pool:
    """Single-use pool of one material kind for one party.

    Items are served strictly in order; the high-water mark makes reuse a
    fatal error even if a caller tampers with the cursor.
    """

    def __init__(self, kind: str, items: list, clears: list | None = None):
        self.kind = kind
        self.items = items
        self.clears = clears
        self.cursor = 0
        self._high_water = 0
        self.consumed = 0

    def take(self, n: int) -> list:
        if self.cursor < self._high_water:
            raise ProtocolError(f"{self.kind} pool cursor rewound: material reuse")
        if self.cursor + n > len(self.items):
            raise PreprocessingExhausted(
                f"out of {self.kind}: wanted {n}, have {len(self.items) - self.cursor}"
            )
        out = self.items[self.cursor : self.cursor + n]
        self.cursor += n
        self._high_water = self.cursor
        self.consumed += n
        return out


@dataclass
class PartyMaterial:
    """All dealer material held by one party."""

    party_id: int
    n_parties: int
    field: PrimeField
    alpha_share: int
    triples: Pool
    squares: Pool
    trunc_pairs: Pool
    bits: Pool
    masks: dict  # owner -> Pool (clear values attached for own masks)

    def pool(self, kind: str) -> Pool:
        return getattr(self, kind)

    def take_masks(self, owner: int, n: int):
        """Returns (shares, clears); clears is None unless we own the masks."""
        pool = self.masks[owner]
        start = pool.cursor
        shares = pool.take(n)
        clears = pool.clears[start : start + n] if pool.clears is not None else None
        return shares, clears


class Dealer:
    """Generates material up front, to memory or to per-party files."""

    def __init__(self, field: PrimeField, n_parties: int, params: FixedPointParams, seed: int):
        self.rand = DealerRandomness(field, n_parties, params, seed)
        self.field = field
        self.n = n_parties
        self.params = params
        self.seed = seed
        self.offline_seconds = 0.0

    def _generate_kind(self, kind: str, count: int, owner: int | None = None):
        per_party = [[] for _ in range(self.n)]
        clears: list[int] = []
        for start in range(0, count, CHUNK):
            m = min(CHUNK, count - start)
            chunk_parties, chunk_clears = self.rand.chunk(kind, start // CHUNK, m, owner)
            for i in range(self.n):
                per_party[i].extend(chunk_parties[i])
            if chunk_clears is not None:
                clears.extend(chunk_clears)
        return per_party, clears

    def generate(self, budget: Budget) -> list[PartyMaterial]:
        t0 = time.perf_counter()
        groups = {}
        for kind in KINDS:
            groups[kind], _ = self._generate_kind(kind, getattr(budget, kind))
        mask_groups = {}
        mask_clears = {}
        for owner, count in budget.masks.items():
            mask_groups[owner], mask_clears[owner] = self._generate_kind("masks", count, owner)

        materials = []
        for pid in range(self.n):
            pools = {}
            for kind in KINDS:
                flat = groups[kind][pid]
                if kind == "triples":
                    items = [tuple(flat[i : i + 3]) for i in range(0, len(flat), 3)]
                elif kind in ("squares", "trunc_pairs"):
                    items = [tuple(flat[i : i + 2]) for i in range(0, len(flat), 2)]
                else:
                    items = flat
                pools[kind] = Pool(kind, items)
            masks = {}
            for owner, count in budget.masks.items():
                clears = mask_clears[owner] if owner == pid else None
                masks[owner] = Pool("masks", mask_groups[owner][pid], clears)
            materials.append(
                PartyMaterial(
                    party_id=pid,
                    n_parties=self.n,
                    field=self.field,
                    alpha_share=self.rand.alpha_shares[pid],
                    masks=masks,
                    **pools,
                )
            )
        self.offline_seconds += time.perf_counter() - t0
        return materials

    def generate_to_files(self, budget: Budget, directory: str | Path) -> list[Path]:
        materials = self.generate(budget)
        t0 = time.perf_counter()
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for mat in materials:
            path = directory / f"party{mat.party_id}.mpml"
            write_party_file(path, mat, budget)
            paths.append(path)
        self.offline_seconds += time.perf_counter() - t0
        return paths


class StreamingMaterial:
    """On-demand material source with the same interface as PartyMaterial.

    Each party regenerates the shared chunks locally (deterministic in the
    seed), keeping only its own slice; memory stays bounded by the chunk
    size.  Generation time is accumulated separately so the online clock
    can exclude it.
    """

    class _StreamPool:
        def __init__(self, outer: "StreamingMaterial", kind: str, owner: int | None = None):
            self.outer = outer
            self.kind = kind
            self.owner = owner
            self.buffer: list = []
            self.clears: list | None = [] if owner is not None else None
            self.next_index = 0
            self.consumed = 0
            self.limit: int | None = None

        def _refill(self, needed: int) -> None:
            outer = self.outer
            t0 = time.perf_counter()
            while len(self.buffer) < needed:
                chunk_no = self.next_index // CHUNK
                per_party, clears = outer.rand.chunk(self.kind, chunk_no, CHUNK, self.owner)
                mine = per_party[outer.party_id]
                if self.kind == "triples":
                    items = [tuple(mine[i : i + 3]) for i in range(0, len(mine), 3)]
                elif self.kind in ("squares", "trunc_pairs"):
                    items = [tuple(mine[i : i + 2]) for i in range(0, len(mine), 2)]
                else:
                    items = mine
                self.buffer.extend(items)
                if clears is not None and self.owner == outer.party_id:
                    self.clears.extend(clears)
                self.next_index += CHUNK
            outer.offline_seconds += time.perf_counter() - t0

        def take(self, n: int) -> list:
            out, _ = self.take_with_clears(n)
            return out

        def take_with_clears(self, n: int):
            if self.limit is not None and self.consumed + n > self.limit:
                raise PreprocessingExhausted(
                    f"out of {self.kind}: budget {self.limit}, asked for {self.consumed + n}"
                )
            self._refill(n)
            out = self.buffer[:n]
            del self.buffer[:n]
            clears = None
            if self.clears is not None and self.owner == self.outer.party_id:
                clears = self.clears[:n]
                del self.clears[:n]
            self.consumed += n
            return out, clears

    def __init__(
        self,
        field: PrimeField,
        n_parties: int,
        params: FixedPointParams,
        seed: int,
        party_id: int,
        budget: Budget | None = None,
    ):
        self.rand = DealerRandomness(field, n_parties, params, seed)
        self.field = field
        self.party_id = party_id
        self.n_parties = n_parties
        self.alpha_share = self.rand.alpha_shares[party_id]
        self.offline_seconds = 0.0
        self.triples = self._StreamPool(self, "triples")
        self.squares = self._StreamPool(self, "squares")
        self.trunc_pairs = self._StreamPool(self, "trunc_pairs")
        self.bits = self._StreamPool(self, "bits")
        self.masks = {o: self._StreamPool(self, "masks", owner=o) for o in range(n_parties)}
        if budget is not None:
            for kind in KINDS:
                getattr(self, kind).limit = getattr(budget, kind)
            for owner, pool in self.masks.items():
                pool.limit = budget.masks.get(owner, 0)

    def pool(self, kind: str):
        return getattr(self, kind)

    def take_masks(self, owner: int, n: int):
        return self.masks[owner].take_with_clears(n)


def write_party_file(path: str | Path, mat: PartyMaterial, budget: Budget) -> None:
    field = mat.field
    w = field.byte_length
    mod_bytes = field.p.to_bytes((field.p.bit_length() + 7) // 8, "little")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<HHHH", VERSION, mat.party_id, mat.n_parties, len(mod_bytes))
    out += mod_bytes
    out += mat.alpha_share.to_bytes(w, "little")
    out += struct.pack(
        "<QQQQ", budget.triples, budget.squares, budget.trunc_pairs, budget.bits
    )
    for owner in range(mat.n_parties):
        out += struct.pack("<Q", budget.masks.get(owner, 0))

    def put_share(s: AuthShare):
        out.extend(s.value.to_bytes(w, "little"))
        out.extend(s.mac.to_bytes(w, "little"))

    for a, b, c in mat.triples.items:
        put_share(a), put_share(b), put_share(c)
    for r, r2 in mat.squares.items:
        put_share(r), put_share(r2)
    for rf, rt in mat.trunc_pairs.items:
        put_share(rf), put_share(rt)
    for b in mat.bits.items:
        put_share(b)
    for owner in range(mat.n_parties):
        pool = mat.masks.get(owner)
        if pool is None:
            continue
        for i, r in enumerate(pool.items):
            put_share(r)
            if owner == mat.party_id:
                out.extend(pool.clears[i].to_bytes(w, "little"))
    Path(path).write_bytes(bytes(out))


def read_party_file(path: str | Path) -> PartyMaterial:
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise ConfigurationError(f"{path}: not a preprocessing file")
    version, party_id, n_parties, mod_len = struct.unpack_from("<HHHH", buf, 4)
    if version != VERSION:
        raise ConfigurationError(f"{path}: unsupported version {version}")
    off = 12
    p = int.from_bytes(buf[off : off + mod_len], "little")
    off += mod_len
    field = PrimeField(p)
    w = field.byte_length
    alpha_share = int.from_bytes(buf[off : off + w], "little")
    off += w
    counts = dict(zip(KINDS, struct.unpack_from("<QQQQ", buf, off)))
    off += 32
    mask_counts = struct.unpack_from(f"<{n_parties}Q", buf, off)
    off += 8 * n_parties

    def get_share():
        nonlocal off
        v = int.from_bytes(buf[off : off + w], "little")
        m = int.from_bytes(buf[off + w : off + 2 * w], "little")
        off += 2 * w
        return AuthShare(field, v, m)

    triples = [(get_share(), get_share(), get_share()) for _ in range(counts["triples"])]
    squares = [(get_share(), get_share()) for _ in range(counts["squares"])]
    truncs = [(get_share(), get_share()) for _ in range(counts["trunc_pairs"])]
    bits = [get_share() for _ in range(counts["bits"])]
    masks = {}
    for owner in range(n_parties):
        items = []
        clears = [] if owner == party_id else None
        for _ in range(mask_counts[owner]):
            items.append(get_share())
            if owner == party_id:
                clears.append(int.from_bytes(buf[off : off + w], "little"))
                off += w
        masks[owner] = Pool("masks", items, clears)
    if off != len(buf):
        raise ConfigurationError(f"{path}: trailing bytes")
    return PartyMaterial(
        party_id=party_id,
        n_parties=n_parties,
        field=field,
        alpha_share=alpha_share,
        triples=Pool("triples", triples),
        squares=Pool("squares", squares),
        trunc_pairs=Pool("trunc_pairs", truncs),
        bits=Pool("bits", bits),
        masks=masks,
    )
