import pytest

from mpcml.errors import ConfigurationError, ConnectionFailure, SessionAbort
from mpcml.fixedpoint import FixedPointParams
from mpcml.fields import PrimeField, choose_prime
from mpcml.preprocessing import Budget
from mpcml.runner import free_ports, run_parties
from mpcml.transport import (
    LoopbackNetwork,
    MsgType,
    PartyConfig,
    Session,
    decode_message,
    encode_message,
    params_digest,
)

PARAMS = FixedPointParams(f=16, k=32, s=40)
FIELD = PrimeField(choose_prime(PARAMS.min_field_bits()))


def _sessions(n):
    net = LoopbackNetwork(n)
    sid = b"s" * 16
    return [
        Session(PartyConfig(party_id=i, n_parties=n, session_id=sid), net.transport(i))
        for i in range(n)
    ]


def _run_threads(fns):
    import threading

    errs = []

    def wrap(fn):
        try:
            fn()
        except BaseException as e:  # pragma: no cover - surfaced below
            errs.append(e)

    ts = [threading.Thread(target=wrap, args=(fn,)) for fn in fns]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    if errs:
        raise errs[0]


def test_wire_message_roundtrip():
    frame = encode_message(b"x" * 16, 7, int(MsgType.OPEN_BATCH), b"payload")
    sid, rnd, typ, payload = decode_message(frame)
    assert (sid, rnd, typ, payload) == (b"x" * 16, 7, MsgType.OPEN_BATCH, b"payload")


def test_party_config_validation():
    with pytest.raises(ConfigurationError):
        PartyConfig(party_id=0, n_parties=5)
    with pytest.raises(ConfigurationError):
        PartyConfig(party_id=3, n_parties=2)
    with pytest.raises(ConfigurationError):
        PartyConfig(party_id=0, n_parties=2, endpoints=["a:1"])


def test_broadcast_round_counts_once_for_any_size():
    s0, s1 = _sessions(2)
    results = {}

    def party(s, payload):
        def go():
            results[s.party_id] = s.broadcast_round(MsgType.OPEN_BATCH, payload)
            s.broadcast_round(MsgType.OPEN_BATCH, b"tiny")

        return go

    big = bytes(10_000 * 8)
    _run_threads([party(s0, big), party(s1, b"\x01" * 8)])
    assert results[0] == [big, b"\x01" * 8]
    assert results[1] == [big, b"\x01" * 8]
    assert s0.stats.rounds == 2 and s1.stats.rounds == 2
    assert s0.stats.bytes_sent[1] == len(big) + 4
    assert s0.stats.bytes_received[1] == 8 + 4


def test_round_skew_detected():
    s0, s1 = _sessions(2)

    def p0():
        s0.broadcast_round(MsgType.SYNC, b"")
        s0.broadcast_round(MsgType.SYNC, b"")

    def p1():
        # second call arrives with round_index 1 while p0 expects... manual skew:
        s1.round_index = 1
        with pytest.raises(Exception):
            s1.broadcast_round(MsgType.SYNC, b"")

    with pytest.raises(Exception):
        _run_threads([p0, p1])


def test_abort_surfaces_to_peer():
    s0, s1 = _sessions(2)

    def p0():
        with pytest.raises(SessionAbort):
            s0.broadcast_round(MsgType.OPEN_BATCH, b"x")

    def p1():
        s1.abort("deliberate")

    _run_threads([p0, p1])


def test_handshake_digest_mismatch():
    s0, s1 = _sessions(2)
    d0 = params_digest({"f": 13})
    d1 = params_digest({"f": 28})

    def p0():
        with pytest.raises((ConnectionFailure, SessionAbort)):
            s0.handshake(d0)

    def p1():
        with pytest.raises((ConnectionFailure, SessionAbort)):
            s1.handshake(d1)

    _run_threads([p0, p1])


def _echo_program(ctx):
    shares = ctx.ops.input_reals(0, [1.25, -2.5] if ctx.party_id == 0 else None, 2)
    vals = ctx.ops.open_reals(shares, check=True)
    return vals


def test_tcp_mesh_four_parties_link_count():
    outcomes = run_parties(
        _echo_program,
        n_parties=4,
        field=FIELD,
        params=PARAMS,
        seed=99,
        budget=Budget(masks={0: 2}),
        transport="tcp",
        program_tag="echo4",
    )
    assert all(o.value == [1.25, -2.5] for o in outcomes)


def test_loopback_and_tcp_transcripts_match():
    kw = dict(
        n_parties=2,
        field=FIELD,
        params=PARAMS,
        seed=123,
        budget=Budget(masks={0: 2}),
        program_tag="echo2",
    )
    a = run_parties(_echo_program, transport="loopback", **kw)
    b = run_parties(_echo_program, transport="tcp", **kw)
    assert [o.transcript for o in a] == [o.transcript for o in b]
    assert all(o.transcript == a[0].transcript for o in a)
    assert [o.value for o in a] == [o.value for o in b]


def test_opening_byte_symmetry():
    outcomes = run_parties(
        _echo_program,
        n_parties=2,
        field=FIELD,
        params=PARAMS,
        seed=5,
        budget=Budget(masks={0: 2}),
        program_tag="sym",
    )
    # Commit/reveal and open rounds carry fixed-width payloads both ways;
    # the input round is owner->others only, so compare totals shifted by it.
    sent0 = outcomes[0].bytes_sent
    sent1 = outcomes[1].bytes_sent
    assert sent0 - sent1 == 2 * FIELD.byte_length  # party 0 broadcast 2 inputs


def test_free_ports_unique():
    ports = free_ports(4)
    assert len(set(ports)) == 4
