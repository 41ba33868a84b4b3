"""Run one protocol program as n cooperating parties.

The default harness keeps every party in-process on its own thread with
loopback queues; the same program runs unchanged over TCP sockets (used by
benchmarks and the transport-equivalence tests).  A program is a callable
taking a PartyContext; whatever it returns is collected per party.
"""

from __future__ import annotations

import socket
import threading
import time
from dataclasses import dataclass
from typing import Callable

from .engine import SpdzEngine, derive_session_id
from .errors import ConfigurationError
from .fields import PrimeField
from .fixedpoint import FixedPointParams
from .preprocessing import Budget, Dealer, StreamingMaterial, read_party_file
from .secure_ops import FixedOps
from .transport import LoopbackNetwork, PartyConfig, Session, TcpMeshTransport, params_digest


@dataclass
class PartyContext:
    party_id: int
    n_parties: int
    session: Session
    engine: SpdzEngine
    ops: FixedOps


@dataclass
class PartyOutcome:
    party_id: int
    value: object = None
    error: BaseException | None = None
    rounds: int = 0
    bytes_sent: int = 0
    bytes_received: int = 0
    consumed: Budget | None = None
    transcript: str = ""
    online_seconds: float = 0.0
    offline_seconds: float = 0.0


def free_ports(n: int) -> list[int]:
    """Reserve n ephemeral localhost ports (best effort)."""
    socks, ports = [], []
    for _ in range(n):
        s = socket.socket()
        s.bind(("127.0.0.1", 0))
        socks.append(s)
        ports.append(s.getsockname()[1])
    for s in socks:
        s.close()
    return ports


def run_parties(
    program: Callable[[PartyContext], object],
    n_parties: int,
    field: PrimeField,
    params: FixedPointParams,
    seed: int,
    budget: Budget | None = None,
    dealer_mode: str = "pregen",
    material_dir=None,
    transport: str = "loopback",
    endpoints: list[str] | None = None,
    check_interval: int = 10_000,
    program_tag: str = "",
    recv_timeout: float = 120.0,
    raise_errors: bool = True,
) -> list[PartyOutcome]:
    """Execute `program` for all parties and join.

    dealer_mode: "pregen" (dealer materializes `budget` up front),
    "stream" (on-demand chunks, budget optional as a hard limit), or
    "files" (read per-party .mpml files from material_dir).
    """
    if not 2 <= n_parties <= 4:
        raise ConfigurationError("supported party counts are 2..4")
    session_id = derive_session_id(seed, program_tag)
    digest = params_digest(
        {
            "modulus": field.p,
            "f": params.f,
            "k": params.k,
            "s": params.s,
            "n_parties": n_parties,
            "program": program_tag,
            "seed": seed,
        }
    )

    offline = [0.0] * n_parties
    if dealer_mode == "pregen":
        if budget is None:
            raise ConfigurationError("pregen dealer mode needs a budget")
        dealer = Dealer(field, n_parties, params, seed)
        materials = dealer.generate(budget)
        offline = [dealer.offline_seconds] * n_parties
    elif dealer_mode == "stream":
        materials = [
            StreamingMaterial(field, n_parties, params, seed, pid, budget)
            for pid in range(n_parties)
        ]
    elif dealer_mode == "files":
        materials = [read_party_file(f"{material_dir}/party{pid}.mpml") for pid in range(n_parties)]
    else:
        raise ConfigurationError(f"unknown dealer mode {dealer_mode!r}")

    if transport == "loopback":
        net = LoopbackNetwork(n_parties)
        transports = [net.transport(pid) for pid in range(n_parties)]
        configs = [
            PartyConfig(party_id=pid, n_parties=n_parties, session_id=session_id)
            for pid in range(n_parties)
        ]
    elif transport == "tcp":
        if endpoints is None:
            endpoints = [f"127.0.0.1:{port}" for port in free_ports(n_parties)]
        configs = [
            PartyConfig(
                party_id=pid, n_parties=n_parties, endpoints=endpoints, session_id=session_id
            )
            for pid in range(n_parties)
        ]
        transports = [TcpMeshTransport(cfg) for cfg in configs]
    else:
        raise ConfigurationError(f"unknown transport {transport!r}")

    outcomes = [PartyOutcome(party_id=pid) for pid in range(n_parties)]

    def party_main(pid: int):
        out = outcomes[pid]
        session = None
        try:
            if transport == "tcp":
                transports[pid].connect()
            session = Session(configs[pid], transports[pid], recv_timeout=recv_timeout)
            session.handshake(digest)
            engine = SpdzEngine(session, materials[pid], field, check_interval=check_interval)
            ops = FixedOps(engine, params)
            ctx = PartyContext(pid, n_parties, session, engine, ops)
            t0 = time.perf_counter()
            out.value = program(ctx)
            out.online_seconds = time.perf_counter() - t0
            out.rounds = session.stats.rounds
            out.bytes_sent = session.stats.total_sent()
            out.bytes_received = session.stats.total_received()
            out.consumed = engine.consumed()
            out.transcript = session.transcript_digest()
            out.offline_seconds = offline[pid] + getattr(
                materials[pid], "offline_seconds", 0.0
            )
            if hasattr(materials[pid], "offline_seconds"):
                out.online_seconds -= materials[pid].offline_seconds
        except BaseException as exc:  # propagate to the joiner
            out.error = exc
            if session is not None:
                session.abort(str(exc))
        finally:
            if session is not None:
                session.close()

    threads = [
        threading.Thread(target=party_main, args=(pid,), name=f"party{pid}", daemon=True)
        for pid in range(n_parties)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    if raise_errors:
        for out in outcomes:
            if out.error is not None:
                raise out.error
    return outcomes
