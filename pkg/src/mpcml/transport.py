"""Transport and session layer for 2-4 parties.

Two interchangeable transports carry the same wire messages: an in-process
loopback (queue mesh, the default test harness) and a TCP full mesh with
length-prefixed frames.  The session layer adds the parameter handshake,
round-synchronized broadcasts, byte/round accounting, and a transcript
digest that must agree across transports given the same seeds.
"""

from __future__ import annotations

import hashlib
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass, field as dc_field
from enum import IntEnum

from .errors import ConfigurationError, ConnectionFailure, ProtocolError, SessionAbort


class MsgType(IntEnum):
    INPUT_BROADCAST = 1
    OPEN_BATCH = 2
    COMMIT = 3
    REVEAL = 4
    SYNC = 5
    ABORT = 6


SESSION_ID_LEN = 16
_HEADER = struct.Struct("<16sQB")  # session_id, round_index, msg_type


def encode_message(session_id: bytes, round_index: int, msg_type: int, payload: bytes) -> bytes:
    return _HEADER.pack(session_id, round_index, msg_type) + payload


def decode_message(frame: bytes) -> tuple[bytes, int, int, bytes]:
    if len(frame) < _HEADER.size:
        raise ProtocolError("short frame")
    session_id, round_index, msg_type = _HEADER.unpack_from(frame)
    return session_id, round_index, msg_type, frame[_HEADER.size :]


@dataclass
class PartyConfig:
    party_id: int
    n_parties: int
    endpoints: list[str] = dc_field(default_factory=list)
    session_id: bytes = b"\x00" * SESSION_ID_LEN
    connect_timeout: float = 10.0

    def __post_init__(self):
        if not 2 <= self.n_parties <= 4:
            raise ConfigurationError("supported party counts are 2..4")
        if not 0 <= self.party_id < self.n_parties:
            raise ConfigurationError("party_id out of range")
        if self.endpoints and len(self.endpoints) != self.n_parties:
            raise ConfigurationError("need one endpoint per party")
        if len(self.session_id) != SESSION_ID_LEN:
            raise ConfigurationError("session_id must be 16 bytes")


@dataclass
class NetStats:
    rounds: int = 0
    bytes_sent: dict = dc_field(default_factory=dict)
    bytes_received: dict = dc_field(default_factory=dict)
    online_seconds: float = 0.0

    def total_sent(self) -> int:
        return sum(self.bytes_sent.values())

    def total_received(self) -> int:
        return sum(self.bytes_received.values())


class LoopbackNetwork:
    """Queue mesh connecting n in-process parties."""

    def __init__(self, n_parties: int):
        self.n_parties = n_parties
        self.queues = {
            (src, dst): queue.Queue()
            for src in range(n_parties)
            for dst in range(n_parties)
            if src != dst
        }

    def transport(self, party_id: int) -> "LoopbackTransport":
        return LoopbackTransport(self, party_id)


class LoopbackTransport:
    def __init__(self, net: LoopbackNetwork, party_id: int):
        self.net = net
        self.party_id = party_id

    def send(self, peer: int, frame: bytes) -> None:
        self.net.queues[(self.party_id, peer)].put(frame)

    def recv(self, peer: int, timeout: float | None = None) -> bytes:
        try:
            return self.net.queues[(peer, self.party_id)].get(timeout=timeout)
        except queue.Empty:
            raise SessionAbort(f"timed out waiting for party {peer}")

    def close(self) -> None:
        pass


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise SessionAbort("peer closed connection")
        buf.extend(chunk)
    return bytes(buf)


class _SocketChannel:
    """One mesh link.  A writer thread drains an outbound queue so that
    simultaneous large sends on both sides cannot deadlock."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.outbox: queue.Queue = queue.Queue()
        self.failed = False
        self.writer = threading.Thread(target=self._drain, daemon=True)
        self.writer.start()

    def _drain(self):
        while True:
            frame = self.outbox.get()
            if frame is None:
                return
            try:
                self.sock.sendall(struct.pack("<I", len(frame)) + frame)
            except OSError:
                self.failed = True
                return

    def send(self, frame: bytes) -> None:
        if self.failed:
            raise SessionAbort("peer connection lost")
        self.outbox.put(frame)

    def recv(self, timeout: float | None = None) -> bytes:
        self.sock.settimeout(timeout)
        try:
            (length,) = struct.unpack("<I", _recv_exact(self.sock, 4))
            return _recv_exact(self.sock, length)
        except socket.timeout:
            raise SessionAbort("timed out waiting on socket")
        except OSError as e:
            raise SessionAbort(f"socket error: {e}")

    def close(self):
        self.outbox.put(None)
        try:
            self.sock.close()
        except OSError:
            pass


class TcpMeshTransport:
    """Full TCP mesh: party i listens on endpoints[i]; for each pair the
    higher-id party dials the lower-id listener."""

    def __init__(self, config: PartyConfig):
        self.config = config
        self.channels: dict[int, _SocketChannel] = {}

    @staticmethod
    def _parse(endpoint: str) -> tuple[str, int]:
        host, _, port = endpoint.rpartition(":")
        return host or "127.0.0.1", int(port)

    def connect(self) -> None:
        cfg = self.config
        me = cfg.party_id
        deadline = time.monotonic() + cfg.connect_timeout
        listener = None
        pending = {}
        try:
            if me < cfg.n_parties - 1:
                host, port = self._parse(cfg.endpoints[me])
                listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
                listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
                listener.bind((host, port))
                listener.listen(cfg.n_parties)
                listener.settimeout(cfg.connect_timeout)

            # Dial every lower-id party.
            for peer in range(me):
                host, port = self._parse(cfg.endpoints[peer])
                while True:
                    try:
                        sock = socket.create_connection((host, port), timeout=1.0)
                        break
                    except OSError:
                        if time.monotonic() > deadline:
                            raise ConnectionFailure(f"cannot reach party {peer} at {host}:{port}")
                        time.sleep(0.05)
                sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                sock.sendall(cfg.session_id + struct.pack("<H", me))
                pending[peer] = sock

            # Accept every higher-id party.
            for _ in range(me + 1, cfg.n_parties):
                try:
                    sock, _ = listener.accept()
                except socket.timeout:
                    raise ConnectionFailure("timed out waiting for incoming mesh links")
                sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                hello = _recv_exact(sock, SESSION_ID_LEN + 2)
                if hello[:SESSION_ID_LEN] != cfg.session_id:
                    raise ConnectionFailure("session id mismatch on incoming link")
                (peer,) = struct.unpack("<H", hello[SESSION_ID_LEN:])
                pending[peer] = sock
        except Exception:
            for sock in pending.values():
                sock.close()
            raise
        finally:
            if listener is not None:
                listener.close()

        self.channels = {peer: _SocketChannel(sock) for peer, sock in pending.items()}

    def send(self, peer: int, frame: bytes) -> None:
        self.channels[peer].send(frame)

    def recv(self, peer: int, timeout: float | None = None) -> bytes:
        return self.channels[peer].recv(timeout)

    def close(self) -> None:
        for ch in self.channels.values():
            ch.close()


class Session:
    """Round-synchronized broadcast layer over a connected transport."""

    def __init__(self, config: PartyConfig, transport, recv_timeout: float = 120.0):
        self.config = config
        self.transport = transport
        self.party_id = config.party_id
        self.n_parties = config.n_parties
        self.recv_timeout = recv_timeout
        self.round_index = 0
        self.stats = NetStats(
            bytes_sent={p: 0 for p in range(config.n_parties) if p != config.party_id},
            bytes_received={p: 0 for p in range(config.n_parties) if p != config.party_id},
        )
        self._transcript = hashlib.sha256()
        self.aborted = False

    def handshake(self, params_digest: bytes) -> None:
        """All parties must present the same parameter digest."""
        digests = self.broadcast_round(MsgType.SYNC, params_digest)
        if any(d != params_digest for d in digests):
            self.abort("parameter digest mismatch")
            raise ConnectionFailure("parameter digest mismatch between parties")

    def broadcast_round(self, msg_type: MsgType, payload: bytes) -> list[bytes]:
        """Send one payload to every peer; return all parties' payloads in
        party-id order (own payload included).  One round regardless of size."""
        if self.aborted:
            raise SessionAbort("session already aborted")
        rnd = self.round_index
        frame = encode_message(self.config.session_id, rnd, int(msg_type), payload)
        for peer in range(self.n_parties):
            if peer == self.party_id:
                continue
            self.transport.send(peer, frame)
            self.stats.bytes_sent[peer] += len(payload)

        payloads: list[bytes] = [b""] * self.n_parties
        payloads[self.party_id] = payload
        for peer in range(self.n_parties):
            if peer == self.party_id:
                continue
            raw = self.transport.recv(peer, timeout=self.recv_timeout)
            sid, peer_round, peer_type, peer_payload = decode_message(raw)
            if sid != self.config.session_id:
                raise ProtocolError("frame from a different session")
            if peer_type == MsgType.ABORT:
                self.aborted = True
                raise SessionAbort(f"party {peer} aborted: {peer_payload.decode(errors='replace')}")
            if peer_round != rnd:
                raise ProtocolError(f"round skew: expected {rnd}, got {peer_round} from {peer}")
            if peer_type != int(msg_type):
                raise ProtocolError(f"message type skew in round {rnd}")
            payloads[peer] = peer_payload
            self.stats.bytes_received[peer] += len(peer_payload)

        self.round_index += 1
        self.stats.rounds += 1
        h = self._transcript
        h.update(struct.pack("<QB", rnd, int(msg_type)))
        for pl in payloads:
            h.update(struct.pack("<I", len(pl)))
            h.update(pl)
        return payloads

    def transcript_digest(self) -> str:
        return self._transcript.hexdigest()

    def abort(self, reason: str = "") -> None:
        """Best-effort notification so peers do not hang on recv."""
        if self.aborted:
            return
        self.aborted = True
        frame = encode_message(
            self.config.session_id, self.round_index, int(MsgType.ABORT), reason.encode()
        )
        for peer in range(self.n_parties):
            if peer == self.party_id:
                continue
            try:
                self.transport.send(peer, frame)
            except Exception:
                pass

    def close(self) -> None:
        self.transport.close()


def params_digest(items: dict) -> bytes:
    """Canonical digest of the session parameters for the handshake."""
    blob = "\n".join(f"{k}={items[k]}" for k in sorted(items)).encode()
    return hashlib.sha256(blob).digest()
