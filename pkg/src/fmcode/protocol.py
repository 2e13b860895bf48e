"""Wire protocol: length-prefixed JSON envelopes over a stream.

Every request carries a protocol version and a client nonce; the
response echoes the nonce.  Signal payloads travel as decimal-text
trajectory blocks (`timestamp,x,y[,z]` rows) so numeric round trips are
exact.  The same envelope is also accepted over an HTTP POST bridge at
/rpc for browser clients; see docs/protocol.md for schemas and examples.
"""

from __future__ import annotations

import json
import socket
import struct

PROTOCOL_VERSION = 1
MAX_MESSAGE_BYTES = 32 * 1024 * 1024

OPS = ("register", "authenticate", "identify", "status")


class ProtocolError(Exception):
    pass


def make_request(op: str, nonce: str, payload: dict) -> dict:
    if op not in OPS:
        raise ProtocolError(f"unknown op {op!r}")
    return {"version": PROTOCOL_VERSION, "nonce": nonce, "op": op, "payload": payload}


def make_response(nonce: str, payload: dict) -> dict:
    return {"version": PROTOCOL_VERSION, "nonce": nonce, "status": "ok", "payload": payload}


def make_error(nonce: str, err_type: str, message: str, details=None) -> dict:
    return {
        "version": PROTOCOL_VERSION,
        "nonce": nonce,
        "status": "error",
        "error": {"type": err_type, "message": message, "details": details or []},
    }


def validate_request(msg: dict) -> None:
    if not isinstance(msg, dict):
        raise ProtocolError("request must be a JSON object")
    if msg.get("version") != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {msg.get('version')!r}")
    if not isinstance(msg.get("nonce"), str) or not msg["nonce"]:
        raise ProtocolError("missing client nonce")
    if msg.get("op") not in OPS:
        raise ProtocolError(f"unknown op {msg.get('op')!r}")
    if not isinstance(msg.get("payload"), dict):
        raise ProtocolError("missing payload object")


def send_message(sock: socket.socket, msg: dict) -> None:
    data = json.dumps(msg).encode("utf-8")
    sock.sendall(struct.pack(">I", len(data)) + data)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ProtocolError("connection closed mid-message")
        buf += chunk
    return buf


def recv_message(sock: socket.socket) -> dict:
    header = _recv_exact(sock, 4)
    (length,) = struct.unpack(">I", header)
    if length > MAX_MESSAGE_BYTES:
        raise ProtocolError(f"message of {length} bytes exceeds limit")
    return json.loads(_recv_exact(sock, length).decode("utf-8"))


def rpc(host: str, port: int, op: str, nonce: str, payload: dict, timeout: float = 600.0) -> dict:
    """One request/response exchange over a fresh connection."""
    with socket.create_connection((host, port), timeout=timeout) as sock:
        send_message(sock, make_request(op, nonce, payload))
        return recv_message(sock)
