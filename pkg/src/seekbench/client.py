"""TCP client for the simulator protocol.

Implements the same method surface as session.InProcessSim so policies and
the evaluation harness run identically over the wire or in process.  Also
provides the UDP odometry receiver.
"""

from __future__ import annotations

import socket
from dataclasses import is_dataclass

from .protocol import (
    MSG_ACTION, MSG_BUFFER, MSG_ERROR, MSG_EXPORT_MESH, MSG_FORCE,
    MSG_GET_OBS, MSG_INFO, MSG_MESH, MSG_OBS_HEADER, MSG_ODOM_SUB, MSG_OK,
    MSG_PING, MSG_RESET, MSG_SET_MODE, MSG_STEP,
    Message, ProtocolError, decode_json, decode_message, encode_json,
    encode_message, unpack_odometry,
)
from .session import arrays_from_obs, session_config_to_json


class TransportError(Exception):
    pass


class RemoteError(Exception):
    """Server-side error relayed over the wire."""

    def __init__(self, error: str, message: str):
        super().__init__(f"{error}: {message}")
        self.error = error
        self.message = message


class SimClient:
    def __init__(self, host: str = "127.0.0.1", port: int = 9000, timeout: float = 30.0):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as e:
            raise TransportError(f"cannot connect to {host}:{port}: {e}") from e
        self.host = host
        self.port = port
        self._buf = bytearray()
        self.session_id: str | None = None
        self.odom_port: int | None = None

    # -- framing ---------------------------------------------------------

    def _send(self, data: bytes):
        try:
            self._sock.sendall(data)
        except OSError as e:
            raise TransportError(str(e)) from e

    def _recv_msg(self) -> Message:
        while True:
            decoded = decode_message(bytes(self._buf))
            if decoded is not None:
                msg, consumed = decoded
                del self._buf[:consumed]
                return msg
            try:
                chunk = self._sock.recv(65536)
            except OSError as e:
                raise TransportError(str(e)) from e
            if not chunk:
                raise TransportError("connection closed by server")
            self._buf += chunk

    def _expect_ok(self) -> dict:
        msg = self._recv_msg()
        if msg.msg_type == MSG_ERROR:
            err = decode_json(msg)
            raise RemoteError(err.get("error", "error"), err.get("message", ""))
        if msg.msg_type != MSG_OK:
            raise ProtocolError(f"expected OK, got msg_type {msg.msg_type}")
        return decode_json(msg)

    def _rpc(self, msg_type: int, obj) -> dict:
        self._send(encode_json(msg_type, obj))
        return self._expect_ok()

    # -- commands ----------------------------------------------------------

    def ping(self) -> dict:
        return self._rpc(MSG_PING, {})

    def reset(self, cfg) -> dict:
        payload = session_config_to_json(cfg) if is_dataclass(cfg) else dict(cfg)
        info = self._rpc(MSG_RESET, payload)
        self.session_id = info.get("session_id")
        self.odom_port = info.get("odom_port")
        return info

    def act(self, action: int) -> dict:
        return self._rpc(MSG_ACTION, {"action": int(action)})

    def step(self, n_ticks: int, forward_force: float = 0.0, torque: float = 0.0) -> dict:
        mt = MSG_FORCE if (forward_force or torque) else MSG_STEP
        return self._rpc(mt, {
            "n_ticks": int(n_ticks),
            "forward_force": forward_force,
            "torque": torque,
        })

    def get_obs_raw(self, modalities) -> tuple[dict, list[bytes]]:
        self._send(encode_json(MSG_GET_OBS, {"modalities": list(modalities)}))
        msg = self._recv_msg()
        if msg.msg_type == MSG_ERROR:
            err = decode_json(msg)
            raise RemoteError(err.get("error", "error"), err.get("message", ""))
        if msg.msg_type != MSG_OBS_HEADER:
            raise ProtocolError(f"expected observation header, got msg_type {msg.msg_type}")
        header = decode_json(msg)
        buffers = []
        for _ in header["modalities"]:
            frame = self._recv_msg()
            if frame.msg_type != MSG_BUFFER:
                raise ProtocolError(f"expected buffer frame, got msg_type {frame.msg_type}")
            buffers.append(frame.payload)
        return header, buffers

    def get_obs(self, modalities=("depth", "seg", "pose")) -> dict:
        header, buffers = self.get_obs_raw(modalities)
        return arrays_from_obs(header, buffers)

    def set_mode(self, mode: str, noise: dict | None = None) -> dict:
        obj = {"mode": mode}
        if noise is not None:
            obj["noise"] = noise
        return self._rpc(MSG_SET_MODE, obj)

    def export_mesh(self, fmt: str = "ply") -> bytes:
        self._send(encode_json(MSG_EXPORT_MESH, {"format": fmt}))
        msg = self._recv_msg()
        if msg.msg_type == MSG_ERROR:
            err = decode_json(msg)
            raise RemoteError(err.get("error", "error"), err.get("message", ""))
        if msg.msg_type != MSG_MESH:
            raise ProtocolError(f"expected mesh frame, got msg_type {msg.msg_type}")
        return msg.payload

    def info(self, include_log: bool = False) -> dict:
        return self._rpc(MSG_INFO, {"include_log": include_log})

    def close(self):
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class OdometryReceiver:
    """UDP subscriber for a session's odometry datagrams (one 53-byte packet
    per datagram)."""

    def __init__(self, host: str, odom_port: int, session_id: str):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 1 << 20)
        self._sock.bind(("0.0.0.0" if host not in ("127.0.0.1", "localhost") else "127.0.0.1", 0))
        self._server = (host, odom_port)
        reg = encode_message(Message(MSG_ODOM_SUB, session_id.encode("utf-8")))
        self._sock.sendto(reg, self._server)

    def recv(self, timeout: float = 1.0) -> dict | None:
        self._sock.settimeout(timeout)
        try:
            data, _ = self._sock.recvfrom(2048)
        except socket.timeout:
            return None
        except OSError:
            return None
        return unpack_odometry(data)

    def recv_n(self, n: int, timeout: float = 5.0) -> list[dict]:
        out: list[dict] = []
        import time as _time
        deadline = _time.monotonic() + timeout
        while len(out) < n:
            remaining = deadline - _time.monotonic()
            if remaining <= 0:
                break
            pkt = self.recv(timeout=remaining)
            if pkt is not None:
                out.append(pkt)
        return out

    def close(self):
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
