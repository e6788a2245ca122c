"""Network front-end.

One TCP connection = one isolated session (length-prefixed frames from
protocol.py).  Odometry goes out a separate UDP datagram socket to
subscribers that registered a session id, so command traffic never blocks
the broadcast; slow consumers simply drop datagrams.  A websocket endpoint
mirrors the same JSON commands with base64 buffer payloads for the browser
teleop client.
"""

from __future__ import annotations

import base64
import json
import socket
import threading
import time
import uuid

from .perception import CalibrationError, NoiseConfig
from .protocol import (
    MSG_ACTION, MSG_BUFFER, MSG_ERROR, MSG_EXPORT_MESH, MSG_FORCE,
    MSG_GET_OBS, MSG_INFO, MSG_MESH, MSG_OBS_HEADER, MSG_ODOM_SUB, MSG_OK,
    MSG_PING, MSG_RESET, MSG_SET_MODE, MSG_STEP,
    Message, ProtocolError, decode_json, decode_message, encode_json,
    encode_message,
)
from .session import SimSession, StateError, session_config_from_json
from .task import EpisodeFinishedError, PlacementError
from .worldgen import GenerationError, SceneFormatError

_REALTIME_PERIOD = 0.005  # 200 Hz

_SESSION_ERRORS = (
    StateError, EpisodeFinishedError, PlacementError, GenerationError,
    SceneFormatError, CalibrationError, ValueError, KeyError, TypeError,
)

DEFAULT_MODALITIES = ["color", "depth", "seg", "pose"]


class SimServer:
    """Threaded server: TCP commands, UDP odometry, optional websocket."""

    def __init__(self, host: str = "127.0.0.1", port: int = 9000,
                 odom_port: int = 9001, ws_port: int | None = None,
                 scene_dir: str | None = None, default_mode: str | None = None,
                 default_scene_seed: int | None = None):
        self.host = host
        self.scene_dir = scene_dir
        self.default_mode = default_mode
        self.default_scene_seed = default_scene_seed
        self._listener = socket.create_server((host, port), reuse_port=False)
        self.port = self._listener.getsockname()[1]
        self._odom_sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._odom_sock.bind((host, odom_port))
        self.odom_port = self._odom_sock.getsockname()[1]
        self._ws_sock = None
        self._ws_server = None
        self.ws_port = None
        if ws_port is not None:
            self._ws_sock = socket.create_server((host, ws_port))
            self.ws_port = self._ws_sock.getsockname()[1]
        self._subs: dict[str, set] = {}
        self._subs_lock = threading.Lock()
        self._running = threading.Event()
        self._threads: list[threading.Thread] = []
        self._conns: set = set()
        self._conns_lock = threading.Lock()

    # -- lifecycle -----------------------------------------------------

    def start(self):
        self._running.set()
        t1 = threading.Thread(target=self._accept_loop, name="sb-accept", daemon=True)
        t2 = threading.Thread(target=self._odom_loop, name="sb-odom", daemon=True)
        self._threads = [t1, t2]
        if self._ws_sock is not None:
            t3 = threading.Thread(target=self._ws_loop, name="sb-ws", daemon=True)
            self._threads.append(t3)
        for t in self._threads:
            t.start()
        return self

    def stop(self):
        self._running.clear()
        for sock in (self._listener, self._odom_sock):
            try:
                sock.close()
            except OSError:
                pass
        if self._ws_server is not None:
            self._ws_server.shutdown()
        with self._conns_lock:
            conns = list(self._conns)
        for c in conns:
            try:
                c.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                c.close()
            except OSError:
                pass
        for t in self._threads:
            t.join(timeout=2.0)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def serve_forever(self):
        self.start()
        try:
            while self._running.is_set():
                time.sleep(0.2)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    # -- TCP command channel --------------------------------------------

    def _accept_loop(self):
        while self._running.is_set():
            try:
                conn, _addr = self._listener.accept()
            except OSError:
                break
            with self._conns_lock:
                self._conns.add(conn)
            threading.Thread(target=self._serve_conn, args=(conn,), daemon=True).start()

    def _serve_conn(self, conn: socket.socket):
        session = SimSession(self.scene_dir)
        sid = uuid.uuid4().hex
        rt_stop: threading.Event | None = None
        buf = bytearray()
        try:
            while self._running.is_set():
                decoded = decode_message(bytes(buf))
                if decoded is None:
                    try:
                        chunk = conn.recv(65536)
                    except OSError:
                        break
                    if not chunk:
                        break
                    buf += chunk
                    continue
                msg, consumed = decoded
                del buf[:consumed]
                try:
                    rt_stop = self._handle(conn, session, sid, msg, rt_stop)
                except ProtocolError as e:
                    self._send(conn, encode_json(MSG_ERROR, {
                        "error": "ProtocolError", "message": str(e)}))
                    break
                except _SESSION_ERRORS as e:
                    self._send(conn, encode_json(MSG_ERROR, {
                        "error": type(e).__name__, "message": str(e)}))
        except ProtocolError:
            # undecodable frame header: nothing sane to reply to
            pass
        finally:
            if rt_stop is not None:
                rt_stop.set()
            with self._subs_lock:
                self._subs.pop(sid, None)
            with self._conns_lock:
                self._conns.discard(conn)
            try:
                conn.close()
            except OSError:
                pass

    def _send(self, conn, data: bytes):
        try:
            conn.sendall(data)
        except OSError:
            pass

    def _apply_defaults(self, obj: dict) -> dict:
        out = dict(obj)
        if self.default_mode is not None and "mode" not in out:
            out["mode"] = self.default_mode
        if self.default_scene_seed is not None and "scene_seed" not in out:
            out["scene_seed"] = self.default_scene_seed
        return out

    def _handle(self, conn, session: SimSession, sid: str, msg: Message,
                rt_stop: threading.Event | None):
        obj = decode_json(msg) if msg.payload else {}
        mt = msg.msg_type
        if mt == MSG_PING:
            self._send(conn, encode_json(MSG_OK, {"pong": True}))
        elif mt == MSG_RESET:
            cfg = session_config_from_json(self._apply_defaults(obj))
            info = session.reset(cfg)
            info["session_id"] = sid
            info["odom_port"] = self.odom_port
            if rt_stop is not None:
                rt_stop.set()
                rt_stop = None
            if not cfg.step_mode:
                rt_stop = threading.Event()
                threading.Thread(
                    target=self._rt_broadcast, args=(session, sid, rt_stop),
                    daemon=True,
                ).start()
            self._send(conn, encode_json(MSG_OK, info))
        elif mt == MSG_ACTION:
            receipt = session.action(int(obj["action"]))
            self._flush_odom(session, sid)
            self._send(conn, encode_json(MSG_OK, receipt))
        elif mt in (MSG_STEP, MSG_FORCE):
            res = session.step_ticks(
                int(obj.get("n_ticks", 1)),
                float(obj.get("forward_force", 0.0)),
                float(obj.get("torque", 0.0)),
            )
            self._flush_odom(session, sid)
            self._send(conn, encode_json(MSG_OK, res))
        elif mt == MSG_GET_OBS:
            header, buffers = session.get_obs(obj.get("modalities", DEFAULT_MODALITIES))
            self._send(conn, encode_json(MSG_OBS_HEADER, header))
            for b in buffers:
                self._send(conn, encode_message(Message(MSG_BUFFER, b)))
        elif mt == MSG_SET_MODE:
            noise = NoiseConfig(**obj["noise"]) if obj.get("noise") else None
            self._send(conn, encode_json(MSG_OK, session.set_mode(obj["mode"], noise)))
        elif mt == MSG_EXPORT_MESH:
            data = session.export_mesh(obj.get("format", "ply"))
            self._send(conn, encode_message(Message(MSG_MESH, data)))
        elif mt == MSG_INFO:
            self._send(conn, encode_json(MSG_OK, session.info(bool(obj.get("include_log")))))
        else:
            raise ProtocolError(f"msg_type {mt} is not a command")
        return rt_stop

    # -- odometry channel -----------------------------------------------

    def _odom_loop(self):
        while self._running.is_set():
            try:
                data, addr = self._odom_sock.recvfrom(4096)
            except OSError:
                break
            try:
                decoded = decode_message(data)
            except ProtocolError:
                continue
            if decoded is None:
                continue
            msg, _ = decoded
            if msg.msg_type == MSG_ODOM_SUB:
                sid = msg.payload.decode("utf-8", errors="replace")
                with self._subs_lock:
                    self._subs.setdefault(sid, set()).add(addr)

    def _flush_odom(self, session: SimSession, sid: str):
        packets = session.pop_odometry()
        if not packets:
            return
        with self._subs_lock:
            addrs = tuple(self._subs.get(sid, ()))
        for pkt in packets:
            for addr in addrs:
                try:
                    self._odom_sock.sendto(pkt, addr)
                except OSError:
                    pass

    def _rt_broadcast(self, session: SimSession, sid: str, stop: threading.Event):
        """Real-time mode: pace the latest snapshot at 200 Hz wall-clock."""
        next_t = time.monotonic()
        while not stop.is_set() and self._running.is_set():
            pkt = session.snapshot_packet()
            with self._subs_lock:
                addrs = tuple(self._subs.get(sid, ()))
            for addr in addrs:
                try:
                    self._odom_sock.sendto(pkt, addr)
                except OSError:
                    pass
            next_t += _REALTIME_PERIOD
            delay = next_t - time.monotonic()
            if delay > 0:
                stop.wait(delay)
            else:
                next_t = time.monotonic()

    # -- websocket mirror -------------------------------------------------

    def _ws_loop(self):
        from websockets.sync.server import serve
        with serve(self._ws_handler, sock=self._ws_sock) as server:
            self._ws_server = server
            server.serve_forever()

    def _ws_handler(self, websocket):
        from websockets.exceptions import ConnectionClosed

        session = SimSession(self.scene_dir)
        sid = uuid.uuid4().hex
        try:
            for raw in websocket:
                try:
                    req = json.loads(raw)
                    if not isinstance(req, dict):
                        raise ValueError("request must be a JSON object")
                    resp = self._ws_dispatch(session, sid, req)
                except json.JSONDecodeError as e:
                    # before _SESSION_ERRORS: JSONDecodeError is a ValueError
                    resp = {"type": "error", "error": "ProtocolError", "message": str(e)}
                except _SESSION_ERRORS as e:
                    resp = {"type": "error", "error": type(e).__name__, "message": str(e)}
                websocket.send(json.dumps(resp, separators=(",", ":")))
        except ConnectionClosed:
            pass  # client went away mid-exchange; nothing to answer

    def _ws_dispatch(self, session: SimSession, sid: str, req: dict) -> dict:
        cmd = req.get("cmd")
        if cmd == "ping":
            return {"type": "pong"}
        if cmd == "reset":
            cfg = session_config_from_json(self._apply_defaults(req.get("config") or {}))
            info = session.reset(cfg)
            info["session_id"] = sid
            return {"type": "reset", **info}
        if cmd == "action":
            receipt = session.action(int(req["action"]))
            session.pop_odometry()  # ws clients read pose from receipts
            return {"type": "receipt", **receipt}
        if cmd in ("step", "force"):
            res = session.step_ticks(
                int(req.get("n_ticks", 1)),
                float(req.get("forward_force", 0.0)),
                float(req.get("torque", 0.0)),
            )
            session.pop_odometry()
            return {"type": "step", **res}
        if cmd == "obs":
            header, buffers = session.get_obs(req.get("modalities", DEFAULT_MODALITIES))
            return {
                "type": "obs",
                "header": header,
                "buffers": [
                    {"name": m, "b64": base64.b64encode(b).decode("ascii")}
                    for m, b in zip(header["modalities"], buffers)
                ],
            }
        if cmd == "set_mode":
            noise = NoiseConfig(**req["noise"]) if req.get("noise") else None
            return {"type": "mode", **session.set_mode(req["mode"], noise)}
        if cmd == "info":
            return {"type": "info", **session.info(bool(req.get("include_log")))}
        raise ValueError(f"unknown command: {cmd!r}")
