"""Wire protocol: length-prefixed frames, JSON command payloads, raw image
buffers, and the fixed-layout odometry packet.

Frame layout (little-endian throughout):

    length:   u32  — payload byte count (excludes this 5-byte prefix)
    msg_type: u8   — one of the registered ids below
    payload:  `length` bytes — UTF-8 JSON or raw buffer bytes

Odometry packet layout (53 bytes, little-endian):

    tick u64 | pos_x f64 | pos_y f64 | yaw f64 |
    vel_x f32 | vel_y f32 | accel_x f32 | accel_y f32 | angular_rate f32 |
    collision u8
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

# Command frames (client -> server)
MSG_RESET = 1
MSG_ACTION = 2
MSG_FORCE = 3
MSG_STEP = 4
MSG_GET_OBS = 5
MSG_SET_MODE = 6
MSG_EXPORT_MESH = 7
MSG_INFO = 8
MSG_PING = 9

# Response frames (server -> client)
MSG_OK = 16
MSG_ERROR = 17
MSG_OBS_HEADER = 18
MSG_BUFFER = 19
MSG_MESH = 20

# Odometry channel registration (client -> server datagram/stream)
MSG_ODOM_SUB = 32

REGISTERED_TYPES = frozenset({
    MSG_RESET, MSG_ACTION, MSG_FORCE, MSG_STEP, MSG_GET_OBS, MSG_SET_MODE,
    MSG_EXPORT_MESH, MSG_INFO, MSG_PING,
    MSG_OK, MSG_ERROR, MSG_OBS_HEADER, MSG_BUFFER, MSG_MESH,
    MSG_ODOM_SUB,
})

_HEADER = struct.Struct("<IB")
HEADER_SIZE = _HEADER.size  # 5

ODOMETRY_STRUCT = struct.Struct("<QdddfffffB")
ODOMETRY_PACKET_SIZE = ODOMETRY_STRUCT.size  # 53

# Hard cap on declared payload size; anything larger is treated as a
# protocol violation rather than an allocation request.
MAX_PAYLOAD = 64 * 1024 * 1024


class ProtocolError(Exception):
    pass


@dataclass(frozen=True)
class Message:
    msg_type: int
    payload: bytes = b""


def encode_message(msg: Message) -> bytes:
    if msg.msg_type not in REGISTERED_TYPES:
        raise ProtocolError(f"unregistered msg_type {msg.msg_type}")
    if len(msg.payload) > MAX_PAYLOAD:
        raise ProtocolError("payload too large")
    return _HEADER.pack(len(msg.payload), msg.msg_type) + msg.payload


def decode_message(buf: bytes):
    """Decode one frame from the head of ``buf``.

    Returns (Message, bytes_consumed), or None when more bytes are needed
    (truncated frame).  Raises ProtocolError on an unregistered type or an
    oversized declared length.
    """
    if len(buf) < HEADER_SIZE:
        return None
    length, msg_type = _HEADER.unpack_from(buf, 0)
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"declared payload of {length} bytes exceeds limit")
    if msg_type not in REGISTERED_TYPES:
        raise ProtocolError(f"unregistered msg_type {msg_type}")
    end = HEADER_SIZE + length
    if len(buf) < end:
        return None
    return Message(msg_type, bytes(buf[HEADER_SIZE:end])), end


def encode_json(msg_type: int, obj) -> bytes:
    return encode_message(Message(msg_type, json.dumps(obj, separators=(",", ":")).encode("utf-8")))


def decode_json(msg: Message):
    try:
        return json.loads(msg.payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError(f"malformed JSON payload: {e}") from e


def pack_odometry(tick: int, position, yaw: float, velocity, acceleration,
                  angular_rate: float, collision: bool) -> bytes:
    return ODOMETRY_STRUCT.pack(
        tick, position[0], position[1], yaw,
        velocity[0], velocity[1], acceleration[0], acceleration[1],
        angular_rate, 1 if collision else 0,
    )


def unpack_odometry(buf: bytes) -> dict:
    if len(buf) != ODOMETRY_PACKET_SIZE:
        raise ProtocolError(f"odometry packet must be {ODOMETRY_PACKET_SIZE} bytes, got {len(buf)}")
    (tick, px, py, yaw, vx, vy, ax, ay, w, coll) = ODOMETRY_STRUCT.unpack(buf)
    return {
        "tick": tick,
        "position": (px, py),
        "yaw": yaw,
        "velocity": (vx, vy),
        "acceleration": (ax, ay),
        "angular_rate": w,
        "collision": bool(coll),
    }
