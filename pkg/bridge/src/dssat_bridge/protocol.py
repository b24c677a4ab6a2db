"""Minimal encoder/decoder for protocol version 1 (newline-delimited JSON).

Implements the wire schema documented by the trainer framework:

    {"kind": "hello", "version": 1}
    {"kind": "reset", "seed": <int>}          -> {"kind": "observation", "values": [25 floats]}
    {"kind": "step", "action": <int 0..24>}   -> {"kind": "outcome", "observation": [...],
                                                  "reward": <float>, "done": <bool>,
                                                  "info": {<str>: <float>}}
    {"kind": "bye"}                           -> {"kind": "bye"}
    any request may be answered with {"kind": "error", "message": <str>}
"""

from __future__ import annotations

import json

PROTOCOL_VERSION = 1
OBS_DIM = 25


class BridgeProtocolError(RuntimeError):
    pass


def encode(payload: dict) -> bytes:
    return (json.dumps(payload, sort_keys=True) + "\n").encode("utf-8")


def hello() -> dict:
    return {"kind": "hello", "version": PROTOCOL_VERSION}


def observation(values) -> dict:
    values = [float(v) for v in values]
    if len(values) != OBS_DIM:
        raise BridgeProtocolError(f"observation must have {OBS_DIM} values")
    return {"kind": "observation", "values": values}


def outcome(values, reward: float, done: bool, info: dict) -> dict:
    values = [float(v) for v in values]
    if len(values) != OBS_DIM:
        raise BridgeProtocolError(f"outcome observation must have {OBS_DIM} values")
    return {"kind": "outcome", "observation": values, "reward": float(reward),
            "done": bool(done), "info": {str(k): float(v) for k, v in info.items()}}


def error(message: str) -> dict:
    return {"kind": "error", "message": str(message)}


def bye() -> dict:
    return {"kind": "bye"}


def decode_request(line: bytes | str) -> dict:
    text = line.decode("utf-8", errors="replace") if isinstance(line, bytes) else line
    try:
        payload = json.loads(text)
    except json.JSONDecodeError:
        raise BridgeProtocolError(f"not a JSON record: {text.strip()!r}")
    if not isinstance(payload, dict) or "kind" not in payload:
        raise BridgeProtocolError(f"record has no kind: {text.strip()!r}")
    kind = payload["kind"]
    if kind == "hello" and not isinstance(payload.get("version"), int):
        raise BridgeProtocolError("hello needs an integer version")
    if kind == "reset" and not isinstance(payload.get("seed"), int):
        raise BridgeProtocolError("reset needs an integer seed")
    if kind == "step" and not isinstance(payload.get("action"), int):
        raise BridgeProtocolError("step needs an integer action")
    return payload
