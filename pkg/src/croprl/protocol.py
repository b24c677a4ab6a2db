"""Line protocol for attaching external crop simulators.

Version 1 speaks newline-delimited JSON over a byte stream (usually a child
process's stdin/stdout).  Strict request/response, no pipelining:

    client                          server
    ------                          ------
    {"kind":"hello","version":1} -> {"kind":"hello","version":1}
    {"kind":"reset","seed":42}   -> {"kind":"observation","values":[...25]}
    {"kind":"step","action":13}  -> {"kind":"outcome","observation":[...25],
                                     "reward":-152.8,"done":false,"info":{...}}
    {"kind":"bye"}               -> {"kind":"bye"}

Any request may be answered with {"kind":"error","message":"..."} instead.
Observation vectors always have exactly 25 entries.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from dataclasses import dataclass

import numpy as np

from .errors import HandshakeError, ProtocolError, SchemaError, SessionError
from .surrogate import OBS_DIM

PROTOCOL_VERSION = 1

KINDS = ("hello", "reset", "step", "observation", "outcome", "error", "bye")


@dataclass(frozen=True)
class EnvMessage:
    kind: str
    version: int | None = None
    seed: int | None = None
    action: int | None = None
    values: tuple[float, ...] | None = None
    reward: float | None = None
    done: bool | None = None
    info: tuple[tuple[str, float], ...] | None = None
    message: str | None = None

    @classmethod
    def hello(cls, version: int = PROTOCOL_VERSION) -> "EnvMessage":
        return cls(kind="hello", version=version)

    @classmethod
    def reset(cls, seed: int) -> "EnvMessage":
        return cls(kind="reset", seed=int(seed))

    @classmethod
    def step(cls, action: int) -> "EnvMessage":
        return cls(kind="step", action=int(action))

    @classmethod
    def observation(cls, values) -> "EnvMessage":
        return cls(kind="observation", values=tuple(float(v) for v in values))

    @classmethod
    def outcome(cls, observation, reward: float, done: bool, info: dict) -> "EnvMessage":
        return cls(kind="outcome", values=tuple(float(v) for v in observation),
                   reward=float(reward), done=bool(done),
                   info=tuple(sorted((str(k), float(v)) for k, v in info.items())))

    @classmethod
    def error(cls, message: str) -> "EnvMessage":
        return cls(kind="error", message=str(message))

    @classmethod
    def bye(cls) -> "EnvMessage":
        return cls(kind="bye")

    def info_dict(self) -> dict:
        return dict(self.info or ())


def encode(msg: EnvMessage) -> bytes:
    """One newline-terminated JSON record; decode(encode(m)) == m."""
    payload: dict = {"kind": msg.kind}
    if msg.version is not None:
        payload["version"] = msg.version
    if msg.seed is not None:
        payload["seed"] = msg.seed
    if msg.action is not None:
        payload["action"] = msg.action
    if msg.values is not None:
        key = "observation" if msg.kind == "outcome" else "values"
        payload[key] = list(msg.values)
    if msg.reward is not None:
        payload["reward"] = msg.reward
    if msg.done is not None:
        payload["done"] = msg.done
    if msg.info is not None:
        payload["info"] = dict(msg.info)
    if msg.message is not None:
        payload["message"] = msg.message
    return (json.dumps(payload, sort_keys=True) + "\n").encode("utf-8")


def _vector(payload: dict, key: str, line: str) -> tuple[float, ...]:
    raw = payload.get(key)
    if not isinstance(raw, list) or not all(isinstance(v, (int, float)) for v in raw):
        raise SchemaError(f"{key} must be a list of numbers: {line!r}")
    if len(raw) != OBS_DIM:
        raise SchemaError(f"{key} must have exactly {OBS_DIM} entries, got {len(raw)}")
    return tuple(float(v) for v in raw)


def decode(line: bytes | str) -> EnvMessage:
    """Parse one record; ProtocolError for garbage, SchemaError for bad content."""
    text = line.decode("utf-8", errors="replace") if isinstance(line, bytes) else line
    text = text.strip()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError:
        raise ProtocolError(f"not a JSON record: {text!r}")
    if not isinstance(payload, dict) or "kind" not in payload:
        raise ProtocolError(f"record has no kind field: {text!r}")
    kind = payload["kind"]
    if kind not in KINDS:
        raise ProtocolError(f"unknown message kind {kind!r}: {text!r}")
    if kind == "hello":
        version = payload.get("version")
        if not isinstance(version, int):
            raise SchemaError(f"hello needs an integer version: {text!r}")
        return EnvMessage.hello(version)
    if kind == "reset":
        seed = payload.get("seed")
        if not isinstance(seed, int):
            raise SchemaError(f"reset needs an integer seed: {text!r}")
        return EnvMessage.reset(seed)
    if kind == "step":
        action = payload.get("action")
        if not isinstance(action, int):
            raise SchemaError(f"step needs an integer action: {text!r}")
        return EnvMessage.step(action)
    if kind == "observation":
        return EnvMessage(kind="observation", values=_vector(payload, "values", text))
    if kind == "outcome":
        values = _vector(payload, "observation", text)
        reward = payload.get("reward")
        done = payload.get("done")
        info = payload.get("info", {})
        if not isinstance(reward, (int, float)) or not isinstance(done, bool):
            raise SchemaError(f"outcome needs numeric reward and boolean done: {text!r}")
        if not isinstance(info, dict) or not all(
                isinstance(v, (int, float)) for v in info.values()):
            raise SchemaError(f"outcome info must map strings to numbers: {text!r}")
        return EnvMessage(kind="outcome", values=values, reward=float(reward), done=done,
                          info=tuple(sorted((str(k), float(v)) for k, v in info.items())))
    if kind == "error":
        return EnvMessage.error(payload.get("message", ""))
    return EnvMessage.bye()


# ---------------------------------------------------------------------------
# Server side
# ---------------------------------------------------------------------------

def serve_environment(env, reader, writer) -> None:
    """Answer protocol requests with the given reset/step environment.

    ``reader``/``writer`` are binary file-like streams.  Runs until a bye
    message or EOF.  Environment faults become error replies, not crashes.
    """

    def send(msg: EnvMessage) -> None:
        writer.write(encode(msg))
        writer.flush()

    for line in reader:
        if not line.strip():
            continue
        try:
            msg = decode(line)
        except ProtocolError as exc:
            send(EnvMessage.error(f"protocol: {exc}"))
            continue
        try:
            if msg.kind == "hello":
                if msg.version != PROTOCOL_VERSION:
                    send(EnvMessage.error(f"unsupported protocol version {msg.version}"))
                else:
                    send(EnvMessage.hello())
            elif msg.kind == "reset":
                obs = env.reset(msg.seed)
                send(EnvMessage.observation(obs))
            elif msg.kind == "step":
                obs, reward, done, info = env.step(msg.action)
                numeric_info = {k: v for k, v in info.items() if isinstance(v, (int, float))}
                send(EnvMessage.outcome(obs, reward, done, numeric_info))
            elif msg.kind == "bye":
                send(EnvMessage.bye())
                return
            else:
                send(EnvMessage.error(f"unexpected client message kind {msg.kind!r}"))
        except Exception as exc:  # the peer must see a reply, not a dead pipe
            send(EnvMessage.error(f"{type(exc).__name__}: {exc}"))


# ---------------------------------------------------------------------------
# Client side
# ---------------------------------------------------------------------------

class _LineReader(threading.Thread):
    """Pumps lines from a stream into a queue; None marks EOF."""

    def __init__(self, stream) -> None:
        super().__init__(daemon=True)
        self.stream = stream
        self.lines: queue.Queue = queue.Queue()
        self.start()

    def run(self) -> None:
        try:
            for line in self.stream:
                self.lines.put(line)
        except (OSError, ValueError):
            pass
        self.lines.put(None)


class RemoteEnv:
    """Adapts a protocol peer to the same reset/step interface as the
    built-in environment.  One outstanding request at a time."""

    supports_state_access = False

    def __init__(self, command: list[str] | None = None, reader=None, writer=None,
                 timeout_s: float = 30.0) -> None:
        self.timeout_s = timeout_s
        self._proc = None
        if command is not None:
            self._proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0)
            reader, writer = self._proc.stdout, self._proc.stdin
        if reader is None or writer is None:
            raise SessionError("RemoteEnv needs either a command or reader/writer streams")
        self._writer = writer
        self._reader = _LineReader(reader)
        reply = self._request(EnvMessage.hello())
        if reply.kind != "hello":
            raise HandshakeError(f"peer answered hello with {reply.kind!r}")
        if reply.version != PROTOCOL_VERSION:
            raise HandshakeError(f"peer speaks version {reply.version}, "
                                 f"need {PROTOCOL_VERSION}")

    def _request(self, msg: EnvMessage) -> EnvMessage:
        try:
            self._writer.write(encode(msg))
            self._writer.flush()
        except (OSError, ValueError) as exc:
            raise SessionError(f"connection lost while sending: {exc}")
        try:
            line = self._reader.lines.get(timeout=self.timeout_s)
        except queue.Empty:
            raise SessionError(f"peer did not answer within {self.timeout_s} s")
        if line is None:
            raise SessionError("connection dropped by peer")
        reply = decode(line)
        if reply.kind == "error":
            raise SessionError(f"peer error: {reply.message}")
        return reply

    def reset(self, seed: int) -> np.ndarray:
        reply = self._request(EnvMessage.reset(seed))
        if reply.kind != "observation":
            raise SessionError(f"reset answered with {reply.kind!r}, expected observation")
        return np.array(reply.values, dtype=np.float64)

    def step(self, action: int) -> tuple[np.ndarray, float, bool, dict]:
        reply = self._request(EnvMessage.step(action))
        if reply.kind != "outcome":
            raise SessionError(f"step answered with {reply.kind!r}, expected outcome")
        return (np.array(reply.values, dtype=np.float64), reply.reward, reply.done,
                reply.info_dict())

    def close(self) -> None:
        try:
            self._request(EnvMessage.bye())
        except (SessionError, ProtocolError):
            pass
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            self._proc.wait(timeout=10)
