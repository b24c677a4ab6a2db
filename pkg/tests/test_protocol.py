"""Wire protocol: codec round-trips, serve loop, remote session adapter."""

import os
import subprocess
import sys
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from croprl import protocol
from croprl.errors import HandshakeError, ProtocolError, SchemaError, SessionError
from croprl.surrogate import OBS_DIM, ObservedEnv, florida_scenario

finite_floats = st.floats(allow_nan=False, allow_infinity=False,
                          min_value=-1e12, max_value=1e12)


# ---------------------------------------------------------------------------
# codec
# ---------------------------------------------------------------------------

def test_hello_round_trip():
    msg = protocol.EnvMessage.hello()
    line = protocol.encode(msg)
    assert line.endswith(b"\n")
    assert b"hello" in line and b"version" in line
    assert protocol.decode(line) == msg


def test_step_round_trip():
    msg = protocol.EnvMessage.step(13)
    assert protocol.decode(protocol.encode(msg)) == msg


def test_observation_round_trip_exact():
    values = np.random.default_rng(1).normal(size=OBS_DIM) * 1e3
    msg = protocol.EnvMessage.observation(values)
    back = protocol.decode(protocol.encode(msg))
    assert back.values == tuple(values)  # repr-based JSON floats are exact


def test_outcome_round_trip():
    obs = np.random.default_rng(2).normal(size=OBS_DIM)
    msg = protocol.EnvMessage.outcome(obs, reward=-152.8, done=False,
                                      info={"yield_kg_ha": 0.0, "et_mm": 3.25})
    back = protocol.decode(protocol.encode(msg))
    assert back == msg
    assert back.info_dict()["et_mm"] == 3.25


def test_decode_garbage_is_protocol_error():
    with pytest.raises(ProtocolError):
        protocol.decode(b"\x00\xff garbage \n")
    with pytest.raises(ProtocolError):
        protocol.decode(b"[1, 2, 3]\n")
    with pytest.raises(ProtocolError):
        protocol.decode(b'{"kind": "teleport"}\n')


def test_decode_wrong_vector_length_is_schema_error():
    line = protocol.encode(protocol.EnvMessage.observation(np.zeros(OBS_DIM)))
    short = line.replace(b"0.0, 0.0]", b"0.0]")
    with pytest.raises(SchemaError):
        protocol.decode(short)


def test_decode_missing_fields_is_schema_error():
    with pytest.raises(SchemaError):
        protocol.decode(b'{"kind": "reset"}\n')
    with pytest.raises(SchemaError):
        protocol.decode(b'{"kind": "step", "action": "lots"}\n')
    with pytest.raises(SchemaError):
        protocol.decode(b'{"kind": "hello"}\n')


@settings(max_examples=200, deadline=None)
@given(st.one_of(
    st.builds(protocol.EnvMessage.hello, st.integers(0, 10)),
    st.builds(protocol.EnvMessage.reset, st.integers(0, 2**62)),
    st.builds(protocol.EnvMessage.step, st.integers(0, 24)),
    st.builds(protocol.EnvMessage.observation,
              st.lists(finite_floats, min_size=OBS_DIM, max_size=OBS_DIM)),
    st.builds(protocol.EnvMessage.outcome,
              st.lists(finite_floats, min_size=OBS_DIM, max_size=OBS_DIM),
              finite_floats, st.booleans(),
              st.dictionaries(st.text(st.characters(codec="ascii",
                                                    exclude_characters='"\\'),
                                      min_size=1, max_size=8),
                              finite_floats, max_size=4)),
    st.builds(protocol.EnvMessage.error, st.text(max_size=64)),
    st.builds(protocol.EnvMessage.bye),
))
def test_fuzz_round_trip_identity(msg):
    assert protocol.decode(protocol.encode(msg)) == msg


# ---------------------------------------------------------------------------
# serve + remote session over an in-process pipe pair
# ---------------------------------------------------------------------------

def pipe_session(env):
    """Serve ``env`` on a background thread; return a connected RemoteEnv."""
    c2s_r, c2s_w = os.pipe()
    s2c_r, s2c_w = os.pipe()
    server_reader = os.fdopen(c2s_r, "rb")
    server_writer = os.fdopen(s2c_w, "wb")
    thread = threading.Thread(
        target=protocol.serve_environment, args=(env, server_reader, server_writer),
        daemon=True)
    thread.start()
    client = protocol.RemoteEnv(reader=os.fdopen(s2c_r, "rb"),
                                writer=os.fdopen(c2s_w, "wb"), timeout_s=10.0)
    return client, thread


def test_loopback_trajectories_identical_to_direct():
    direct = ObservedEnv(florida_scenario())
    remote, thread = pipe_session(ObservedEnv(florida_scenario()))
    actions = np.random.default_rng(3).integers(0, 25, size=200)
    obs_d = direct.reset(77)
    obs_r = remote.reset(77)
    assert np.array_equal(obs_d, obs_r)
    for a in actions:
        od, rd, dd, infod = direct.step(int(a))
        orr, rr, dr, infor = remote.step(int(a))
        assert np.array_equal(od, orr)
        assert rd == rr
        assert dd == dr
        assert infod["yield_kg_ha"] == infor["yield_kg_ha"]
        if dd:
            break
    remote.close()
    thread.join(timeout=5)
    assert not thread.is_alive()


def test_remote_env_reset_after_episode():
    remote, thread = pipe_session(ObservedEnv(florida_scenario()))
    a = remote.reset(5)
    b = remote.reset(5)
    assert np.array_equal(a, b)
    remote.close()


def test_peer_error_becomes_session_error():
    class BrokenEnv:
        def reset(self, seed):
            raise RuntimeError("simulated crop failure")

        def step(self, action):
            raise RuntimeError("nope")

    remote, thread = pipe_session(BrokenEnv())
    with pytest.raises(SessionError, match="simulated crop failure"):
        remote.reset(1)
    remote.close()


def test_version_mismatch_handshake_error():
    c2s_r, c2s_w = os.pipe()
    s2c_r, s2c_w = os.pipe()

    def bad_server():
        reader = os.fdopen(c2s_r, "rb")
        writer = os.fdopen(s2c_w, "wb")
        reader.readline()
        writer.write(protocol.encode(protocol.EnvMessage.hello(version=2)))
        writer.flush()

    threading.Thread(target=bad_server, daemon=True).start()
    with pytest.raises(HandshakeError):
        protocol.RemoteEnv(reader=os.fdopen(s2c_r, "rb"),
                           writer=os.fdopen(c2s_w, "wb"), timeout_s=5.0)


def test_dropped_connection_is_session_error():
    c2s_r, c2s_w = os.pipe()
    s2c_r, s2c_w = os.pipe()

    def dying_server():
        reader = os.fdopen(c2s_r, "rb")
        writer = os.fdopen(s2c_w, "wb")
        reader.readline()
        writer.write(protocol.encode(protocol.EnvMessage.hello()))
        writer.flush()
        reader.readline()  # swallow the reset, then die
        writer.close()

    threading.Thread(target=dying_server, daemon=True).start()
    remote = protocol.RemoteEnv(reader=os.fdopen(s2c_r, "rb"),
                                writer=os.fdopen(c2s_w, "wb"), timeout_s=5.0)
    with pytest.raises(SessionError):
        remote.reset(1)


def test_timeout_is_session_error():
    c2s_r, c2s_w = os.pipe()
    s2c_r, s2c_w = os.pipe()

    def silent_server():
        reader = os.fdopen(c2s_r, "rb")
        writer = os.fdopen(s2c_w, "wb")
        reader.readline()
        writer.write(protocol.encode(protocol.EnvMessage.hello()))
        writer.flush()
        reader.readline()  # never answer the reset
        threading.Event().wait()  # hold the pipe open so the client times out

    threading.Thread(target=silent_server, daemon=True).start()
    remote = protocol.RemoteEnv(reader=os.fdopen(s2c_r, "rb"),
                                writer=os.fdopen(c2s_w, "wb"), timeout_s=0.2)
    with pytest.raises(SessionError, match="did not answer"):
        remote.reset(1)


def test_server_answers_error_for_malformed_line_and_continues():
    c2s_r, c2s_w = os.pipe()
    s2c_r, s2c_w = os.pipe()
    env = ObservedEnv(florida_scenario())
    threading.Thread(target=protocol.serve_environment,
                     args=(env, os.fdopen(c2s_r, "rb"), os.fdopen(s2c_w, "wb")),
                     daemon=True).start()
    writer = os.fdopen(c2s_w, "wb")
    reader = os.fdopen(s2c_r, "rb")
    writer.write(b"not json at all\n")
    writer.flush()
    reply = protocol.decode(reader.readline())
    assert reply.kind == "error"
    writer.write(protocol.encode(protocol.EnvMessage.hello()))
    writer.flush()
    assert protocol.decode(reader.readline()).kind == "hello"


def test_subprocess_protocol_serve_cli():
    proc_cmd = [sys.executable, "-m", "croprl", "protocol-serve",
                "--config", "default:florida"]
    remote = protocol.RemoteEnv(command=proc_cmd, timeout_s=30.0)
    direct = ObservedEnv(florida_scenario())
    obs_r = remote.reset(9)
    obs_d = direct.reset(9)
    assert np.array_equal(obs_r, obs_d)
    for a in (0, 13, 24):
        orr, rr, dr, _ = remote.step(a)
        od, rd, dd, _ = direct.step(a)
        assert np.array_equal(orr, od)
        assert rr == rd
    remote.close()
