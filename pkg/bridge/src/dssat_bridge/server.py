"""Request loop: answer protocol-v1 messages with a simulator's episodes.

Strict alternation (one response per request), observation vectors always
length 25, simulator faults reported as error replies rather than crashes.
"""

from __future__ import annotations

from . import protocol
from .mapping import BridgeConfig


def serve(simulator, cfg: BridgeConfig, reader, writer) -> None:
    missing_keys: set = set()
    episode_open = False

    def send(payload: dict) -> None:
        writer.write(protocol.encode(payload))
        writer.flush()

    for line in reader:
        if not line.strip():
            continue
        try:
            msg = protocol.decode_request(line)
        except protocol.BridgeProtocolError as exc:
            send(protocol.error(f"protocol: {exc}"))
            continue
        kind = msg["kind"]
        try:
            if kind == "hello":
                if msg["version"] != protocol.PROTOCOL_VERSION:
                    send(protocol.error(
                        f"unsupported protocol version {msg['version']}"))
                else:
                    send(protocol.hello())
            elif kind == "reset":
                obs = simulator.reset(msg["seed"])
                episode_open = True
                send(protocol.observation(cfg.observation_vector(obs, missing_keys)))
            elif kind == "step":
                if not episode_open:
                    send(protocol.error("step before reset"))
                    continue
                irrigation, nitrogen = cfg.action_to_amounts(msg["action"])
                obs, info, done = simulator.step(irrigation, nitrogen)
                leached = float(info.get("nitrate_leached_kg_ha", 0.0))
                harvest_yield = info.get("yield_kg_ha") if done else None
                reward = cfg.reward(nitrogen, irrigation, leached, harvest_yield)
                wire_info = {
                    "yield_kg_ha": float(info.get("yield_kg_ha",
                                                  obs.get("cumulative_yield", 0.0))),
                    "nitrate_leached_kg_ha": leached,
                    "nitrogen_applied_kg_ha": nitrogen,
                    "irrigation_applied_mm": irrigation,
                    "is_harvest": 1.0 if done else 0.0,
                }
                if done:
                    episode_open = False
                send(protocol.outcome(cfg.observation_vector(obs, missing_keys),
                                      reward, done, wire_info))
            elif kind == "bye":
                send(protocol.bye())
                return
            else:
                send(protocol.error(f"unexpected client message kind {kind!r}"))
        except Exception as exc:  # simulator faults become error replies
            episode_open = False
            send(protocol.error(f"{type(exc).__name__}: {exc}"))
