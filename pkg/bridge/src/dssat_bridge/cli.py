"""Bridge entry point: speak protocol v1 on stdin/stdout.

    croprl-dssat-bridge --scenario florida [--map map.cfg] [--stub]
"""

from __future__ import annotations

import argparse
import sys

from .mapping import BridgeConfig, load_map_file
from .server import serve
from .simulator import load_simulator


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(prog="croprl-dssat-bridge")
    ap.add_argument("--scenario", default="florida", choices=["florida", "zaragoza"])
    ap.add_argument("--map", dest="map_path",
                    help="observation/action/reward map file")
    ap.add_argument("--stub", action="store_true",
                    help="serve the built-in stub simulator instead of gym-DSSAT")
    args = ap.parse_args(argv)
    cfg = load_map_file(args.map_path) if args.map_path else BridgeConfig(
        scenario=args.scenario)
    try:
        simulator = load_simulator(args.scenario, use_stub=args.stub)
    except RuntimeError as exc:
        print(f"bridge: {exc}", file=sys.stderr)
        sys.exit(3)
    try:
        serve(simulator, cfg, sys.stdin.buffer, sys.stdout.buffer)
    finally:
        simulator.close()


if __name__ == "__main__":
    main()
