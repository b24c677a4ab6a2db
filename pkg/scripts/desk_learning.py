#!/usr/bin/env python3
"""Desk-scale learning experiment: multi-seed PPO vs the fixed calendar."""

import argparse
import tempfile
from pathlib import Path

from croprl.experiments import learning_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", help="artifact directory (default: temp)")
    ap.add_argument("--seeds", default="42,123,456,789,1024")
    ap.add_argument("--episodes", type=int, default=300)
    ap.add_argument("--scenario", default="florida")
    ap.add_argument("--workers", type=int, default=2)
    args = ap.parse_args()
    seeds = [int(s) for s in args.seeds.split(",")]
    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="desk-learning-"))
    result = learning_experiment(out, seeds, args.episodes, args.scenario, args.workers)
    print(result.summary())
    print(f"artifacts under {out}")


if __name__ == "__main__":
    main()
