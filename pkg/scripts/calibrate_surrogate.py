#!/usr/bin/env python3
"""Desk-scale calibration report for the surrogate environment.

Prints seasonal budgets under three reference strategies (do-nothing, the
fixed-management calendar, and a generous-input strategy) so the growth and
soil constants can be sanity-checked against the expected decision
structure: do-nothing < fixed management < well-managed.
"""

import argparse

import numpy as np

from croprl.surrogate import (
    ActionChoice, FixedManagementPolicy, ObservedEnv, scenario_by_name,
)


class ConstantPolicy:
    def __init__(self, index: int) -> None:
        self.index = index

    def action(self, obs, rng=None, deterministic=True) -> int:
        return self.index


class GenerousPolicy:
    """Irrigate 6 mm when the root zone is drying; split N over four dates."""

    def action(self, obs, rng=None, deterministic=True) -> int:
        day = int(round(obs[0]))
        i_level = 1 if obs[22] < 0.5 else 0
        n_level = 2 if day in (10, 30, 50, 70) else 0
        return i_level * 5 + n_level


def run(env, policy, seed):
    obs = env.reset(seed)
    done = False
    total = 0.0
    et_sum = drain_sum = 0.0
    stresses = []
    while not done:
        obs, r, done, info = env.step(policy.action(obs))
        total += r
        et_sum += info["et_mm"]
        drain_sum += info["drainage_mm"]
        stresses.append((obs[16], obs[17], obs[18]))
    s = np.array(stresses)
    return {
        "score": total,
        "yield": info["yield_kg_ha"],
        "biomass": obs[6],
        "irrigation": obs[9],
        "nitrogen": obs[10],
        "leached": obs[21],
        "et": et_sum,
        "drainage": drain_sum,
        "water_stress_mean": s[:, 0].mean(),
        "n_stress_mean": s[:, 1].mean(),
        "temp_factor_mean": s[:, 2].mean(),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scenario", default="florida")
    ap.add_argument("--seeds", default="42,123,456,789,1024")
    args = ap.parse_args()
    seeds = [int(s) for s in args.seeds.split(",")]
    scenario = scenario_by_name(args.scenario)
    policies = {
        "do-nothing": ConstantPolicy(0),
        "fixed-mgmt": FixedManagementPolicy(),
        "generous": GenerousPolicy(),
    }
    for name, policy in policies.items():
        rows = [run(ObservedEnv(scenario), policy, seed) for seed in seeds]
        mean = {k: float(np.mean([r[k] for r in rows])) for k in rows[0]}
        print(f"== {name} ({args.scenario}, {len(seeds)} seeds)")
        print(f"   score {mean['score']:9.2f}   yield {mean['yield']:9.1f}"
              f"   biomass {mean['biomass']:9.1f}")
        print(f"   irrigation {mean['irrigation']:7.1f} mm   nitrogen "
              f"{mean['nitrogen']:6.1f} kg/ha   leached {mean['leached']:7.2f} kg/ha")
        print(f"   ET {mean['et']:7.1f} mm   drainage {mean['drainage']:7.1f} mm")
        print(f"   stress means: water {mean['water_stress_mean']:.3f}"
              f"  nitrogen {mean['n_stress_mean']:.3f}"
              f"  temperature {mean['temp_factor_mean']:.3f}")


if __name__ == "__main__":
    main()
