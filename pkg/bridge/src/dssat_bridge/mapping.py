"""Observation/action mapping between a simulator and the 25-dim wire layout.

The map file is plain ``key = value`` text with ``#`` comments:

    # observation slots: slot index <- simulator observation key
    obs.0 = day
    obs.1 = temperature
    ...
    # reward weights
    reward.yield_per_kg = 0.158
    reward.nitrogen_per_kg = 0.79
    reward.irrigation_per_mm = 1.1
    reward.leaching_per_kg = 0.011

Unmapped slots are filled with 0.0 and flagged once at startup.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

OBS_DIM = 25

IRRIGATION_OPTIONS_MM = (0.0, 6.0, 12.0, 18.0, 24.0)
NITROGEN_OPTIONS_KG_HA = (0.0, 40.0, 80.0, 120.0, 160.0)

# the framework's documented default layout, by simulator observation key
DEFAULT_OBS_KEYS = (
    "day", "temperature", "rainfall", "solar_radiation", "soil_moisture",
    "soil_nitrogen", "biomass", "leaf_area_index", "cumulative_yield",
    "cumulative_irrigation", "cumulative_nitrogen", "temp_mean_7d",
    "rain_sum_7d", "solar_mean_7d", "days_since_irrigation",
    "days_since_nitrogen", "water_stress", "nitrogen_stress",
    "temperature_factor", "potential_growth", "drainage_prev",
    "cumulative_leached", "available_water_fraction", "reproductive_stage",
    "season_remaining",
)


@dataclass
class RewardWeights:
    yield_per_kg: float = 0.158
    nitrogen_per_kg: float = 0.79
    irrigation_per_mm: float = 1.1
    leaching_per_kg: float = 0.011


@dataclass
class BridgeConfig:
    scenario: str = "florida"
    obs_keys: tuple = DEFAULT_OBS_KEYS
    weights: RewardWeights = field(default_factory=RewardWeights)

    def action_to_amounts(self, action: int) -> tuple[float, float]:
        if not 0 <= action < len(IRRIGATION_OPTIONS_MM) * len(NITROGEN_OPTIONS_KG_HA):
            raise ValueError(f"action index {action} outside [0, 25)")
        i_level, n_level = divmod(action, len(NITROGEN_OPTIONS_KG_HA))
        return IRRIGATION_OPTIONS_MM[i_level], NITROGEN_OPTIONS_KG_HA[n_level]

    def observation_vector(self, obs: dict, warn_missing: set | None = None) -> list[float]:
        out = []
        for key in self.obs_keys:
            if key in obs:
                out.append(float(obs[key]))
            else:
                if warn_missing is not None and key not in warn_missing:
                    warn_missing.add(key)
                    print(f"bridge: simulator does not report {key!r}; filling with 0",
                          file=sys.stderr)
                out.append(0.0)
        return out

    def reward(self, applied_n: float, applied_w: float, leached: float,
               harvest_yield: float | None) -> float:
        w = self.weights
        r = (-w.nitrogen_per_kg * applied_n - w.irrigation_per_mm * applied_w
             - w.leaching_per_kg * leached)
        if harvest_yield is not None:
            r += w.yield_per_kg * harvest_yield
        return r


def parse_map_file(text: str) -> BridgeConfig:
    obs_keys = list(DEFAULT_OBS_KEYS)
    weights = RewardWeights()
    scenario = "florida"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"map file line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "scenario":
            scenario = value
        elif key.startswith("obs."):
            slot = int(key.split(".", 1)[1])
            if not 0 <= slot < OBS_DIM:
                raise ValueError(f"map file line {lineno}: slot {slot} outside [0, {OBS_DIM})")
            obs_keys[slot] = value
        elif key.startswith("reward."):
            name = key.split(".", 1)[1]
            if not hasattr(weights, name):
                raise ValueError(f"map file line {lineno}: unknown reward weight {name!r}")
            setattr(weights, name, float(value))
        else:
            raise ValueError(f"map file line {lineno}: unknown key {key!r}")
    return BridgeConfig(scenario=scenario, obs_keys=tuple(obs_keys), weights=weights)


def load_map_file(path) -> BridgeConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_map_file(f.read())
