"""Simulator adapters.

A simulator exposes::

    reset(seed) -> dict[str, float]      # observation by key
    step(irrigation_mm, nitrogen_kg_ha) -> (obs: dict, info: dict, done: bool)
    close()

``info`` must carry "nitrate_leached_kg_ha" and, on the harvest step,
"yield_kg_ha".  ``load_simulator`` picks the real gym-DSSAT wrapper when the
package is importable and falls back to an explicit error otherwise; the stub
exists so the bridge can be exercised without DSSAT installed.
"""

from __future__ import annotations

import math
import random


class StubCropSimulator:
    """Small deterministic stand-in with DSSAT-shaped observations.

    Not a crop model anyone should calibrate against; it exists to test the
    bridge plumbing (episode structure, key mapping, reward arithmetic).
    """

    SEASON = 200

    def __init__(self, scenario: str = "florida") -> None:
        self.scenario = scenario
        self._rng = random.Random()
        self.day = 0
        self._done = True

    def reset(self, seed: int) -> dict:
        self._rng = random.Random((seed, self.scenario))
        self.day = 0
        self.moisture = 0.25
        self.nitrogen = 60.0
        self.biomass = 0.0
        self.yield_total = 0.0
        self.cum_irr = 0.0
        self.cum_n = 0.0
        self.cum_leach = 0.0
        self._draw_weather()
        self._done = False
        return self._observe()

    def _draw_weather(self) -> None:
        base = 26.0 if self.scenario == "florida" else 24.0
        self.temperature = base + 4.0 * math.sin(math.pi * self.day / self.SEASON) \
            + self._rng.gauss(0.0, 2.0)
        self.rainfall = self._rng.expovariate(1 / 9.0) if self._rng.random() < 0.4 else 0.0
        self.solar = 18.0 + 4.0 * math.sin(math.pi * self.day / self.SEASON)

    def step(self, irrigation_mm: float, nitrogen_kg_ha: float):
        if self._done:
            raise RuntimeError("step after episode end")
        self.nitrogen += nitrogen_kg_ha
        water_in = self.rainfall + irrigation_mm
        self.moisture = min(self.moisture + water_in / 300.0, 0.4)
        et = 0.012 + 0.0004 * max(self.temperature - 5.0, 0.0)
        self.moisture = max(self.moisture - et, 0.05)
        leached = 0.02 * self.nitrogen if self.moisture > 0.35 else 0.0
        self.nitrogen -= leached
        growth = 150.0 * math.sin(math.pi * self.day / self.SEASON) ** 2 \
            * min(self.moisture / 0.25, 1.0) * min(self.nitrogen / 40.0, 1.0)
        self.biomass += growth
        if self.day >= 100:
            self.yield_total += 0.8 * growth
        self.nitrogen = max(self.nitrogen - 0.012 * growth, 0.0)
        self.cum_irr += irrigation_mm
        self.cum_n += nitrogen_kg_ha
        self.cum_leach += leached
        self.day += 1
        self._done = self.day >= self.SEASON
        self._draw_weather()
        info = {"nitrate_leached_kg_ha": leached}
        if self._done:
            info["yield_kg_ha"] = self.yield_total
        return self._observe(), info, self._done

    def _observe(self) -> dict:
        return {
            "day": float(self.day),
            "temperature": self.temperature,
            "rainfall": self.rainfall,
            "solar_radiation": self.solar,
            "soil_moisture": self.moisture,
            "soil_nitrogen": self.nitrogen,
            "biomass": self.biomass,
            "leaf_area_index": 6.0 * self.biomass / (self.biomass + 6000.0),
            "cumulative_yield": self.yield_total,
            "cumulative_irrigation": self.cum_irr,
            "cumulative_nitrogen": self.cum_n,
            "cumulative_leached": self.cum_leach,
            "season_remaining": (self.SEASON - self.day) / self.SEASON,
            # no 7-day aggregates or stress diagnostics: the bridge fills
            # unmapped slots with zeros, mirroring a sparser simulator
        }

    def close(self) -> None:
        self._done = True


class GymDssatSimulator:
    """Adapter over the gym-DSSAT package (imported lazily)."""

    def __init__(self, scenario: str) -> None:
        try:
            import gym_dssat_pdi  # noqa: F401  (the published interface package)
        except ImportError as exc:
            raise RuntimeError(
                "gym-DSSAT is not importable in this environment; run the bridge "
                "with --stub or install the gym-DSSAT package") from exc
        raise RuntimeError("gym-DSSAT adapter requires a site-specific scenario "
                           "configuration; see the bridge README")


def load_simulator(scenario: str, use_stub: bool = False):
    if use_stub:
        return StubCropSimulator(scenario)
    return GymDssatSimulator(scenario)
