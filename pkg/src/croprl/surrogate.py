"""Built-in surrogate maize environment.

A deliberately small process model that preserves the decision structure of
the real task: irrigation and fertilization timing matter, over-application
drains money and leaches nitrogen, and weather drives both growth and water
demand.  Episodes run 200 daily steps; the state flattens to exactly 25
scalars (see OBS_FIELD_NAMES for the index map).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation

# ---------------------------------------------------------------------------
# Actions: 25 discrete irrigation x nitrogen combinations, row-major index.
# ---------------------------------------------------------------------------

IRRIGATION_OPTIONS_MM = (0.0, 6.0, 12.0, 18.0, 24.0)
NITROGEN_OPTIONS_KG_HA = (0.0, 40.0, 80.0, 120.0, 160.0)
N_ACTIONS = len(IRRIGATION_OPTIONS_MM) * len(NITROGEN_OPTIONS_KG_HA)


@dataclass(frozen=True)
class ActionChoice:
    """One of the 25 irrigation x nitrogen combinations."""

    index: int
    irrigation_mm: float
    nitrogen_kg_ha: float

    @classmethod
    def from_index(cls, index: int) -> "ActionChoice":
        if not 0 <= index < N_ACTIONS:
            raise ContractViolation(f"action index {index} outside [0, {N_ACTIONS})")
        i_level, n_level = divmod(index, len(NITROGEN_OPTIONS_KG_HA))
        return cls(index, IRRIGATION_OPTIONS_MM[i_level], NITROGEN_OPTIONS_KG_HA[n_level])

    @classmethod
    def from_levels(cls, irrigation_level: int, nitrogen_level: int) -> "ActionChoice":
        return cls.from_index(irrigation_level * len(NITROGEN_OPTIONS_KG_HA) + nitrogen_level)


# ---------------------------------------------------------------------------
# Reward
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RewardWeights:
    """Economic weights in $ per unit; w4 is a framework default (configurable)."""

    w1_yield: float = 0.158        # $/kg grain
    w2_nitrogen: float = 0.79      # $/kg fertilizer
    w3_irrigation: float = 1.1     # $/mm irrigation
    w4_leaching: float = 0.011     # $/kg nitrate leached (framework default)

    def __post_init__(self) -> None:
        for name in ("w1_yield", "w2_nitrogen", "w3_irrigation", "w4_leaching"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")


def reward_components(yield_kg_ha: float, nitrogen_kg_ha: float, irrigation_mm: float,
                      leached_kg_ha: float, is_harvest: bool, weights: RewardWeights) -> float:
    """Daily economic reward: input costs always, yield revenue on the harvest day."""
    for name, v in (("yield", yield_kg_ha), ("nitrogen", nitrogen_kg_ha),
                    ("irrigation", irrigation_mm), ("leached", leached_kg_ha)):
        if v < 0:
            raise ContractViolation(f"{name} must be >= 0, got {v}")
    r = (-weights.w2_nitrogen * nitrogen_kg_ha
         - weights.w3_irrigation * irrigation_mm
         - weights.w4_leaching * leached_kg_ha)
    if is_harvest:
        r += weights.w1_yield * yield_kg_ha
    return r


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    season_length: int = 200
    # weather: AR(1) temperature around a seasonal mean; rain as a persistent
    # wet/dry regime chain with exponential depths.  Persistence gives the
    # daily readings real forecast value.
    temp_mean: float = 26.5
    temp_seasonal_amp: float = 3.0
    temp_daily_sigma: float = 3.2
    temp_ar1: float = 0.85
    temp_min: float = 5.0
    temp_max: float = 42.0
    rain_mean: float = 4.2           # mm/day
    rain_variance: float = 110.0     # fixes the wet-day probability (see wet_day_prob)
    rain_persistence: float = 0.5    # p(wet tomorrow | wet today)
    solar_base: float = 16.0         # MJ/m2/day
    solar_seasonal_amp: float = 6.0
    solar_sigma: float = 2.0
    solar_wet_reduction: float = 0.35
    # soil: sandy profile with a small water buffer, so irrigation timing
    # must track the weather
    n_soil_layers: int = 1
    soil_depth_mm: float = 350.0
    field_capacity: float = 0.28     # volumetric fraction
    wilting_point: float = 0.10
    saturation: float = 0.42
    drainage_coefficient: float = 0.7  # fraction of above-capacity excess drained per day
    initial_moisture: float = 0.24
    initial_nitrogen: float = 75.0   # kg/ha mineral N at planting
    mineralization_rate: float = 0.9  # kg/ha/day released from organic matter
    # crop growth (surrogate process constants, calibrated at desk scale)
    growth_peak: float = 340.0       # kg/ha/day potential at mid season
    temp_base: float = 8.0
    temp_opt_low: float = 24.0
    temp_opt_high: float = 34.0
    temp_shutoff: float = 44.0
    water_stress_span: float = 0.8   # fraction of (fc-wp) at which water stress vanishes
    n_demand_per_kg: float = 0.013   # kg N per kg new biomass
    n_supply_fraction: float = 0.12  # fraction of the mineral pool available per day
    yield_start_day: int = 100
    yield_fraction: float = 0.88     # share of late growth routed to grain
    lai_max: float = 6.5
    lai_half_biomass: float = 6000.0
    et_solar_coef: float = 0.10      # mm per MJ/m2
    et_temp_coef: float = 0.16       # mm per degC above 5
    et_cover_min: float = 0.15       # bare-soil evaporation floor
    et_moisture_span: float = 0.6    # fraction of (fc-wp) at which ET reaches potential
    soluble_n_fraction: float = 0.1  # leachable share of the mineral pool
    # fertilizer applied on warm days partly volatilizes before entering the
    # pool, so application timing has to track the temperature reading
    volatilization_threshold: float = 26.0   # degC where losses start
    volatilization_span: float = 10.0        # degC from onset to the max loss
    volatilization_max: float = 0.5          # largest loss fraction

    def __post_init__(self) -> None:
        if not 0 < self.wilting_point < self.field_capacity < self.saturation <= 1:
            raise ConfigurationError("need 0 < wilting < field capacity < saturation <= 1")
        if self.season_length <= 0 or self.n_soil_layers < 1:
            raise ConfigurationError("season_length and n_soil_layers must be positive")
        if self.rain_mean < 0 or self.rain_variance < 0:
            raise ConfigurationError("rain statistics must be >= 0")

    @property
    def wet_day_prob(self) -> float:
        """Stationary wet-day probability implied by (rain_mean, rain_variance)."""
        m, v = self.rain_mean, self.rain_variance
        if m == 0:
            return 0.0
        return min(1.0, 2.0 * m * m / (v + m * m))

    @property
    def wet_after_dry_prob(self) -> float:
        """Transition p(wet | dry) that keeps the stationary wet probability."""
        pi_w = self.wet_day_prob
        if pi_w in (0.0, 1.0):
            return pi_w
        return min(1.0, pi_w * (1.0 - self.rain_persistence) / (1.0 - pi_w))

    @property
    def layer_depth_mm(self) -> float:
        return self.soil_depth_mm / self.n_soil_layers


def florida_scenario(**overrides) -> ScenarioConfig:
    """Subtropical: warm (mean 26.5 C) with regular rainfall (mean 4.2 mm/day)."""
    return ScenarioConfig(name="florida", **overrides)


def zaragoza_scenario(**overrides) -> ScenarioConfig:
    """Mediterranean: temperature range 15-35 C, sparse high-variance rain (2.1 mm/day)."""
    defaults = dict(
        temp_mean=25.0,
        temp_seasonal_amp=6.0,
        temp_daily_sigma=3.2,
        temp_min=15.0,
        temp_max=35.0,
        rain_mean=2.1,
        rain_variance=54.4,
        solar_base=18.0,
        solar_seasonal_amp=7.0,
        initial_nitrogen=50.0,
        initial_moisture=0.20,
    )
    defaults.update(overrides)
    return ScenarioConfig(name="zaragoza", **defaults)


SCENARIOS = {"florida": florida_scenario, "zaragoza": zaragoza_scenario}


def scenario_by_name(name: str, **overrides) -> ScenarioConfig:
    try:
        return SCENARIOS[name](**overrides)
    except KeyError:
        raise ConfigurationError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")


# ---------------------------------------------------------------------------
# State and the 25-dimensional observation layout
# ---------------------------------------------------------------------------

# The weather sensors feed exactly one index each (1-3); every other entry is
# a soil/crop/management quantity, so a corrupted sensor has no clean twin.
OBS_FIELD_NAMES = (
    "day",                       # 0
    "temperature",               # 1   noise channel
    "rainfall",                  # 2   noise channel
    "solar_radiation",           # 3   eval perturbation channel
    "soil_moisture",             # 4   noise channel (root-zone mean)
    "soil_nitrogen",             # 5   total mineral N, kg/ha
    "biomass",                   # 6
    "leaf_area_index",           # 7
    "cumulative_yield",          # 8
    "cumulative_irrigation",     # 9
    "cumulative_nitrogen",       # 10
    "cumulative_n_uptake",       # 11
    "growth_prev",               # 12  yesterday's biomass increment
    "canopy_cover",              # 13
    "days_since_irrigation",     # 14
    "days_since_nitrogen",       # 15
    "water_stress",              # 16
    "nitrogen_stress",           # 17
    "temperature_factor",        # 18
    "potential_growth",          # 19
    "drainage_prev",             # 20
    "cumulative_leached",        # 21
    "available_water_fraction",  # 22
    "reproductive_stage",        # 23
    "season_remaining",          # 24
)
OBS_DIM = len(OBS_FIELD_NAMES)
OBS_INDEX = {name: i for i, name in enumerate(OBS_FIELD_NAMES)}

OBS_DAY = OBS_INDEX["day"]
OBS_TEMPERATURE = OBS_INDEX["temperature"]
OBS_RAINFALL = OBS_INDEX["rainfall"]
OBS_SOLAR = OBS_INDEX["solar_radiation"]
OBS_SOIL_MOISTURE = OBS_INDEX["soil_moisture"]

# Fixed per-dimension scaling used by policy networks to bring the raw state
# into O(1) ranges.  Applied by the policy, never by the environment.
OBS_SCALE = np.array([
    1 / 200.0, 1 / 40.0, 1 / 25.0, 1 / 30.0, 1.0,
    1 / 150.0, 1 / 20000.0, 1 / 7.0, 1 / 15000.0, 1 / 600.0,
    1 / 400.0, 1 / 300.0, 1 / 320.0, 1.0, 1 / 30.0,
    1 / 30.0, 1.0, 1.0, 1.0, 1 / 320.0,
    1 / 30.0, 1 / 60.0, 1.0, 1.0, 1.0,
])


@dataclass(frozen=True)
class CropState:
    """Daily state; the AR temperature anomaly and wet-regime flag are internal."""

    day: int
    temperature: float
    rainfall: float
    solar_radiation: float
    soil_moisture: tuple[float, ...]   # volumetric fraction per layer
    soil_nitrogen: tuple[float, ...]   # kg/ha mineral N per layer
    biomass: float = 0.0
    leaf_area_index: float = 0.0
    cumulative_yield: float = 0.0
    cumulative_irrigation: float = 0.0
    cumulative_nitrogen: float = 0.0
    cumulative_leached: float = 0.0
    cumulative_n_uptake: float = 0.0
    growth_prev: float = 0.0
    days_since_irrigation: float = 30.0
    days_since_nitrogen: float = 30.0
    water_stress: float = 1.0
    nitrogen_stress: float = 1.0
    temperature_factor: float = 1.0
    potential_growth_rate: float = 0.0
    drainage_prev: float = 0.0
    available_water_fraction: float = 1.0
    season_remaining: float = 1.0
    temp_anomaly: float = 0.0
    wet_regime: bool = False

    @property
    def root_zone_moisture(self) -> float:
        return sum(self.soil_moisture) / len(self.soil_moisture)

    @property
    def total_soil_nitrogen(self) -> float:
        return sum(self.soil_nitrogen)

    @property
    def canopy_cover(self) -> float:
        return min(self.leaf_area_index / 3.0, 1.0)


def potential_growth(day: int, cfg: ScenarioConfig) -> float:
    """Bell-shaped potential biomass increment over the season, kg/ha/day."""
    frac = min(max(day, 0), cfg.season_length) / cfg.season_length
    return cfg.growth_peak * math.sin(math.pi * frac) ** 2


def temperature_factor(temp: float, cfg: ScenarioConfig) -> float:
    if temp <= cfg.temp_base or temp >= cfg.temp_shutoff:
        return 0.0
    if temp < cfg.temp_opt_low:
        return (temp - cfg.temp_base) / (cfg.temp_opt_low - cfg.temp_base)
    if temp <= cfg.temp_opt_high:
        return 1.0
    return (cfg.temp_shutoff - temp) / (cfg.temp_shutoff - cfg.temp_opt_high)


def _available_water_fraction(moisture: float, cfg: ScenarioConfig) -> float:
    span = cfg.field_capacity - cfg.wilting_point
    return min(max((moisture - cfg.wilting_point) / span, 0.0), 1.0)


def volatilization_loss(temp: float, cfg: ScenarioConfig) -> float:
    """Fraction of an applied fertilizer dose lost to the air at this temperature."""
    frac = (temp - cfg.volatilization_threshold) / cfg.volatilization_span
    return min(max(frac, 0.0), 1.0) * cfg.volatilization_max


def observe(state: CropState) -> np.ndarray:
    """Deterministic flattening of the state to the documented 25-vector."""
    obs = np.empty(OBS_DIM)
    obs[0] = float(state.day)
    obs[1] = state.temperature
    obs[2] = state.rainfall
    obs[3] = state.solar_radiation
    obs[4] = state.root_zone_moisture
    obs[5] = state.total_soil_nitrogen
    obs[6] = state.biomass
    obs[7] = state.leaf_area_index
    obs[8] = state.cumulative_yield
    obs[9] = state.cumulative_irrigation
    obs[10] = state.cumulative_nitrogen
    obs[11] = state.cumulative_n_uptake
    obs[12] = state.growth_prev
    obs[13] = state.canopy_cover
    obs[14] = state.days_since_irrigation
    obs[15] = state.days_since_nitrogen
    obs[16] = state.water_stress
    obs[17] = state.nitrogen_stress
    obs[18] = state.temperature_factor
    obs[19] = state.potential_growth_rate
    obs[20] = state.drainage_prev
    obs[21] = state.cumulative_leached
    obs[22] = state.available_water_fraction
    obs[23] = 1.0 if state.day >= 100 else 0.0
    obs[24] = state.season_remaining
    return obs


@dataclass
class StepOutcome:
    next_state: CropState
    reward: float
    done: bool
    info: dict


class SurrogateEnv:
    """Stateful wrapper: reset(seed) / step(action) plus a functional core.

    ``step`` takes the current state explicitly so callers may perturb the
    weather fields between steps (the training augmentation does exactly
    that); the env only owns the weather RNG and the scenario constants.
    """

    def __init__(self, scenario: ScenarioConfig, weights: RewardWeights | None = None) -> None:
        self.scenario = scenario
        self.weights = weights or RewardWeights()
        self._rng: np.random.Generator | None = None
        self._state: CropState | None = None
        self._done = True

    # -- weather ------------------------------------------------------------

    def _seasonal_temp(self, day: int) -> float:
        cfg = self.scenario
        s = math.sin(math.pi * day / cfg.season_length)
        return cfg.temp_mean + cfg.temp_seasonal_amp * (s - 2.0 / math.pi)

    def _draw_weather(self, day: int, prev_anomaly: float,
                      prev_wet: bool | None) -> tuple[float, float, float, float, bool]:
        cfg = self.scenario
        rng = self._rng
        rho = cfg.temp_ar1
        anomaly = rho * prev_anomaly + cfg.temp_daily_sigma * math.sqrt(1 - rho * rho) * rng.standard_normal()
        temp = min(max(self._seasonal_temp(day) + anomaly, cfg.temp_min), cfg.temp_max)
        if prev_wet is None:
            p_wet = cfg.wet_day_prob             # stationary start
        else:
            p_wet = cfg.rain_persistence if prev_wet else cfg.wet_after_dry_prob
        wet = rng.random() < p_wet
        rain = rng.exponential(cfg.rain_mean / cfg.wet_day_prob) if wet else 0.0
        solar = cfg.solar_base + cfg.solar_seasonal_amp * math.sin(math.pi * day / cfg.season_length)
        solar += cfg.solar_sigma * rng.standard_normal()
        if wet:
            solar *= 1.0 - cfg.solar_wet_reduction
        solar = max(solar, 1.0)
        return temp, rain, solar, anomaly, wet

    # -- episode interface ----------------------------------------------------

    def reset(self, seed: int) -> CropState:
        """Start a fresh 200-day episode; deterministic per (scenario, seed)."""
        cfg = self.scenario
        self._rng = np.random.default_rng(seed)
        temp, rain, solar, anomaly, wet = self._draw_weather(0, 0.0, None)
        n_layers = cfg.n_soil_layers
        state = CropState(
            day=0,
            temperature=temp,
            rainfall=rain,
            solar_radiation=solar,
            soil_moisture=(cfg.initial_moisture,) * n_layers,
            soil_nitrogen=(cfg.initial_nitrogen / n_layers,) * n_layers,
            potential_growth_rate=potential_growth(0, cfg),
            available_water_fraction=_available_water_fraction(cfg.initial_moisture, cfg),
            season_remaining=1.0,
            temp_anomaly=anomaly,
            wet_regime=wet,
        )
        self._state = state
        self._done = False
        return state

    @property
    def state(self) -> CropState:
        if self._state is None:
            raise ContractViolation("reset() must be called before reading state")
        return self._state

    def set_state(self, state: CropState) -> None:
        """Adopt an externally modified state (e.g. perturbed weather)."""
        self._state = state

    def step(self, state: CropState, action: ActionChoice | int,
             weights: RewardWeights | None = None) -> StepOutcome:
        """Advance one day from ``state``; raises if the episode is over."""
        cfg = self.scenario
        w = weights or self.weights
        if self._rng is None:
            raise ContractViolation("reset() must be called before step()")
        if self._done or state.day >= cfg.season_length:
            raise ContractViolation("step() called after episode end")
        if isinstance(action, (int, np.integer)):
            action = ActionChoice.from_index(int(action))

        irrigation = action.irrigation_mm
        fertilizer = action.nitrogen_kg_ha
        depth = cfg.layer_depth_mm
        n_layers = cfg.n_soil_layers

        water = [m * depth for m in state.soil_moisture]       # mm per layer
        nitrogen = list(state.soil_nitrogen)                   # kg/ha per layer

        # fertilizer (minus heat volatilization) and mineralization enter the
        # top layer
        volatilized = fertilizer * volatilization_loss(state.temperature, cfg)
        nitrogen[0] += fertilizer - volatilized + cfg.mineralization_rate

        # --- water balance: inflow -> ET -> drainage cascade -----------------
        inflow = state.rainfall + irrigation
        percolation = [0.0] * n_layers   # water leaving layer i downward
        water[0] += inflow

        # saturation overflow cascades immediately
        for i in range(n_layers):
            excess = water[i] - cfg.saturation * depth
            if excess > 0:
                water[i] -= excess
                percolation[i] += excess
                if i + 1 < n_layers:
                    water[i + 1] += excess

        # evapotranspiration, limited by cover and root-zone availability
        moisture_now = sum(water) / (depth * n_layers)
        et_potential = cfg.et_solar_coef * state.solar_radiation \
            + cfg.et_temp_coef * max(state.temperature - 5.0, 0.0)
        cover = min(max(state.leaf_area_index / 3.0, cfg.et_cover_min), 1.0)
        span = (cfg.field_capacity - cfg.wilting_point) * cfg.et_moisture_span
        availability = min(max((moisture_now - cfg.wilting_point) / span, 0.0), 1.0)
        et_demand = et_potential * cover * availability
        # take ET from the top down, never below wilting point
        et_actual = 0.0
        remaining = et_demand
        for i in range(n_layers):
            takeable = max(water[i] - cfg.wilting_point * depth, 0.0)
            take = min(takeable, remaining)
            water[i] -= take
            et_actual += take
            remaining -= take
            if remaining <= 0:
                break

        # slow drainage of the above-field-capacity excess
        for i in range(n_layers):
            excess = water[i] - cfg.field_capacity * depth
            if excess > 0:
                drained = cfg.drainage_coefficient * excess
                water[i] -= drained
                percolation[i] += drained
                if i + 1 < n_layers:
                    water[i + 1] += drained
        drainage = percolation[-1]

        # --- nitrate leaching: percolating water carries soluble N down ------
        leached = 0.0
        water_before = [m * depth for m in state.soil_moisture]
        water_before[0] += inflow
        for i in range(n_layers):
            total_water = max(water_before[i], 1e-9)
            frac = min(percolation[i] / total_water, 1.0)
            moved = frac * cfg.soluble_n_fraction * nitrogen[i]
            nitrogen[i] -= moved
            if i + 1 < n_layers:
                nitrogen[i + 1] += moved
            else:
                leached = moved

        # --- growth -----------------------------------------------------------
        moisture_end = sum(water) / (depth * n_layers)
        pg = potential_growth(state.day, cfg)
        tf = temperature_factor(state.temperature, cfg)
        ws_span = (cfg.field_capacity - cfg.wilting_point) * cfg.water_stress_span
        ws = min(max((moisture_end - cfg.wilting_point) / ws_span, 0.0), 1.0)
        demand = cfg.n_demand_per_kg * pg
        supply = sum(nitrogen) * cfg.n_supply_fraction
        ns = 1.0 if demand <= 0 else min(supply / demand, 1.0)
        growth = pg * min(ws, ns) * tf
        uptake = cfg.n_demand_per_kg * growth
        if uptake > 0:
            total_n = sum(nitrogen)
            for i in range(n_layers):
                nitrogen[i] -= uptake * (nitrogen[i] / total_n)

        biomass = state.biomass + growth
        lai = cfg.lai_max * biomass / (biomass + cfg.lai_half_biomass)
        new_yield = state.cumulative_yield
        if state.day >= cfg.yield_start_day:
            new_yield += cfg.yield_fraction * growth

        # --- advance the calendar and draw tomorrow's weather -----------------
        new_day = state.day + 1
        done = new_day >= cfg.season_length
        temp, rain, solar, anomaly, wet = self._draw_weather(new_day, state.temp_anomaly,
                                                             state.wet_regime)

        moisture_layers = tuple(wl / depth for wl in water)
        next_state = CropState(
            day=new_day,
            temperature=temp,
            rainfall=rain,
            solar_radiation=solar,
            soil_moisture=moisture_layers,
            soil_nitrogen=tuple(max(n, 0.0) for n in nitrogen),
            biomass=biomass,
            leaf_area_index=lai,
            cumulative_yield=new_yield,
            cumulative_irrigation=state.cumulative_irrigation + irrigation,
            cumulative_nitrogen=state.cumulative_nitrogen + fertilizer,
            cumulative_leached=state.cumulative_leached + leached,
            cumulative_n_uptake=state.cumulative_n_uptake + uptake,
            growth_prev=growth,
            days_since_irrigation=0.0 if irrigation > 0 else min(state.days_since_irrigation + 1, 30.0),
            days_since_nitrogen=0.0 if fertilizer > 0 else min(state.days_since_nitrogen + 1, 30.0),
            water_stress=ws,
            nitrogen_stress=ns,
            temperature_factor=tf,
            potential_growth_rate=potential_growth(new_day, cfg),
            drainage_prev=drainage,
            available_water_fraction=_available_water_fraction(
                sum(moisture_layers) / n_layers, cfg),
            season_remaining=(cfg.season_length - new_day) / cfg.season_length,
            temp_anomaly=anomaly,
            wet_regime=wet,
        )

        info = {
            "yield_kg_ha": new_yield,
            "nitrate_leached_kg_ha": leached,
            "nitrogen_applied_kg_ha": fertilizer,
            "irrigation_applied_mm": irrigation,
            "et_mm": et_actual,
            "drainage_mm": drainage,
            "growth_kg_ha": growth,
            "volatilized_kg_ha": volatilized,
            "is_harvest": done,
        }
        reward = reward_components(new_yield, fertilizer, irrigation, leached, done, w)

        self._state = next_state
        self._done = done
        return StepOutcome(next_state=next_state, reward=reward, done=done, info=info)


class ObservedEnv:
    """Flat-observation facade over SurrogateEnv: reset/step in 25-vectors.

    This is the interface trainers and the wire protocol consume; remote
    environments implement the same one.
    """

    supports_state_access = True

    def __init__(self, scenario: ScenarioConfig, weights: RewardWeights | None = None) -> None:
        self.env = SurrogateEnv(scenario, weights)
        self.scenario = scenario

    def observe_current(self) -> np.ndarray:
        return observe(self.env.state)

    def reset(self, seed: int) -> np.ndarray:
        self.env.reset(seed)
        return self.observe_current()

    def step(self, action: int) -> tuple[np.ndarray, float, bool, dict]:
        outcome = self.env.step(self.env.state, action)
        return self.observe_current(), outcome.reward, outcome.done, outcome.info

    def perturb_weather(self, fn) -> None:
        """Apply fn(state) -> state to the pending state (weather augmentation)."""
        self.env.set_state(fn(self.env.state))

    def close(self) -> None:
        pass


# ---------------------------------------------------------------------------
# Baseline policy and episode tracing
# ---------------------------------------------------------------------------

class FixedManagementPolicy:
    """Calendar baseline: 12 mm every 4th day, 80 kg/ha N on days 10 and 45.

    The schedule is configurable; the defaults stand in for the conventional
    fixed-management comparison row.
    """

    def __init__(self, irrigation_mm: float = 12.0, irrigation_interval: int = 4,
                 nitrogen_kg_ha: float = 80.0, nitrogen_days: tuple[int, ...] = (10, 45)) -> None:
        self.irrigation_level = IRRIGATION_OPTIONS_MM.index(irrigation_mm)
        self.irrigation_interval = irrigation_interval
        self.nitrogen_level = NITROGEN_OPTIONS_KG_HA.index(nitrogen_kg_ha)
        self.nitrogen_days = set(nitrogen_days)

    def action(self, obs: np.ndarray, rng=None, deterministic: bool = True) -> int:
        day = int(round(obs[OBS_DAY]))
        i_level = self.irrigation_level if day % self.irrigation_interval == 0 else 0
        n_level = self.nitrogen_level if day in self.nitrogen_days else 0
        return i_level * len(NITROGEN_OPTIONS_KG_HA) + n_level


TRACE_COLUMNS = list(OBS_FIELD_NAMES) + [
    "action", "irrigation_mm", "nitrogen_kg_ha", "reward",
    "revenue_yield", "cost_nitrogen", "cost_irrigation", "cost_leaching",
]


def run_traced_episode(env: ObservedEnv, policy, seed: int, path, rng=None) -> float:
    """Roll one episode with ``policy`` and write a per-day CSV trace."""
    weights = env.env.weights
    obs = env.reset(seed)
    total = 0.0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TRACE_COLUMNS)
        done = False
        while not done:
            a = policy.action(obs, rng, deterministic=True)
            choice = ActionChoice.from_index(a)
            next_obs, reward, done, info = env.step(a)
            writer.writerow(
                [repr(float(v)) for v in obs]
                + [a, choice.irrigation_mm, choice.nitrogen_kg_ha, repr(reward),
                   repr(weights.w1_yield * info["yield_kg_ha"] if info["is_harvest"] else 0.0),
                   repr(-weights.w2_nitrogen * info["nitrogen_applied_kg_ha"]),
                   repr(-weights.w3_irrigation * info["irrigation_applied_mm"]),
                   repr(-weights.w4_leaching * info["nitrate_leached_kg_ha"])]
            )
            total += reward
            obs = next_obs
    return total
