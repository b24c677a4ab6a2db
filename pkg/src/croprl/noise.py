"""Sensitivity-ranked observation noise with hierarchical activation.

Channels switch on in sensitivity order as augmentation strength alpha
grows: temperature above 0.3, rainfall above 0.5, soil moisture above 0.7.
Dimensions of an inactive channel are left untouched bitwise.  Each channel
draws from its own RNG stream so disabling one never shifts another.

The eval-only perturbations reproduce the fixed-magnitude conditions used
for sensitivity and robustness sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .surrogate import OBS_RAINFALL, OBS_SOIL_MOISTURE, OBS_SOLAR, OBS_TEMPERATURE


@dataclass(frozen=True)
class NoiseConfig:
    temp_threshold: float = 0.3
    rain_threshold: float = 0.5
    moisture_threshold: float = 0.7
    temp_sigma_base: float = 2.0     # degC at alpha = 1
    rain_bias_scale: float = 0.05
    rain_noise_param: float = 0.01
    moisture_noise_param: float = 0.02
    # The rain/moisture noise parameters are read as standard deviations by
    # default; "variance" switches to sqrt(param * alpha).
    rain_param_interpretation: str = "std"
    moisture_param_interpretation: str = "std"

    def __post_init__(self) -> None:
        if not self.temp_threshold < self.rain_threshold < self.moisture_threshold:
            raise ConfigurationError("noise thresholds must be strictly increasing")
        for name in ("temp_sigma_base", "rain_bias_scale", "rain_noise_param",
                     "moisture_noise_param"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        for name in ("rain_param_interpretation", "moisture_param_interpretation"):
            if getattr(self, name) not in ("std", "variance"):
                raise ConfigurationError(f"{name} must be 'std' or 'variance'")


DEFAULT_NOISE = NoiseConfig()


@dataclass
class NoiseStreams:
    """Independent per-channel generators."""

    temp: np.random.Generator
    rain: np.random.Generator
    moisture: np.random.Generator


def _sigma(param: float, alpha: float, interpretation: str) -> float:
    scaled = param * alpha
    return scaled if interpretation == "std" else float(np.sqrt(scaled))


def temp_noise(temp: float, alpha: float, rng: np.random.Generator,
               cfg: NoiseConfig = DEFAULT_NOISE) -> float:
    """Additive Gaussian with sigma = temp_sigma_base * alpha."""
    return temp + rng.normal(0.0, cfg.temp_sigma_base * alpha)


def rain_noise(rain: float, alpha: float, rng: np.random.Generator,
               cfg: NoiseConfig = DEFAULT_NOISE) -> float:
    """Proportional bias plus Gaussian noise, floored at 0 mm."""
    sigma = _sigma(cfg.rain_noise_param, alpha, cfg.rain_param_interpretation)
    out = rain + cfg.rain_bias_scale * alpha * rain + rng.normal(0.0, sigma)
    return max(out, 0.0)


def moisture_noise(moisture: float, alpha: float, rng: np.random.Generator,
                   cfg: NoiseConfig = DEFAULT_NOISE) -> float:
    """Adds a [0, 1]-clipped Gaussian term (non-negative by construction);
    the final reading is clipped back into [0, 1]."""
    sigma = _sigma(cfg.moisture_noise_param, alpha, cfg.moisture_param_interpretation)
    term = min(max(rng.normal(0.0, sigma), 0.0), 1.0)
    return min(max(moisture + term, 0.0), 1.0)


def inject(observation: np.ndarray, alpha: float, cfg: NoiseConfig,
           streams: NoiseStreams) -> np.ndarray:
    """Apply the active channels in threshold order; other dims untouched."""
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation(f"alpha={alpha} outside [0, 1]")
    out = np.array(observation, dtype=np.float64, copy=True)
    if alpha > cfg.temp_threshold:
        out[OBS_TEMPERATURE] = temp_noise(out[OBS_TEMPERATURE], alpha, streams.temp, cfg)
    if alpha > cfg.rain_threshold:
        out[OBS_RAINFALL] = rain_noise(out[OBS_RAINFALL], alpha, streams.rain, cfg)
    if alpha > cfg.moisture_threshold:
        out[OBS_SOIL_MOISTURE] = moisture_noise(out[OBS_SOIL_MOISTURE], alpha,
                                                streams.moisture, cfg)
    return out


EVAL_CONDITIONS = ("clean", "temp", "rain", "moisture", "solar", "combined")


def eval_perturbation(observation: np.ndarray, condition: str,
                      rng: np.random.Generator) -> np.ndarray:
    """Fixed-magnitude perturbations for sensitivity/robustness evaluation.

    temp: Gaussian sigma 2 degC; rain/solar: +-10% multiplicative uniform;
    moisture: +-0.02 additive uniform (clipped to [0, 1]);
    combined: temp + rain.
    """
    if condition not in EVAL_CONDITIONS:
        raise ContractViolation(f"unknown condition {condition!r}; choose from {EVAL_CONDITIONS}")
    out = np.array(observation, dtype=np.float64, copy=True)
    if condition == "clean":
        return out
    if condition in ("temp", "combined"):
        out[OBS_TEMPERATURE] += rng.normal(0.0, 2.0)
    if condition in ("rain", "combined"):
        out[OBS_RAINFALL] *= rng.uniform(0.9, 1.1)
    if condition == "moisture":
        out[OBS_SOIL_MOISTURE] = min(max(out[OBS_SOIL_MOISTURE] + rng.uniform(-0.02, 0.02), 0.0), 1.0)
    if condition == "solar":
        out[OBS_SOLAR] *= rng.uniform(0.9, 1.1)
    return out
