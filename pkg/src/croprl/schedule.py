"""Three-phase augmentation curriculum.

Training progress p = episode / total_episodes drives the augmentation
strength alpha: clean training below the first boundary, a linear ramp
between the boundaries, full strength afterwards.  Alpha in turn gates
observation noise, weather perturbation, and action masking.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractViolation
from .surrogate import CropState


@dataclass(frozen=True)
class PgaConfig:
    total_episodes: int = 2000
    phase1_end_p: float = 0.4
    phase2_end_p: float = 0.6
    mask_prob_scale: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 < self.phase1_end_p < self.phase2_end_p <= 1.0:
            raise ContractViolation("need 0 < phase1_end_p < phase2_end_p <= 1")


DEFAULT_PGA = PgaConfig()


@dataclass(frozen=True)
class ScheduleState:
    episode: int
    p: float
    alpha: float
    phase: int


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ContractViolation(f"training progress p={p} outside [0, 1]")


def alpha(p: float, cfg: PgaConfig = DEFAULT_PGA) -> float:
    """Augmentation strength: 0, then (p - p1)/(p2 - p1), then 1."""
    _check_p(p)
    if p < cfg.phase1_end_p:
        return 0.0
    if p >= cfg.phase2_end_p:
        return 1.0
    return (p - cfg.phase1_end_p) / (cfg.phase2_end_p - cfg.phase1_end_p)


def phase(p: float, cfg: PgaConfig = DEFAULT_PGA) -> int:
    """1 = clean, 2 = ramp, 3 = full augmentation (boundaries belong to the later phase)."""
    _check_p(p)
    if p < cfg.phase1_end_p:
        return 1
    if p < cfg.phase2_end_p:
        return 2
    return 3


def schedule_state(episode: int, cfg: PgaConfig = DEFAULT_PGA) -> ScheduleState:
    """Schedule values for an episode; p is fixed at episode start."""
    p = min(episode / cfg.total_episodes, 1.0)
    return ScheduleState(episode=episode, p=p, alpha=alpha(p, cfg), phase=phase(p, cfg))


def action_mask_gate(alpha_value: float, rng: np.random.Generator,
                     cfg: PgaConfig = DEFAULT_PGA) -> bool:
    """True with probability mask_prob_scale * alpha (one draw per call)."""
    return rng.random() < cfg.mask_prob_scale * alpha_value


def resample_masked_action(action: int, n_actions: int, rng: np.random.Generator) -> int:
    """Uniform replacement from the other n_actions - 1 actions."""
    other = int(rng.integers(n_actions - 1))
    return other + 1 if other >= action else other


def perturb_weather_values(alpha_value: float, temperature: float, rainfall: float,
                           rng: np.random.Generator,
                           temp_sigma_base: float = 2.0,
                           rain_bias_scale: float = 0.05,
                           rain_sigma_base: float = 0.01) -> tuple[float, float]:
    """Apply the temperature/rainfall noise forms to true weather values.

    Active for any alpha > 0 (the hierarchical thresholds apply to the
    observation channel, not to this one).  Rainfall is floored at 0.
    """
    temp = temperature + rng.normal(0.0, temp_sigma_base * alpha_value)
    rain = rainfall + rain_bias_scale * alpha_value * rainfall \
        + rng.normal(0.0, rain_sigma_base * alpha_value)
    return temp, max(rain, 0.0)


def weather_perturbation(alpha_value: float, state: CropState,
                         rng: np.random.Generator) -> CropState:
    """Perturb the environment's weather draw (not the agent's observation).

    Identity at alpha = 0 (no draws consumed).
    """
    if not 0.0 <= alpha_value <= 1.0:
        raise ContractViolation(f"alpha={alpha_value} outside [0, 1]")
    if alpha_value == 0.0:
        return state
    temp, rain = perturb_weather_values(alpha_value, state.temperature, state.rainfall, rng)
    return replace(state, temperature=temp, rainfall=rain)
