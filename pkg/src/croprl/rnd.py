"""Novelty-driven exploration: random-distillation reward and coverage grid.

A frozen random target network and a trainable predictor share the same
architecture; the squared embedding distance between them is the intrinsic
reward.  A progress-decayed coefficient retires the intrinsic channel before
the final consolidation phase.  Visited states are additionally binned along
four agronomic axes to measure exploration coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import ContractViolation
from .surrogate import CropState

DECAY_START_P = 0.3
DECAY_END_P = 0.7


def lambda_int(p: float, decay_start: float = DECAY_START_P,
               decay_end: float = DECAY_END_P) -> float:
    """Intrinsic-advantage weight: 1 early, linear decay, 0 from decay_end on."""
    if not 0.0 <= p <= 1.0:
        raise ContractViolation(f"training progress p={p} outside [0, 1]")
    if p < decay_start:
        return 1.0
    if p >= decay_end:
        return 0.0
    return (decay_end - p) / (decay_end - decay_start)


@dataclass
class RndConfig:
    embedding_dim: int = 64
    hidden_units: int = 256
    learning_rate: float = 3e-4
    normalizer_warmup: int = 1000
    novelty_bonus: float = 2.0       # multiplier for states in unvisited bins
    novelty_bonus_enabled: bool = True
    decay_start: float = DECAY_START_P
    decay_end: float = DECAY_END_P


class RndNets:
    """Frozen target + trainable predictor, both obs -> 256 -> 256 -> k."""

    def __init__(self, obs_dim: int, cfg: RndConfig, rng: np.random.Generator) -> None:
        sizes = [obs_dim, cfg.hidden_units, cfg.hidden_units, cfg.embedding_dim]
        self.target = nn.init_mlp(sizes, rng)
        self.predictor = nn.init_mlp(sizes, rng)
        self.adam = nn.AdamState.for_params(self.predictor.params())
        self.learning_rate = cfg.learning_rate


def intrinsic_reward(nets: RndNets, state: np.ndarray) -> float:
    """Squared L2 distance between target and predictor embeddings (>= 0)."""
    diff = nn.forward(nets.target, state) - nn.forward(nets.predictor, state)
    return float(diff @ diff)


def intrinsic_reward_batch(nets: RndNets, states: np.ndarray) -> np.ndarray:
    diff = nn.forward_batch(nets.target, states) - nn.forward_batch(nets.predictor, states)
    return np.sum(diff * diff, axis=1)


def train_predictor(nets: RndNets, batch: np.ndarray) -> float:
    """One Adam step on the mean squared embedding error; returns the pre-step loss."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.size == 0:
        raise ContractViolation("train_predictor needs a non-empty batch")
    target_emb = nn.forward_batch(nets.target, batch)
    trace = nn.forward_batch(nets.predictor, batch, trace=True)
    err = trace.outputs - target_emb
    loss = float(np.mean(err * err))
    grad_out = 2.0 * err / err.size
    grads = nn.backward_batch(nets.predictor, trace, grad_out)
    nn.adam_step(nets.predictor.params(), grads.params(), nets.adam, nets.learning_rate)
    return loss


class ScalarRunningStd:
    """Welford tracker used to keep intrinsic rewards at unit scale."""

    def __init__(self) -> None:
        self.count = 0
        self.mean = 0.0
        self._m2 = 0.0

    def update(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)

    @property
    def std(self) -> float:
        if self.count < 2:
            return 0.0
        return float(np.sqrt(self._m2 / self.count))

    def scale(self, x: float) -> float:
        """x divided by the running std (identity until 2 samples seen)."""
        s = self.std
        return x / (s + 1e-8) if s > 0 else x


class ObservationNormalizer:
    """Running per-dimension mean/std; identity until ``warmup`` samples seen."""

    def __init__(self, dim: int, warmup: int = 1000) -> None:
        self.dim = dim
        self.warmup = warmup
        self.count = 0
        self.mean = np.zeros(dim)
        self._m2 = np.zeros(dim)

    def update(self, x: np.ndarray) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)

    @property
    def variance(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros(self.dim)
        return self._m2 / self.count

    def normalize(self, x: np.ndarray) -> np.ndarray:
        if self.count < self.warmup:
            return np.asarray(x, dtype=np.float64)
        return (x - self.mean) / np.sqrt(self.variance + 1e-8)


# ---------------------------------------------------------------------------
# Semantic discretization: day / cumulative yield / soil moisture /
# cumulative irrigation, with configurable bin widths and bounds.
# ---------------------------------------------------------------------------

DEFAULT_GRID_WIDTHS = (100.0, 100.0, 0.1, 100.0)
DEFAULT_GRID_BOUNDS = ((0.0, 200.0), (0.0, 20000.0), (0.0, 1.0), (0.0, 2100.0))
GRID_AXES = ("day", "cumulative_yield", "soil_moisture", "cumulative_irrigation")


@dataclass
class CoverageGrid:
    widths: tuple[float, ...] = DEFAULT_GRID_WIDTHS
    bounds: tuple[tuple[float, float], ...] = DEFAULT_GRID_BOUNDS
    occupied: set = field(default_factory=set)

    def __post_init__(self) -> None:
        if len(self.widths) != 4 or len(self.bounds) != 4:
            raise ContractViolation("the grid has exactly four axes")
        self.n_bins = tuple(
            max(1, math.ceil((hi - lo) / w)) for (lo, hi), w in zip(self.bounds, self.widths)
        )

    @property
    def total_bins(self) -> int:
        n = 1
        for b in self.n_bins:
            n *= b
        return n

    def bin_of(self, day: float, cumulative_yield: float, soil_moisture: float,
               cumulative_irrigation: float) -> tuple[int, int, int, int]:
        """Bin tuple, clamping out-of-bounds values to the edge bins."""
        values = (day, cumulative_yield, soil_moisture, cumulative_irrigation)
        idx = []
        for v, (lo, _), w, n in zip(values, self.bounds, self.widths, self.n_bins):
            i = int(math.floor((v - lo) / w))
            idx.append(min(max(i, 0), n - 1))
        return tuple(idx)

    def bin_of_state(self, state: CropState) -> tuple[int, int, int, int]:
        return self.bin_of(state.day, state.cumulative_yield, state.root_zone_moisture,
                           state.cumulative_irrigation)

    def contains(self, bin_tuple: tuple[int, int, int, int]) -> bool:
        return bin_tuple in self.occupied

    def record(self, bin_tuple: tuple[int, int, int, int]) -> bool:
        """Mark a bin occupied; returns True if it was new."""
        new = bin_tuple not in self.occupied
        self.occupied.add(bin_tuple)
        return new


def record_visit(grid: CoverageGrid, state: CropState) -> CoverageGrid:
    grid.record(grid.bin_of_state(state))
    return grid


def coverage(grid: CoverageGrid) -> float:
    """Fraction of occupied bins, in [0, 1]."""
    return len(grid.occupied) / grid.total_bins


def union_coverage(grids: list[CoverageGrid]) -> float:
    """Coverage of the union of occupied bins (grids must share geometry)."""
    if not grids:
        raise ContractViolation("need at least one grid")
    base = grids[0]
    for g in grids[1:]:
        if g.n_bins != base.n_bins:
            raise ContractViolation("grids have different geometry")
    occupied = set()
    for g in grids:
        occupied |= g.occupied
    return len(occupied) / base.total_bins
