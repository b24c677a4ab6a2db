"""Evaluation procedures: perturbed-observation sweeps, per-channel
sensitivity tables, robustness comparisons, and coverage aggregation.

Perturbations apply to the agent's observations only; the environment
dynamics never see them.  All rollouts are deterministic argmax with RNG
streams derived from the evaluation seeds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import noise, rnd
from .errors import ContractViolation
from .rng import stream, stream_seed
from .surrogate import ObservedEnv, RewardWeights, ScenarioConfig

EVAL_EPISODES_DEFAULT = 20  # per condition per seed; framework default


@dataclass
class MetricsRecord:
    condition: str
    score_mean: float
    score_std: float
    yield_mean: float
    yield_std: float
    wue_mean: float | None
    wue_std: float | None
    nue_mean: float | None
    nue_std: float | None
    n_samples: int
    per_seed_scores: dict = field(default_factory=dict)

    def retention(self, clean: "MetricsRecord") -> float:
        return self.score_mean / clean.score_mean


def _rollout(policy, env: ObservedEnv, env_seed: int, condition: str,
             perturb_rng) -> tuple[float, float, float | None, float | None]:
    obs = env.reset(env_seed)
    done = False
    score = 0.0
    while not done:
        seen = noise.eval_perturbation(obs, condition, perturb_rng)
        obs, reward, done, info = env.step(policy.action(seen, deterministic=True))
        score += reward
    total_yield = info["yield_kg_ha"]
    irrigation = obs[9]
    nitrogen = obs[10]
    wue = total_yield / irrigation if irrigation > 0 else None
    nue = total_yield / nitrogen if nitrogen > 0 else None
    return score, total_yield, wue, nue


def _stats(values: list[float | None]) -> tuple[float | None, float | None]:
    defined = [v for v in values if v is not None]
    if not defined:
        return None, None
    arr = np.array(defined)
    return float(arr.mean()), float(arr.std())


def evaluate(policy, scenario: ScenarioConfig, condition: str, n_episodes: int,
             seeds: list[int], weights: RewardWeights | None = None) -> MetricsRecord:
    """Aggregate argmax rollouts across episodes x seeds for one condition."""
    if condition not in noise.EVAL_CONDITIONS:
        raise ContractViolation(f"unknown condition {condition!r}")
    if n_episodes < 1 or not seeds:
        raise ContractViolation("need n_episodes >= 1 and at least one seed")
    env = ObservedEnv(scenario, weights)
    scores, yields, wues, nues = [], [], [], []
    per_seed: dict[int, float] = {}
    for seed in seeds:
        seed_scores = []
        for i in range(n_episodes):
            env_seed = stream_seed(seed, "eval-env", i)
            perturb_rng = stream(seed, "eval-noise", noise.EVAL_CONDITIONS.index(condition), i)
            score, y, wue, nue = _rollout(policy, env, env_seed, condition, perturb_rng)
            scores.append(score)
            yields.append(y)
            wues.append(wue)
            nues.append(nue)
            seed_scores.append(score)
        per_seed[seed] = float(np.mean(seed_scores))
    wue_mean, wue_std = _stats(wues)
    nue_mean, nue_std = _stats(nues)
    return MetricsRecord(
        condition=condition,
        score_mean=float(np.mean(scores)),
        score_std=float(np.std(scores)),
        yield_mean=float(np.mean(yields)),
        yield_std=float(np.std(yields)),
        wue_mean=wue_mean, wue_std=wue_std,
        nue_mean=nue_mean, nue_std=nue_std,
        n_samples=len(scores),
        per_seed_scores=per_seed,
    )


# ---------------------------------------------------------------------------
# Sensitivity analysis: each channel independently vs the clean reference
# ---------------------------------------------------------------------------

SENSITIVITY_CONDITIONS = ("temp", "rain", "moisture", "solar")


@dataclass
class SensitivityRow:
    condition: str
    magnitude: str
    score_reduction_pct: float
    yield_reduction_pct: float
    score_mean: float
    score_std: float


@dataclass
class SensitivityTable:
    clean: MetricsRecord
    rows: list[SensitivityRow]

    def text(self) -> str:
        lines = [
            f"{'noise type':<14}{'magnitude':<12}{'score red.':>12}{'yield red.':>12}",
            f"{'clean':<14}{'-':<12}{'-':>12}{'-':>12}"
            f"   (score {self.clean.score_mean:.2f} +- {self.clean.score_std:.2f}, "
            f"n={self.clean.n_samples})",
        ]
        for r in self.rows:
            lines.append(f"{r.condition:<14}{r.magnitude:<12}"
                         f"{r.score_reduction_pct:>11.1f}%{r.yield_reduction_pct:>11.1f}%")
        return "\n".join(lines)


_MAGNITUDES = {"temp": "+-2 degC", "rain": "+-10%", "moisture": "+-0.02", "solar": "+-10%"}


def sensitivity_analysis(policy, scenario: ScenarioConfig, seeds: list[int],
                         n_episodes: int = EVAL_EPISODES_DEFAULT,
                         weights: RewardWeights | None = None) -> SensitivityTable:
    """Clean reference plus the four single-channel conditions."""
    clean = evaluate(policy, scenario, "clean", n_episodes, seeds, weights)
    rows = []
    for condition in SENSITIVITY_CONDITIONS:
        rec = evaluate(policy, scenario, condition, n_episodes, seeds, weights)
        rows.append(SensitivityRow(
            condition=condition,
            magnitude=_MAGNITUDES[condition],
            score_reduction_pct=100.0 * (clean.score_mean - rec.score_mean) / clean.score_mean,
            yield_reduction_pct=100.0 * (clean.yield_mean - rec.yield_mean) / clean.yield_mean,
            score_mean=rec.score_mean,
            score_std=rec.score_std,
        ))
    return SensitivityTable(clean=clean, rows=rows)


# ---------------------------------------------------------------------------
# Robustness comparison of two policies under shared conditions
# ---------------------------------------------------------------------------

ROBUSTNESS_CONDITIONS = ("clean", "temp", "rain", "combined")


@dataclass
class RobustnessReport:
    labels: tuple[str, str]
    records: dict        # condition -> (MetricsRecord, MetricsRecord)

    def retention(self, condition: str, which: int) -> float:
        clean = self.records["clean"][which]
        return self.records[condition][which].retention(clean)

    def text(self) -> str:
        a, b = self.labels
        lines = [f"{'condition':<14}{a:>24}{b:>24}"]
        for cond in ROBUSTNESS_CONDITIONS:
            ra, rb = self.records[cond]
            pa = 100.0 * self.retention(cond, 0)
            pb = 100.0 * self.retention(cond, 1)
            lines.append(
                f"{cond:<14}"
                f"{ra.score_mean:>12.2f} ({pa:>5.1f}%)"
                f"{rb.score_mean:>12.2f} ({pb:>5.1f}%)")
        lines.append(f"{'(std)':<14}"
                     f"{self.records['clean'][0].score_std:>20.2f}"
                     f"{self.records['clean'][1].score_std:>24.2f}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        out = {"labels": list(self.labels), "conditions": {}}
        for cond, (ra, rb) in self.records.items():
            out["conditions"][cond] = {
                self.labels[0]: {"score_mean": ra.score_mean, "score_std": ra.score_std,
                                 "retention": self.retention(cond, 0),
                                 "n_samples": ra.n_samples},
                self.labels[1]: {"score_mean": rb.score_mean, "score_std": rb.score_std,
                                 "retention": self.retention(cond, 1),
                                 "n_samples": rb.n_samples},
            }
        return out


def robustness_report(policy_a, policy_b, scenario: ScenarioConfig, seeds: list[int],
                      n_episodes: int = EVAL_EPISODES_DEFAULT,
                      weights: RewardWeights | None = None,
                      labels: tuple[str, str] = ("policy_a", "policy_b")) -> RobustnessReport:
    """Four-condition comparison; retention is against each policy's own clean score."""
    records = {}
    for cond in ROBUSTNESS_CONDITIONS:
        ra = evaluate(policy_a, scenario, cond, n_episodes, seeds, weights)
        rb = evaluate(policy_b, scenario, cond, n_episodes, seeds, weights)
        records[cond] = (ra, rb)
    return RobustnessReport(labels=labels, records=records)


# ---------------------------------------------------------------------------
# Coverage aggregation across runs
# ---------------------------------------------------------------------------

def coverage_comparison(grids_by_config: dict[str, list[rnd.CoverageGrid]]) -> dict[str, float]:
    """Union of occupied bins across seeds per configuration."""
    if not grids_by_config:
        raise ContractViolation("need at least one configuration")
    return {name: rnd.union_coverage(grids) for name, grids in grids_by_config.items()}


def write_records_csv(path, records: list[MetricsRecord]) -> None:
    import csv
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["condition", "score_mean", "score_std", "yield_mean", "yield_std",
                    "wue_mean", "wue_std", "nue_mean", "nue_std", "n_samples"])
        for r in records:
            w.writerow([r.condition, r.score_mean, r.score_std, r.yield_mean, r.yield_std,
                        "" if r.wue_mean is None else r.wue_mean,
                        "" if r.wue_std is None else r.wue_std,
                        "" if r.nue_mean is None else r.nue_mean,
                        "" if r.nue_std is None else r.nue_std,
                        r.n_samples])


def write_json(path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)
