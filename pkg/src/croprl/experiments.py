"""Desk-scale experiment drivers: multi-seed training plus the directional
comparisons (learning vs the fixed baseline, robustness retention, and
exploration coverage).  Used by the scripts and the acceptance suite."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ppo, rnd, trainer
from .config import RunConfig, default_config
from .evaluation import evaluate
from .surrogate import FixedManagementPolicy, scenario_by_name


def desk_config(scenario: str = "florida", episodes: int = 300, mode: str = "coupled",
                rnd_enabled: bool = True, augmentation: bool = False,
                seed: int = 42) -> RunConfig:
    """A default config rescaled to a desk-size episode budget."""
    cfg = default_config(scenario)
    cfg = dataclasses.replace(cfg, seed=seed, total_episodes=episodes, mode=mode,
                              rnd_enabled=rnd_enabled, augmentation_enabled=augmentation)
    cfg.pga = dataclasses.replace(cfg.pga, total_episodes=episodes)
    cfg.ppo = dataclasses.replace(cfg.ppo, mode=mode)
    return cfg


def train_many(cfg: RunConfig, seeds: list[int], out_root: Path,
               workers: int = 2) -> list[dict]:
    """Independent runs per seed (parallel processes); saves final policies."""
    jobs = []
    for seed in seeds:
        run_cfg = cfg.with_seed(seed)
        jobs.append((run_cfg, out_root / str(seed)))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_train_one_with_final, jobs))
    else:
        results = [_train_one_with_final(j) for j in jobs]
    return results


def _train_one_with_final(args) -> dict:
    cfg, out_dir = args
    artifacts = trainer.train(cfg, out_dir)
    final_path = Path(artifacts.out_dir) / "final_policy.ckpt"
    ppo.save_policy(final_path, artifacts.policy)
    best = artifacts.checkpoints[0]
    return {
        "seed": cfg.seed,
        "out_dir": str(artifacts.out_dir),
        "best_checkpoint": best.path,
        "best_validation": best.score,
        "final_policy_path": str(final_path),
        "coverage_path": str(Path(artifacts.out_dir) / "coverage.json"),
        "stopped_at": artifacts.stopped_at,
    }


EVAL_SEEDS = [42, 123, 456, 789, 1024]


@dataclass
class LearningResult:
    baseline_score: float
    per_seed_scores: dict
    ratios: dict
    passing_seeds: int

    def summary(self) -> str:
        lines = [f"fixed-management baseline: {self.baseline_score:.2f}"]
        for seed, score in self.per_seed_scores.items():
            lines.append(f"  seed {seed}: {score:9.2f}  (x{self.ratios[seed]:.3f})")
        lines.append(f"seeds at >= 1.10x baseline: {self.passing_seeds}/{len(self.ratios)}")
        return "\n".join(lines)


def learning_experiment(out_root: Path, seeds: list[int], episodes: int = 300,
                        scenario: str = "florida", workers: int = 2,
                        eval_episodes: int = 20) -> LearningResult:
    """Plain-PPO desk training vs the fixed-management calendar."""
    cfg = desk_config(scenario, episodes, mode="additive", rnd_enabled=False,
                      augmentation=False)
    runs = train_many(cfg, seeds, Path(out_root), workers)
    scen = scenario_by_name(scenario)
    baseline = evaluate(FixedManagementPolicy(), scen, "clean", eval_episodes,
                        EVAL_SEEDS).score_mean
    per_seed, ratios = {}, {}
    for run in runs:
        policy = ppo.load_policy(run["best_checkpoint"])
        rec = evaluate(policy, scen, "clean", eval_episodes, EVAL_SEEDS)
        per_seed[run["seed"]] = rec.score_mean
        ratios[run["seed"]] = rec.score_mean / baseline
    passing = sum(1 for r in ratios.values() if r >= 1.10)
    return LearningResult(baseline, per_seed, ratios, passing)


@dataclass
class RobustnessResult:
    retention_augmented: float
    retention_clean_trained: float
    per_seed: dict

    @property
    def gap_pp(self) -> float:
        return 100.0 * (self.retention_augmented - self.retention_clean_trained)

    def summary(self) -> str:
        lines = [
            f"combined-condition retention, augmented: {100 * self.retention_augmented:.1f}%",
            f"combined-condition retention, clean-trained: {100 * self.retention_clean_trained:.1f}%",
            f"gap: {self.gap_pp:.1f} pp",
        ]
        for seed, (ra, rc) in self.per_seed.items():
            lines.append(f"  seed {seed}: augmented {100 * ra:.1f}%  clean-trained {100 * rc:.1f}%")
        return "\n".join(lines)


def robustness_experiment(out_root: Path, seeds: list[int], episodes: int = 300,
                          scenario: str = "florida", workers: int = 2,
                          eval_episodes: int = 20) -> RobustnessResult:
    """Final policies of augmented vs clean training, compared under the
    combined perturbation; retention vs each policy's own clean score."""
    out_root = Path(out_root)
    cfg_aug = desk_config(scenario, episodes, mode="coupled", rnd_enabled=True,
                          augmentation=True)
    cfg_clean = desk_config(scenario, episodes, mode="coupled", rnd_enabled=True,
                            augmentation=False)
    runs_aug = train_many(cfg_aug, seeds, out_root / "augmented", workers)
    runs_clean = train_many(cfg_clean, seeds, out_root / "clean", workers)
    scen = scenario_by_name(scenario)

    def retention(run) -> float:
        policy = ppo.load_policy(run["final_policy_path"])
        clean = evaluate(policy, scen, "clean", eval_episodes, EVAL_SEEDS)
        combined = evaluate(policy, scen, "combined", eval_episodes, EVAL_SEEDS)
        return combined.score_mean / clean.score_mean

    per_seed = {}
    ra_list, rc_list = [], []
    for run_a, run_c in zip(runs_aug, runs_clean):
        ra = retention(run_a)
        rc = retention(run_c)
        per_seed[run_a["seed"]] = (ra, rc)
        ra_list.append(ra)
        rc_list.append(rc)
    return RobustnessResult(float(np.mean(ra_list)), float(np.mean(rc_list)), per_seed)


@dataclass
class ExplorationResult:
    coverage_coupled: float
    coverage_plain: float

    def summary(self) -> str:
        return (f"union coverage, coupled exploration: {100 * self.coverage_coupled:.2f}%\n"
                f"union coverage, no-exploration ppo:  {100 * self.coverage_plain:.2f}%")


def exploration_experiment(out_root: Path, seeds: list[int], episodes: int = 120,
                           scenario: str = "florida", workers: int = 2) -> ExplorationResult:
    """Union state-bin coverage: coupled novelty exploration vs plain PPO at
    an equal episode budget."""
    out_root = Path(out_root)
    cfg_rnd = desk_config(scenario, episodes, mode="coupled", rnd_enabled=True,
                          augmentation=False)
    cfg_plain = desk_config(scenario, episodes, mode="additive", rnd_enabled=False,
                            augmentation=False)
    runs_rnd = train_many(cfg_rnd, seeds, out_root / "coupled", workers)
    runs_plain = train_many(cfg_plain, seeds, out_root / "plain", workers)
    grids_rnd = [trainer.load_coverage(r["coverage_path"]) for r in runs_rnd]
    grids_plain = [trainer.load_coverage(r["coverage_path"]) for r in runs_plain]
    return ExplorationResult(rnd.union_coverage(grids_rnd),
                             rnd.union_coverage(grids_plain))
