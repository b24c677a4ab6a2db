"""Full training orchestration.

One run = total_episodes episodes of the 200-day environment.  Per step the
agent sees a (possibly noise-injected) observation, acts, and records both
the economic reward and the novelty reward; the rollout buffer spans episode
boundaries and triggers an update whenever it fills.  Validation uses clean
observations and argmax actions on fixed seeds; the best five checkpoints
are kept and early stopping follows the min_delta/patience rule.

All randomness is drawn from named sub-streams of the run seed, so repeated
runs are bitwise identical and toggling one feature never shifts another's
draws.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn, noise, ppo, protocol, rnd, schedule
from .config import RunConfig
from .errors import ConfigurationError, ContractViolation
from .rng import stream, stream_seed
from .surrogate import (
    OBS_DIM, OBS_SCALE, N_ACTIONS, ObservedEnv, scenario_by_name,
)

VALIDATION_SEED_BASE = 1_000_000_000  # fixed: validation episode i uses BASE + i

STREAM_NAMES = (
    "policy-init", "rnd-init", "env-seed", "noise-temp", "noise-rain",
    "noise-moisture", "weather-perturb", "action-sample", "action-mask",
    "ppo-shuffle",
)

METRIC_COLUMNS = (
    "episode", "p", "alpha", "lambda_int", "phase", "score", "yield_kg_ha",
    "irrigation_mm", "nitrogen_kg_ha", "leached_kg_ha", "wue", "nue",
    "coverage", "intrinsic_mean", "policy_loss", "value_loss_ext",
    "value_loss_int", "entropy", "clip_fraction", "rnd_loss", "lr",
)


@dataclass
class CheckpointInfo:
    episode: int
    score: float
    path: str


@dataclass
class RunArtifacts:
    out_dir: Path
    metrics_path: Path
    metrics_rows: list[dict]
    checkpoints: list[CheckpointInfo]
    ensemble_manifest_path: Path
    coverage_grid: rnd.CoverageGrid
    stopped_at: int | None
    policy: ppo.PolicyNet
    validation_history: list[tuple[int, float]]


def make_env(cfg: RunConfig):
    if cfg.env_backend == "surrogate":
        scenario = scenario_by_name(cfg.scenario, **cfg.scenario_overrides)
        return ObservedEnv(scenario, cfg.weights)
    if cfg.env_backend == "external":
        if not cfg.env_command.strip():
            raise ConfigurationError("external backend needs [env] command")
        return protocol.RemoteEnv(command=cfg.env_command.split(),
                                  timeout_s=cfg.env_timeout_s)
    raise ConfigurationError(f"unknown env backend {cfg.env_backend!r}")


def validate(policy: ppo.PolicyNet, env, n_episodes: int,
             seeds: list[int] | None = None) -> float:
    """Mean episode score over clean argmax rollouts with fixed seeds."""
    if n_episodes < 1:
        raise ContractViolation("validation needs at least one episode")
    seeds = seeds if seeds is not None else [VALIDATION_SEED_BASE + i for i in range(n_episodes)]
    total = 0.0
    for seed in seeds[:n_episodes]:
        obs = env.reset(seed)
        done = False
        score = 0.0
        while not done:
            obs, reward, done, _ = env.step(policy.action(obs, deterministic=True))
            score += reward
        total += score
    return total / n_episodes


def early_stop_check(history: list[tuple[int, float]], patience: int,
                     min_delta: float) -> bool:
    """True iff nothing in the last ``patience`` episodes improved the prior
    best by at least ``min_delta``."""
    if not history:
        raise ContractViolation("history must be non-empty")
    latest_episode = history[-1][0]
    cutoff = latest_episode - patience
    prior = [s for e, s in history if e <= cutoff]
    if not prior:
        return False
    best_prior = max(prior)
    window = [s for e, s in history if e > cutoff]
    return not any(s >= best_prior + min_delta for s in window)


def ensemble_select(checkpoints: list[CheckpointInfo], keep: int = 5) -> list[CheckpointInfo]:
    """Highest validation scores; ties broken in favor of the later episode."""
    if not checkpoints:
        raise ContractViolation("need at least one checkpoint")
    ranked = sorted(checkpoints, key=lambda c: (-c.score, -c.episode))
    return ranked[:keep]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def train(cfg: RunConfig, out_dir: str | Path) -> RunArtifacts:
    """Run one seed to completion (or early stop) and write all artifacts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = cfg.seed
    env = make_env(cfg)
    surrogate_backend = getattr(env, "supports_state_access", False)

    policy = ppo.PolicyNet.create(
        stream(root, "policy-init"),
        hidden_units=cfg.ppo.hidden_units, hidden_layers=cfg.ppo.hidden_layers)
    adam = nn.AdamState.for_params(policy.params())
    shuffle_rng = stream(root, "ppo-shuffle")

    coupled = cfg.mode == "coupled"
    rnd_nets = rnd.RndNets(OBS_DIM, cfg.rnd, stream(root, "rnd-init")) if cfg.rnd_enabled else None
    # RND consumes the same fixed observation scaling as the policy, with the
    # running normalizer (identity during warmup) on top.
    normalizer = rnd.ObservationNormalizer(OBS_DIM, cfg.rnd.normalizer_warmup)
    intrinsic_std = rnd.ScalarRunningStd()
    grid = rnd.CoverageGrid()
    buffer = ppo.RolloutBuffer(cfg.ppo.rollout_steps, OBS_DIM)

    metrics_rows: list[dict] = []
    validation_history: list[tuple[int, float]] = []
    checkpoints: list[CheckpointInfo] = []
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    last_stats: ppo.UpdateStats | None = None
    last_rnd_loss: float | None = None
    last_lr: float | None = None
    stopped_at: int | None = None

    n_updates = 0

    def run_update(bootstrap_ext: float, bootstrap_int: float, p: float,
                   lam_now: float, rnd_trainable: bool) -> None:
        nonlocal last_stats, last_rnd_loss, last_lr, n_updates
        if buffer.size < 2:
            return
        buffer.finalize(bootstrap_ext, bootstrap_int, lam_now, cfg.ppo)
        lr = nn.linear_lr(cfg.ppo.learning_rate, p)
        last_stats = ppo.ppo_update(
            policy, buffer, cfg.ppo, adam, lr, shuffle_rng,
            train_policy=n_updates >= cfg.ppo.critic_warmup_updates)
        n_updates += 1
        last_lr = lr
        if rnd_trainable and rnd_nets is not None:
            batch = buffer.rnd_obs[:buffer.size][buffer.rnd_mask[:buffer.size]]
            if batch.shape[0] > 0:
                last_rnd_loss = rnd.train_predictor(rnd_nets, batch)
        buffer.clear()

    for episode in range(cfg.total_episodes):
        sched = schedule.schedule_state(episode, cfg.pga)
        applied_alpha = sched.alpha if cfg.augmentation_enabled else 0.0
        lam = 0.0
        if cfg.rnd_enabled and coupled:
            lam = cfg.rnd_initial_weight * rnd.lambda_int(
                sched.p, cfg.rnd.decay_start, cfg.rnd.decay_end)
        rnd_active = cfg.rnd_enabled and (not coupled or lam > 0.0)

        env_seed = stream_seed(root, "env-seed", episode)
        obs = env.reset(env_seed)
        weather_rng = stream(root, "weather-perturb", episode)
        if surrogate_backend and applied_alpha > 0.0:
            env.perturb_weather(
                lambda s: schedule.weather_perturbation(applied_alpha, s, weather_rng))
            obs = env.observe_current()
        noise_streams = noise.NoiseStreams(
            temp=stream(root, "noise-temp", episode),
            rain=stream(root, "noise-rain", episode),
            moisture=stream(root, "noise-moisture", episode),
        )
        act_rng = stream(root, "action-sample", episode)
        mask_rng = stream(root, "action-mask", episode)

        novel = grid.record(grid.bin_of(obs[0], obs[8], obs[4], obs[9]))
        score = 0.0
        intrinsic_sum = 0.0
        steps = 0
        done = False
        info: dict = {}
        while not done:
            noisy = noise.inject(obs, applied_alpha, cfg.noise, noise_streams)
            if buffer.full:
                b_ext, b_int = ppo.values(policy, noisy)
                run_update(b_ext, b_int, sched.p, lam, rnd_active)
            result = ppo.act(policy, noisy, act_rng)
            action, log_prob = result.action, result.log_prob
            if applied_alpha > 0.0 and schedule.action_mask_gate(applied_alpha, mask_rng,
                                                                 cfg.pga):
                action = schedule.resample_masked_action(action, N_ACTIONS, mask_rng)
                log_prob = float(result.log_probs[action])

            if rnd_active:
                scaled = obs * OBS_SCALE
                x = np.clip(normalizer.normalize(scaled), -5.0, 5.0)
                raw_int = rnd.intrinsic_reward(rnd_nets, x)
                if cfg.rnd.novelty_bonus_enabled and novel:
                    raw_int *= cfg.rnd.novelty_bonus
                intrinsic_std.update(raw_int)
                reward_int = intrinsic_std.scale(raw_int)
                normalizer.update(scaled)
            else:
                x = np.zeros(OBS_DIM)
                raw_int = 0.0
                reward_int = 0.0

            next_obs, reward_ext, done, info = env.step(action)
            if surrogate_backend and applied_alpha > 0.0 and not done:
                env.perturb_weather(
                    lambda s: schedule.weather_perturbation(applied_alpha, s, weather_rng))
                next_obs = env.observe_current()
            novel = grid.record(grid.bin_of(next_obs[0], next_obs[8], next_obs[4],
                                            next_obs[9]))
            buffer.add(noisy, x, action, log_prob,
                       reward_ext * cfg.ppo.reward_scale, reward_int,
                       result.value_ext, result.value_int, done, rnd_active=rnd_active)
            score += reward_ext
            intrinsic_sum += raw_int
            steps += 1
            obs = next_obs

        final_yield = info.get("yield_kg_ha", obs[8])
        irrigation_total = obs[9]
        nitrogen_total = obs[10]
        metrics_rows.append({
            "episode": episode,
            "p": sched.p,
            "alpha": applied_alpha,
            "lambda_int": lam,
            "phase": sched.phase,
            "score": score,
            "yield_kg_ha": final_yield,
            "irrigation_mm": irrigation_total,
            "nitrogen_kg_ha": nitrogen_total,
            "leached_kg_ha": obs[21],
            "wue": final_yield / irrigation_total if irrigation_total > 0 else None,
            "nue": final_yield / nitrogen_total if nitrogen_total > 0 else None,
            "coverage": rnd.coverage(grid),
            "intrinsic_mean": intrinsic_sum / steps if steps else 0.0,
            "policy_loss": last_stats.policy_loss if last_stats else None,
            "value_loss_ext": last_stats.value_loss_ext if last_stats else None,
            "value_loss_int": last_stats.value_loss_int if last_stats else None,
            "entropy": last_stats.entropy if last_stats else None,
            "clip_fraction": last_stats.clip_fraction if last_stats else None,
            "rnd_loss": last_rnd_loss,
            "lr": last_lr,
        })

        if (episode + 1) % cfg.validation.interval == 0:
            val_score = validate(policy, env, cfg.validation.episodes)
            validation_history.append((episode + 1, val_score))
            path = ckpt_dir / f"episode_{episode + 1:04d}.ckpt"
            ppo.save_policy(path, policy)
            checkpoints.append(CheckpointInfo(episode + 1, val_score, str(path)))
            top = ensemble_select(checkpoints, cfg.validation.keep_checkpoints)
            for c in checkpoints:
                if c not in top and Path(c.path).exists():
                    Path(c.path).unlink()
            checkpoints = top
            if early_stop_check(validation_history, cfg.validation.patience,
                                cfg.validation.min_delta):
                stopped_at = episode + 1
                break

    # flush the residual buffer so every step lands in exactly one update
    if buffer.size >= 2:
        final_sched = schedule.schedule_state(stopped_at - 1 if stopped_at else
                                              cfg.total_episodes - 1, cfg.pga)
        final_lam = 0.0
        if cfg.rnd_enabled and coupled:
            final_lam = cfg.rnd_initial_weight * rnd.lambda_int(
                final_sched.p, cfg.rnd.decay_start, cfg.rnd.decay_end)
        run_update(0.0, 0.0, final_sched.p, final_lam,
                   cfg.rnd_enabled and (not coupled or final_lam > 0.0))

    if not checkpoints:
        path = ckpt_dir / f"episode_{len(metrics_rows):04d}.ckpt"
        ppo.save_policy(path, policy)
        score = validate(policy, env, cfg.validation.episodes)
        checkpoints = [CheckpointInfo(len(metrics_rows), score, str(path))]
        validation_history.append((len(metrics_rows), score))

    metrics_path = out / "metrics.csv"
    with open(metrics_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(METRIC_COLUMNS)
        for row in metrics_rows:
            writer.writerow([_fmt(row[c]) for c in METRIC_COLUMNS])

    manifest_path = out / "ensemble.json"
    manifest = {
        "seed": cfg.seed,
        "config_sha256": cfg.config_hash,
        "stopped_at": stopped_at,
        "members": [
            {"episode": c.episode, "validation_score": c.score, "path": c.path}
            for c in ensemble_select(checkpoints, cfg.validation.keep_checkpoints)
        ],
    }
    with open(manifest_path, "w") as f:
        json.dump(manifest, f, indent=2)

    with open(out / "coverage.json", "w") as f:
        json.dump({
            "widths": list(grid.widths),
            "bounds": [list(b) for b in grid.bounds],
            "occupied": sorted(list(b) for b in grid.occupied),
        }, f)

    with open(out / "rng_audit.json", "w") as f:
        json.dump({"root_seed": root, "streams": list(STREAM_NAMES),
                   "validation_seed_base": VALIDATION_SEED_BASE}, f, indent=2)

    with open(out / "config.cfg", "w") as f:
        from .config import dump_config
        f.write(dump_config(cfg))

    if hasattr(env, "close"):
        env.close()

    return RunArtifacts(
        out_dir=out,
        metrics_path=metrics_path,
        metrics_rows=metrics_rows,
        checkpoints=ensemble_select(checkpoints, cfg.validation.keep_checkpoints),
        ensemble_manifest_path=manifest_path,
        coverage_grid=grid,
        stopped_at=stopped_at,
        policy=policy,
        validation_history=validation_history,
    )


def load_coverage(path) -> rnd.CoverageGrid:
    """Rebuild a coverage grid from a run's coverage.json."""
    with open(path) as f:
        data = json.load(f)
    grid = rnd.CoverageGrid(widths=tuple(data["widths"]),
                            bounds=tuple(tuple(b) for b in data["bounds"]))
    grid.occupied = {tuple(b) for b in data["occupied"]}
    return grid
