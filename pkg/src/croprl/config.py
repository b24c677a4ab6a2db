"""Run configuration: INI-style text files with comments, plus bundled defaults.

The emitted default configs double as experiment documentation: every value
either comes from the calibrated hyperparameter set or is explicitly flagged
in-file as a framework default.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .noise import NoiseConfig
from .ppo import PpoConfig
from .rnd import RndConfig
from .schedule import PgaConfig
from .surrogate import RewardWeights, SCENARIOS


@dataclass
class ValidationConfig:
    interval: int = 50
    episodes: int = 5
    patience: int = 300
    min_delta: float = 20.0
    keep_checkpoints: int = 5

    def __post_init__(self) -> None:
        if self.patience <= 0 or self.keep_checkpoints < 1 or self.episodes < 1:
            raise ConfigurationError("patience, keep_checkpoints and episodes must be positive")


@dataclass
class RunConfig:
    seed: int = 42
    seeds: tuple[int, ...] = (42, 123, 456, 789, 1024)
    scenario: str = "florida"
    scenario_overrides: dict = field(default_factory=dict)
    total_episodes: int = 2000
    mode: str = "coupled"
    rnd_enabled: bool = True
    augmentation_enabled: bool = True
    ppo: PpoConfig = field(default_factory=PpoConfig)
    pga: PgaConfig = field(default_factory=PgaConfig)
    rnd: RndConfig = field(default_factory=RndConfig)
    rnd_initial_weight: float = 1.0
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    weights: RewardWeights = field(default_factory=RewardWeights)
    env_backend: str = "surrogate"
    env_command: str = ""
    env_timeout_s: float = 30.0
    config_text: str = ""

    def with_seed(self, seed: int) -> "RunConfig":
        import dataclasses
        return dataclasses.replace(self, seed=seed)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.config_text.encode("utf-8")).hexdigest()


def _parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)


def parse_config(text: str) -> RunConfig:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config parse failure: {exc}") from exc

    def get(section, key, conv, default):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key).strip()
        if raw == "":
            return default
        try:
            if conv is bool:
                return raw.lower() in ("1", "true", "yes", "on")
            return conv(raw)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for [{section}] {key}: {raw!r}") from exc

    try:
        total_episodes = get("run", "total_episodes", int, 2000)
        seeds_raw = get("run", "seeds", str, "42, 123, 456, 789, 1024")
        seeds = tuple(int(s) for s in seeds_raw.replace(",", " ").split())
        ppo = PpoConfig(
            learning_rate=get("ppo", "learning_rate", float, 3e-4),
            gamma=get("ppo", "gamma", float, 0.99),
            gae_lambda=get("ppo", "gae_lambda", float, 0.95),
            clip_epsilon=get("ppo", "clip_epsilon", float, 0.2),
            rollout_steps=get("ppo", "rollout_steps", int, 2048),
            minibatch_size=get("ppo", "minibatch_size", int, 64),
            epochs=get("ppo", "epochs", int, 10),
            entropy_coef=get("ppo", "entropy_coef", float, 0.01),
            value_coef=get("ppo", "value_coef", float, 0.5),
            max_grad_norm=get("ppo", "max_grad_norm", float, 0.5),
            hidden_units=get("ppo", "hidden_units", int, 256),
            hidden_layers=get("ppo", "hidden_layers", int, 3),
            mode=get("run", "mode", str, "coupled"),
            additive_intrinsic_weight=get("ppo", "additive_intrinsic_weight", float, 0.1),
            reward_scale=get("ppo", "reward_scale", float, 5e-4),
            target_kl=get("ppo", "target_kl", float, 0.08),
            critic_warmup_updates=get("ppo", "critic_warmup", int, 2),
        )
        pga = PgaConfig(
            total_episodes=total_episodes,
            phase1_end_p=get("pga", "phase1_end", float, 0.4),
            phase2_end_p=get("pga", "phase2_end", float, 0.6),
            mask_prob_scale=get("pga", "action_mask_scale", float, 0.1),
        )
        rnd = RndConfig(
            embedding_dim=get("rnd", "embedding_dim", int, 64),
            hidden_units=get("rnd", "hidden_units", int, 256),
            learning_rate=get("rnd", "learning_rate", float, 3e-4),
            normalizer_warmup=get("rnd", "normalizer_warmup", int, 1000),
            novelty_bonus=get("rnd", "novelty_bonus", float, 2.0),
            novelty_bonus_enabled=get("rnd", "novelty_bonus_enabled", bool, True),
            decay_start=get("rnd", "decay_start", float, 0.3),
            decay_end=get("rnd", "decay_end", float, 0.7),
        )
        noise = NoiseConfig(
            temp_threshold=get("noise", "temp_threshold", float, 0.3),
            rain_threshold=get("noise", "rain_threshold", float, 0.5),
            moisture_threshold=get("noise", "moisture_threshold", float, 0.7),
            temp_sigma_base=get("noise", "temp_sigma", float, 2.0),
            rain_bias_scale=get("noise", "rain_bias_scale", float, 0.05),
            rain_noise_param=get("noise", "rain_noise_param", float, 0.01),
            moisture_noise_param=get("noise", "moisture_noise_param", float, 0.02),
            rain_param_interpretation=get("noise", "param_interpretation", str, "std"),
            moisture_param_interpretation=get("noise", "param_interpretation", str, "std"),
        )
        validation = ValidationConfig(
            interval=get("validation", "interval", int, 50),
            episodes=get("validation", "episodes", int, 5),
            patience=get("validation", "patience", int, 300),
            min_delta=get("validation", "min_delta", float, 20.0),
            keep_checkpoints=get("validation", "keep_checkpoints", int, 5),
        )
        weights = RewardWeights(
            w1_yield=get("reward", "yield_per_kg", float, 0.158),
            w2_nitrogen=get("reward", "nitrogen_per_kg", float, 0.79),
            w3_irrigation=get("reward", "irrigation_per_mm", float, 1.1),
            w4_leaching=get("reward", "leaching_per_kg", float, 0.011),
        )
        scenario = get("run", "scenario", str, "florida")
        if scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {scenario!r}")
        overrides = {}
        if cp.has_section("scenario"):
            for key, raw in cp.items("scenario"):
                raw = raw.strip()
                overrides[key] = int(raw) if raw.lstrip("+-").isdigit() else float(raw)
        return RunConfig(
            seed=seeds[0] if seeds else 42,
            seeds=seeds,
            scenario=scenario,
            scenario_overrides=overrides,
            total_episodes=total_episodes,
            mode=ppo.mode,
            rnd_enabled=get("run", "rnd", bool, True),
            augmentation_enabled=get("run", "augmentation", bool, True),
            ppo=ppo,
            pga=pga,
            rnd=rnd,
            rnd_initial_weight=get("rnd", "initial_weight", float, 1.0),
            noise=noise,
            validation=validation,
            weights=weights,
            env_backend=get("env", "backend", str, "surrogate"),
            env_command=get("env", "command", str, ""),
            env_timeout_s=get("env", "timeout_s", float, 30.0),
            config_text=text,
        )
    except ConfigurationError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigurationError(f"config parse failure: {exc}") from exc


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


_DEFAULT_TEMPLATE = """\
# croprl run configuration: {scenario} maize scenario.
# Keys marked "framework default" are artifact choices; everything else
# follows the calibrated hyperparameter set.

[run]
scenario = {scenario}
seeds = 42, 123, 456, 789, 1024
total_episodes = 2000
mode = coupled
rnd = true
augmentation = true

[ppo]
learning_rate = 3e-4          # with linear decay over progress
gamma = 0.99
gae_lambda = 0.95
clip_epsilon = 0.2
rollout_steps = 2048
minibatch_size = 64
hidden_layers = 3
hidden_units = 256
epochs = 10                   # framework default
entropy_coef = 0.01           # framework default
value_coef = 0.5              # framework default
max_grad_norm = 0.5           # framework default
reward_scale = 5e-4           # framework default (optimizer-side only)
target_kl = 0.08              # framework default
critic_warmup = 2             # framework default
additive_intrinsic_weight = 0.1

[pga]
phase1_end = 0.4
phase2_end = 0.6
max_alpha = 1.0
action_mask_scale = 0.1

[rnd]
decay_start = 0.3
decay_end = 0.7
initial_weight = 1.0
learning_rate = 3e-4
embedding_dim = 64            # framework default
hidden_units = 256
normalizer_warmup = 1000      # framework default
novelty_bonus = 2.0           # framework default
novelty_bonus_enabled = true  # framework default

[noise]
temp_threshold = 0.3
rain_threshold = 0.5
moisture_threshold = 0.7
temp_sigma = 2.0
rain_bias_scale = 0.05
rain_noise_param = 0.01
moisture_noise_param = 0.02
param_interpretation = std    # framework default

[validation]
interval = 50                 # framework default
episodes = 5                  # framework default
patience = 300
min_delta = 20.0
keep_checkpoints = 5

[reward]
yield_per_kg = 0.158
nitrogen_per_kg = 0.79
irrigation_per_mm = 1.1
leaching_per_kg = 0.011       # framework default

[env]
backend = surrogate
command =
timeout_s = 30.0
"""


def default_configs() -> dict[str, str]:
    """Bundled Florida and Zaragoza configs."""
    return {name: _DEFAULT_TEMPLATE.format(scenario=name) for name in ("florida", "zaragoza")}


def default_config(name: str) -> RunConfig:
    try:
        text = default_configs()[name]
    except KeyError:
        raise ConfigurationError(f"no default config named {name!r}")
    return parse_config(text)


def dump_config(cfg: RunConfig) -> str:
    """The resolved config as text (the original text when parsed from one)."""
    if cfg.config_text:
        return cfg.config_text
    buf = io.StringIO()
    cp = _parser()
    cp["run"] = {
        "scenario": cfg.scenario,
        "seeds": ", ".join(str(s) for s in cfg.seeds),
        "total_episodes": str(cfg.total_episodes),
        "mode": cfg.mode,
        "rnd": str(cfg.rnd_enabled).lower(),
        "augmentation": str(cfg.augmentation_enabled).lower(),
    }
    cp["ppo"] = {
        "learning_rate": repr(cfg.ppo.learning_rate),
        "gamma": repr(cfg.ppo.gamma),
        "gae_lambda": repr(cfg.ppo.gae_lambda),
        "clip_epsilon": repr(cfg.ppo.clip_epsilon),
        "rollout_steps": str(cfg.ppo.rollout_steps),
        "minibatch_size": str(cfg.ppo.minibatch_size),
        "epochs": str(cfg.ppo.epochs),
        "entropy_coef": repr(cfg.ppo.entropy_coef),
        "value_coef": repr(cfg.ppo.value_coef),
        "max_grad_norm": repr(cfg.ppo.max_grad_norm),
        "reward_scale": repr(cfg.ppo.reward_scale),
        "target_kl": repr(cfg.ppo.target_kl),
        "critic_warmup": str(cfg.ppo.critic_warmup_updates),
        "hidden_units": str(cfg.ppo.hidden_units),
        "hidden_layers": str(cfg.ppo.hidden_layers),
        "additive_intrinsic_weight": repr(cfg.ppo.additive_intrinsic_weight),
    }
    cp["pga"] = {
        "phase1_end": repr(cfg.pga.phase1_end_p),
        "phase2_end": repr(cfg.pga.phase2_end_p),
        "action_mask_scale": repr(cfg.pga.mask_prob_scale),
    }
    cp["rnd"] = {
        "decay_start": repr(cfg.rnd.decay_start),
        "decay_end": repr(cfg.rnd.decay_end),
        "initial_weight": repr(cfg.rnd_initial_weight),
        "learning_rate": repr(cfg.rnd.learning_rate),
        "embedding_dim": str(cfg.rnd.embedding_dim),
        "hidden_units": str(cfg.rnd.hidden_units),
        "normalizer_warmup": str(cfg.rnd.normalizer_warmup),
        "novelty_bonus": repr(cfg.rnd.novelty_bonus),
        "novelty_bonus_enabled": str(cfg.rnd.novelty_bonus_enabled).lower(),
    }
    cp["noise"] = {
        "temp_threshold": repr(cfg.noise.temp_threshold),
        "rain_threshold": repr(cfg.noise.rain_threshold),
        "moisture_threshold": repr(cfg.noise.moisture_threshold),
        "temp_sigma": repr(cfg.noise.temp_sigma_base),
        "rain_bias_scale": repr(cfg.noise.rain_bias_scale),
        "rain_noise_param": repr(cfg.noise.rain_noise_param),
        "moisture_noise_param": repr(cfg.noise.moisture_noise_param),
        "param_interpretation": cfg.noise.rain_param_interpretation,
    }
    cp["validation"] = {
        "interval": str(cfg.validation.interval),
        "episodes": str(cfg.validation.episodes),
        "patience": str(cfg.validation.patience),
        "min_delta": repr(cfg.validation.min_delta),
        "keep_checkpoints": str(cfg.validation.keep_checkpoints),
    }
    cp["reward"] = {
        "yield_per_kg": repr(cfg.weights.w1_yield),
        "nitrogen_per_kg": repr(cfg.weights.w2_nitrogen),
        "irrigation_per_mm": repr(cfg.weights.w3_irrigation),
        "leaching_per_kg": repr(cfg.weights.w4_leaching),
    }
    cp["scenario"] = {k: repr(v) for k, v in cfg.scenario_overrides.items()}
    cp["env"] = {
        "backend": cfg.env_backend,
        "command": cfg.env_command,
        "timeout_s": repr(cfg.env_timeout_s),
    }
    cp.write(buf)
    return buf.getvalue()
