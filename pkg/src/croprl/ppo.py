"""PPO with a clipped surrogate, dual-channel advantage estimation, and an
additive-reward baseline mode.

The extrinsic and intrinsic reward streams get separate GAE passes and
separate normalization before being combined with the progress-decayed
intrinsic weight; in additive mode the rewards are summed up front and a
single channel is used.  All gradients are exact (hand-derived, checked
against finite differences in the tests).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import nn
from .errors import ConfigurationError, ContractViolation, NumericalError
from .surrogate import N_ACTIONS, OBS_DIM, OBS_SCALE

POLICY_MAGIC = b"CRPL"
POLICY_VERSION = 1


@dataclass
class PpoConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    learning_rate: float = 3e-4      # decayed linearly over training progress
    rollout_steps: int = 2048
    minibatch_size: int = 64
    epochs: int = 10
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    hidden_units: int = 256
    hidden_layers: int = 3
    mode: str = "coupled"            # "coupled" | "additive"
    additive_intrinsic_weight: float = 0.1
    # Fixed scale applied to extrinsic rewards on the optimization path only
    # (GAE and value targets); reported scores stay in raw dollars.  Keeps
    # value-loss gradients commensurate with the policy gradient.
    reward_scale: float = 5e-4
    # Switch an update to value-only training once the mean approximate KL
    # to the rollout policy exceeds this; 0 disables the check.
    target_kl: float = 0.08
    # Number of initial updates that train the value heads only, so the
    # first policy gradients see a sane baseline.
    critic_warmup_updates: int = 2

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma={self.gamma} outside (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ConfigurationError(f"gae_lambda={self.gae_lambda} outside [0, 1]")
        if self.clip_epsilon <= 0.0:
            raise ConfigurationError("clip_epsilon must be > 0")
        if self.mode not in ("coupled", "additive"):
            raise ConfigurationError(f"mode must be 'coupled' or 'additive', got {self.mode!r}")


class PolicyNet:
    """Actor-critic pair: a policy trunk with a 25-way head and a separate
    value trunk with the two scalar value heads.

    The trunks are separate so value-regression gradients can never disturb
    the policy's representation (with a shared trunk the early value error
    dominates and destroys the action distribution).  Observations pass
    through the optional embedding hook, then a fixed per-dimension scale
    with saturation.  The hook default is the identity; it exists so a
    learned state embedding can be plugged in without touching the trainer.
    """

    INPUT_CLIP = 5.0  # scaled inputs saturate here; tames pathological states

    def __init__(self, trunk_pi: nn.Mlp, pi: nn.Mlp, trunk_v: nn.Mlp,
                 v_ext: nn.Mlp, v_int: nn.Mlp, input_scale: np.ndarray,
                 embedding_hook: Callable[[np.ndarray], np.ndarray] | None = None) -> None:
        self.trunk_pi = trunk_pi
        self.pi = pi
        self.trunk_v = trunk_v
        self.v_ext = v_ext
        self.v_int = v_int
        self.input_scale = np.asarray(input_scale, dtype=np.float64)
        self.embedding_hook = embedding_hook
        if self.input_scale.shape != (trunk_pi.in_dim,):
            raise ConfigurationError("input_scale length must match the trunk input size")

    @classmethod
    def create(cls, rng: np.random.Generator, obs_dim: int = OBS_DIM,
               n_actions: int = N_ACTIONS, hidden_units: int = 256, hidden_layers: int = 3,
               input_scale: np.ndarray | None = None,
               embedding_hook: Callable[[np.ndarray], np.ndarray] | None = None) -> "PolicyNet":
        embed_dim = obs_dim
        if embedding_hook is not None:
            embed_dim = int(np.asarray(embedding_hook(np.zeros(obs_dim))).shape[0])
        if input_scale is None:
            input_scale = OBS_SCALE if (embed_dim == OBS_DIM) else np.ones(embed_dim)
        sizes = [embed_dim] + [hidden_units] * hidden_layers
        trunk_pi = nn.init_mlp(sizes, rng)
        pi = nn.init_mlp([hidden_units, n_actions], rng)
        # near-zero initial logits: start at (almost) the uniform policy
        pi.weights[0] *= 0.01
        trunk_v = nn.init_mlp(sizes, rng)
        v_ext = nn.init_mlp([hidden_units, 1], rng)
        v_int = nn.init_mlp([hidden_units, 1], rng)
        return cls(trunk_pi, pi, trunk_v, v_ext, v_int, input_scale, embedding_hook)

    @property
    def n_actions(self) -> int:
        return self.pi.out_dim

    def action(self, observation: np.ndarray, rng: np.random.Generator | None = None,
               deterministic: bool = False) -> int:
        return act(self, observation, rng, deterministic).action

    def params(self) -> list[np.ndarray]:
        return (self.trunk_pi.params() + self.pi.params() + self.trunk_v.params()
                + self.v_ext.params() + self.v_int.params())

    def preprocess(self, obs_batch: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(obs_batch, dtype=np.float64))
        if self.embedding_hook is not None:
            x = np.stack([np.asarray(self.embedding_hook(row), dtype=np.float64) for row in x])
        return np.clip(x * self.input_scale, -self.INPUT_CLIP, self.INPUT_CLIP)


@dataclass
class PolicyTrace:
    trunk_pi: nn.ForwardTrace
    pi: nn.ForwardTrace
    trunk_v: nn.ForwardTrace
    v_ext: nn.ForwardTrace
    v_int: nn.ForwardTrace
    log_probs: np.ndarray         # (B, A)


def policy_forward(policy: PolicyNet, obs_batch: np.ndarray) -> PolicyTrace:
    x = policy.preprocess(obs_batch)
    tp_trace = nn.forward_batch(policy.trunk_pi, x, trace=True)
    hidden_pi = np.maximum(tp_trace.outputs, 0.0)
    pi_trace = nn.forward_batch(policy.pi, hidden_pi, trace=True)
    tv_trace = nn.forward_batch(policy.trunk_v, x, trace=True)
    hidden_v = np.maximum(tv_trace.outputs, 0.0)
    ve_trace = nn.forward_batch(policy.v_ext, hidden_v, trace=True)
    vi_trace = nn.forward_batch(policy.v_int, hidden_v, trace=True)
    logits = pi_trace.outputs
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return PolicyTrace(tp_trace, pi_trace, tv_trace, ve_trace, vi_trace, log_probs)


def policy_backward(policy: PolicyNet, trace: PolicyTrace, d_logits: np.ndarray,
                    d_v_ext: np.ndarray, d_v_int: np.ndarray) -> list[np.ndarray]:
    """Gradients for params() given per-sample output gradients."""
    g_pi = nn.backward_batch(policy.pi, trace.pi, d_logits)
    d_hidden_pi = g_pi.inputs * (trace.trunk_pi.outputs > 0.0)
    g_trunk_pi = nn.backward_batch(policy.trunk_pi, trace.trunk_pi, d_hidden_pi)
    g_ve = nn.backward_batch(policy.v_ext, trace.v_ext, d_v_ext)
    g_vi = nn.backward_batch(policy.v_int, trace.v_int, d_v_int)
    d_hidden_v = (g_ve.inputs + g_vi.inputs) * (trace.trunk_v.outputs > 0.0)
    g_trunk_v = nn.backward_batch(policy.trunk_v, trace.trunk_v, d_hidden_v)
    return (g_trunk_pi.params() + g_pi.params() + g_trunk_v.params()
            + g_ve.params() + g_vi.params())


@dataclass
class ActResult:
    action: int
    log_prob: float
    value_ext: float
    value_int: float
    log_probs: np.ndarray


def act(policy: PolicyNet, observation: np.ndarray,
        rng: np.random.Generator | None = None, deterministic: bool = False) -> ActResult:
    """Sample (or argmax) an action; returns log-prob and both value estimates."""
    observation = np.asarray(observation, dtype=np.float64)
    if not np.all(np.isfinite(observation)):
        raise ContractViolation("non-finite observation")
    trace = policy_forward(policy, observation[None, :])
    log_probs = trace.log_probs[0]
    if deterministic:
        action = int(np.argmax(log_probs))
    else:
        if rng is None:
            raise ContractViolation("sampling requires an rng; pass deterministic=True otherwise")
        cdf = np.cumsum(np.exp(log_probs))
        action = min(int(np.searchsorted(cdf, rng.random(), side="right")),
                     policy.n_actions - 1)
    return ActResult(
        action=action,
        log_prob=float(log_probs[action]),
        value_ext=float(trace.v_ext.outputs[0, 0]),
        value_int=float(trace.v_int.outputs[0, 0]),
        log_probs=log_probs,
    )


def values(policy: PolicyNet, observation: np.ndarray) -> tuple[float, float]:
    trace = policy_forward(policy, np.asarray(observation, dtype=np.float64)[None, :])
    return float(trace.v_ext.outputs[0, 0]), float(trace.v_int.outputs[0, 0])


# ---------------------------------------------------------------------------
# Advantage estimation
# ---------------------------------------------------------------------------

def gae(rewards: np.ndarray, values_with_bootstrap: np.ndarray, dones: np.ndarray,
        gamma: float, lam: float) -> np.ndarray:
    """GAE(gamma, lam) recursion; advantages reset across done boundaries.

    ``values_with_bootstrap`` has one more entry than rewards: the value of
    the state after the last step (ignored when that step terminated).
    """
    r = np.asarray(rewards, dtype=np.float64)
    v = np.asarray(values_with_bootstrap, dtype=np.float64)
    d = np.asarray(dones, dtype=np.float64)
    if v.shape[0] != r.shape[0] + 1 or d.shape[0] != r.shape[0]:
        raise ContractViolation(
            f"length mismatch: rewards {r.shape[0]}, values {v.shape[0]}, dones {d.shape[0]}")
    adv = np.empty_like(r)
    acc = 0.0
    for t in range(r.shape[0] - 1, -1, -1):
        nonterminal = 1.0 - d[t]
        delta = r[t] + gamma * v[t + 1] * nonterminal - v[t]
        acc = delta + gamma * lam * nonterminal * acc
        adv[t] = acc
    return adv


def normalize_adv(adv: np.ndarray) -> np.ndarray:
    """Zero-mean unit-variance (population std, 1e-8 floor)."""
    a = np.asarray(adv, dtype=np.float64)
    if a.shape[0] < 2:
        raise ContractViolation("normalization needs at least 2 samples")
    return (a - a.mean()) / (a.std() + 1e-8)


def combined_advantage(a_ext_norm: np.ndarray, a_int_norm: np.ndarray,
                       lambda_int: float) -> np.ndarray:
    if a_ext_norm.shape != a_int_norm.shape:
        raise ContractViolation("advantage channels have different lengths")
    if not 0.0 <= lambda_int <= 1.0:
        raise ContractViolation(f"lambda_int={lambda_int} outside [0, 1]")
    if lambda_int == 0.0:
        return a_ext_norm.copy()
    return a_ext_norm + lambda_int * a_int_norm


# ---------------------------------------------------------------------------
# Rollout storage
# ---------------------------------------------------------------------------

class RolloutBuffer:
    """Fixed-capacity trajectory store with dual reward/value channels."""

    def __init__(self, capacity: int, obs_dim: int = OBS_DIM) -> None:
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.rnd_obs = np.zeros((capacity, obs_dim))   # normalized noise-free states
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.log_probs = np.zeros(capacity)
        self.rewards_ext = np.zeros(capacity)
        self.rewards_int = np.zeros(capacity)
        self.values_ext = np.zeros(capacity)
        self.values_int = np.zeros(capacity)
        self.dones = np.zeros(capacity)
        self.rnd_mask = np.zeros(capacity, dtype=bool)
        self.size = 0
        self.finalized = False
        self.adv = None
        self.returns_ext = None
        self.returns_int = None
        self.intrinsic_active = False

    def __len__(self) -> int:
        return self.size

    @property
    def full(self) -> bool:
        return self.size >= self.capacity

    def add(self, obs: np.ndarray, rnd_obs: np.ndarray, action: int, log_prob: float,
            reward_ext: float, reward_int: float, value_ext: float, value_int: float,
            done: bool, rnd_active: bool = False) -> None:
        if self.full:
            raise ContractViolation("buffer is full; finalize and clear first")
        i = self.size
        self.obs[i] = obs
        self.rnd_obs[i] = rnd_obs
        self.actions[i] = action
        self.log_probs[i] = log_prob
        self.rewards_ext[i] = reward_ext
        self.rewards_int[i] = reward_int
        self.values_ext[i] = value_ext
        self.values_int[i] = value_int
        self.dones[i] = 1.0 if done else 0.0
        self.rnd_mask[i] = rnd_active
        self.size += 1

    def finalize(self, bootstrap_ext: float, bootstrap_int: float, lambda_int: float,
                 cfg: PpoConfig) -> None:
        """Compute advantages and return targets for the stored steps."""
        n = self.size
        if n == 0:
            raise ContractViolation("cannot finalize an empty buffer")
        dones = self.dones[:n]
        v_ext = np.append(self.values_ext[:n], bootstrap_ext)
        if cfg.mode == "additive":
            r_total = self.rewards_ext[:n] + cfg.additive_intrinsic_weight * self.rewards_int[:n]
            a = gae(r_total, v_ext, dones, cfg.gamma, cfg.gae_lambda)
            self.returns_ext = a + v_ext[:-1]
            self.returns_int = np.zeros(n)
            self.adv = normalize_adv(a)
            self.intrinsic_active = False
        else:
            a_ext = gae(self.rewards_ext[:n], v_ext, dones, cfg.gamma, cfg.gae_lambda)
            v_int = np.append(self.values_int[:n], bootstrap_int)
            a_int = gae(self.rewards_int[:n], v_int, dones, cfg.gamma, cfg.gae_lambda)
            self.returns_ext = a_ext + v_ext[:-1]
            self.returns_int = a_int + v_int[:-1]
            self.adv = combined_advantage(normalize_adv(a_ext), normalize_adv(a_int),
                                          lambda_int)
            self.intrinsic_active = lambda_int > 0.0
        self.finalized = True

    def clear(self) -> None:
        self.size = 0
        self.finalized = False
        self.adv = None
        self.returns_ext = None
        self.returns_int = None
        self.intrinsic_active = False


# ---------------------------------------------------------------------------
# The update
# ---------------------------------------------------------------------------

@dataclass
class UpdateStats:
    policy_loss: float
    value_loss_ext: float
    value_loss_int: float
    entropy: float
    clip_fraction: float
    grad_norm: float
    n_minibatches: int


@dataclass
class MinibatchResult:
    total_loss: float
    policy_loss: float
    value_loss_ext: float
    value_loss_int: float
    entropy: float
    clip_fraction: float
    approx_kl: float
    grads: list[np.ndarray]


def minibatch_loss_and_grads(policy: PolicyNet, obs: np.ndarray, actions: np.ndarray,
                             old_log_probs: np.ndarray, adv: np.ndarray,
                             returns_ext: np.ndarray, returns_int: np.ndarray,
                             intrinsic_active: bool, cfg: PpoConfig,
                             train_policy: bool = True) -> MinibatchResult:
    """Clipped-surrogate loss with value and entropy terms, plus exact grads.

    With ``train_policy`` False the policy/entropy gradients are zeroed (the
    value heads keep training); used after the KL budget of an update is
    spent.
    """
    eps = cfg.clip_epsilon
    b = obs.shape[0]
    trace = policy_forward(policy, obs)
    log_probs = trace.log_probs
    probs = np.exp(log_probs)
    rows = np.arange(b)
    logp_new = log_probs[rows, actions]
    ratio = np.exp(logp_new - old_log_probs)
    u1 = ratio * adv
    u2 = np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv
    policy_loss = -float(np.minimum(u1, u2).mean())

    err_ext = trace.v_ext.outputs[:, 0] - returns_ext
    loss_ext = float(np.mean(err_ext ** 2))
    err_int = trace.v_int.outputs[:, 0] - returns_int
    loss_int = float(np.mean(err_int ** 2)) if intrinsic_active else 0.0

    entropy_per = -np.sum(probs * log_probs, axis=1)
    entropy = float(entropy_per.mean())

    total_loss = (policy_loss + cfg.value_coef * (loss_ext + loss_int)
                  - cfg.entropy_coef * entropy)
    if not np.isfinite(total_loss):
        raise NumericalError(
            f"non-finite loss (policy={policy_loss}, v_ext={loss_ext}, "
            f"v_int={loss_int}, entropy={entropy}); update aborted")

    if train_policy:
        # d(policy_loss)/d(logits): gradient flows only through the unclipped
        # branch of min(u1, u2); d logp_a / d logit_j = 1{j=a} - p_j
        unclipped = (u1 <= u2).astype(np.float64)
        coeff = -(unclipped * adv * ratio) / b
        d_logits = coeff[:, None] * (-probs)
        d_logits[rows, actions] += coeff
        # entropy bonus: d(-c_e * mean H)/d(logit_j) = (c_e/b) p_j (log p_j + H)
        d_logits += (cfg.entropy_coef / b) * probs * (log_probs + entropy_per[:, None])
    else:
        d_logits = np.zeros_like(log_probs)

    d_v_ext = (cfg.value_coef * 2.0 * err_ext / b)[:, None]
    if intrinsic_active:
        d_v_int = (cfg.value_coef * 2.0 * err_int / b)[:, None]
    else:
        d_v_int = np.zeros((b, 1))

    grads = policy_backward(policy, trace, d_logits, d_v_ext, d_v_int)
    clip_fraction = float(np.mean(np.abs(ratio - 1.0) > eps))
    approx_kl = float(np.mean((ratio - 1.0) - np.log(ratio)))
    return MinibatchResult(total_loss, policy_loss, loss_ext, loss_int, entropy,
                           clip_fraction, approx_kl, grads)


def ppo_update(policy: PolicyNet, buffer: RolloutBuffer, cfg: PpoConfig,
               adam: nn.AdamState, lr: float, rng: np.random.Generator,
               train_policy: bool = True) -> UpdateStats:
    """Epochs of shuffled minibatch updates maximizing the clipped surrogate
    plus value and entropy terms; Adam with the supplied (decayed) rate."""
    if not buffer.finalized:
        raise ContractViolation("buffer must be finalized before ppo_update")
    n = buffer.size
    totals = {"policy": 0.0, "v_ext": 0.0, "v_int": 0.0, "entropy": 0.0,
              "clip": 0.0, "gnorm": 0.0}
    n_mb = 0
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            idx = perm[start:start + cfg.minibatch_size]
            res = minibatch_loss_and_grads(
                policy, buffer.obs[idx], buffer.actions[idx], buffer.log_probs[idx],
                buffer.adv[idx], buffer.returns_ext[idx], buffer.returns_int[idx],
                buffer.intrinsic_active, cfg, train_policy)
            if train_policy and cfg.target_kl > 0 and res.approx_kl > cfg.target_kl:
                # KL budget spent: keep training the value heads only
                train_policy = False
                res = minibatch_loss_and_grads(
                    policy, buffer.obs[idx], buffer.actions[idx], buffer.log_probs[idx],
                    buffer.adv[idx], buffer.returns_ext[idx], buffer.returns_int[idx],
                    buffer.intrinsic_active, cfg, train_policy)
            gnorm = nn.global_norm_clip(res.grads, cfg.max_grad_norm)
            nn.adam_step(policy.params(), res.grads, adam, lr)
            totals["policy"] += res.policy_loss
            totals["v_ext"] += res.value_loss_ext
            totals["v_int"] += res.value_loss_int
            totals["entropy"] += res.entropy
            totals["clip"] += res.clip_fraction
            totals["gnorm"] += gnorm
            n_mb += 1
    return UpdateStats(
        policy_loss=totals["policy"] / n_mb,
        value_loss_ext=totals["v_ext"] / n_mb,
        value_loss_int=totals["v_int"] / n_mb,
        entropy=totals["entropy"] / n_mb,
        clip_fraction=totals["clip"] / n_mb,
        grad_norm=totals["gnorm"] / n_mb,
        n_minibatches=n_mb,
    )


# ---------------------------------------------------------------------------
# Policy checkpoints (versioned flat binary built on the nn primitives)
# ---------------------------------------------------------------------------

def save_policy(path, policy: PolicyNet) -> None:
    with open(path, "wb") as f:
        f.write(POLICY_MAGIC)
        f.write(struct.pack("<I", POLICY_VERSION))
        for net in (policy.trunk_pi, policy.pi, policy.trunk_v,
                    policy.v_ext, policy.v_int):
            nn.write_mlp(f, net)
        nn.write_array(f, policy.input_scale)


def load_policy(path, embedding_hook: Callable[[np.ndarray], np.ndarray] | None = None
                ) -> PolicyNet:
    """Load a checkpoint; embedding hooks are code and must be re-attached."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != POLICY_MAGIC:
            raise ConfigurationError(f"bad policy checkpoint magic {magic!r}")
        (version,) = struct.unpack("<I", f.read(4))
        if version != POLICY_VERSION:
            raise ConfigurationError(f"unsupported policy checkpoint version {version}")
        trunk_pi = nn.read_mlp(f)
        pi = nn.read_mlp(f)
        trunk_v = nn.read_mlp(f)
        v_ext = nn.read_mlp(f)
        v_int = nn.read_mlp(f)
        scale = nn.read_array(f)
    return PolicyNet(trunk_pi, pi, trunk_v, v_ext, v_int, scale, embedding_hook)
