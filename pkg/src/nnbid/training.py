"""PPO training over vectorized market environments, plus retraining.

The training loop alternates rollout and update phases. Retraining keeps
the same loop but snaps the cleared power to the reference levels inside
the environment and appends one monotonicity gradient phase per update.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from .envs import VecMarketEnv
from .ess import EssParams
from .features import OBS_DIM
from .nets import Adam
from .policy import (PolicyNetwork, PriceScale, ReferenceLevels, decode_batch,
                     gaussian_log_prob, monotonicity_loss, monotonicity_metric)
from .market import eval_zero_band_many

LOG2PI = math.log(2.0 * math.pi)
CURVE_COLUMNS = ("update_index", "env_steps", "mean_reward", "actor_loss",
                 "critic_loss", "mono_loss", "mono_metric", "clip_fraction")

@dataclass(frozen=True)
class TrainConfig:
    seed: int
    n_envs: int = 256
    gamma: float = 0.9999
    lr_actor: float = 3e-4
    lr_critic: float = 1e-3
    clip_eps: float = 0.2
    rollout_horizon: int = 288
    minibatch_size: int = 4096
    update_epochs: int = 4
    gae_lambda: float = 0.95
    total_steps: int = 5_000_000
    mono_batch: int = 1024
    mono_weight: float = 1.0
    entropy_coef: float = 0.0
    # Fraction of supply-function stage-1 updates with the price input
    # column held at zero. Opening it from the start lets the threshold
    # heads absorb the dominant mid-price do-not-churn gradient as price
    # tracking (the band climbs away from the clearing price everywhere),
    # which blocks the exploration-driven escape the price-blind baseline
    # rides; price sensitivity is learned only after the shared thresholds
    # turn a profit. Ignored outside nneb stage-1 training.
    price_warmup_frac: float = 0.5

    def __post_init__(self):
        for name in ("n_envs", "rollout_horizon", "minibatch_size",
                     "update_epochs", "total_steps", "mono_batch"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("lr_actor", "lr_critic"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError("clip_eps must be in (0, 1)")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in [0, 1]")
        if self.mono_weight < 0 or self.entropy_coef < 0:
            raise ValueError("loss weights must be nonnegative")
        if not 0.0 <= self.price_warmup_frac < 1.0:
            raise ValueError("price_warmup_frac must be in [0, 1)")

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown training config keys: {sorted(extra)}")
        return cls(**d)

    @property
    def n_updates(self) -> int:
        return max(1, math.ceil(self.total_steps / (self.n_envs * self.rollout_horizon)))


def requested_powers(policy: PolicyNetwork, raw: np.ndarray, prices: np.ndarray) -> np.ndarray:
    """Signed power each environment asks for, before snapping and clamping."""
    if policy.mode == "self":
        return np.clip(raw[:, 0], -1.0, 1.0) * policy.params.p_max
    lam_c, lam_d, p_c, p_d = decode_batch(raw, policy.params, policy.price_scale)
    return eval_zero_band_many(lam_c, p_c, lam_d, p_d, prices)


def rollout(envs: VecMarketEnv, policy: PolicyNetwork, horizon: int,
            rng: np.random.Generator, obs: np.ndarray) -> dict:
    """Collect horizon steps from every environment.

    `obs` is the current observation batch (from reset or the previous
    rollout's tail); the returned dict carries it forward under "last_obs".
    """
    E = envs.n_envs
    batch = {
        "obs": np.empty((horizon, E, obs.shape[1])),
        "prices": np.empty((horizon, E)),
        "raw": np.empty((horizon, E, policy.action_dim)),
        "log_probs": np.empty((horizon, E)),
        "values": np.empty((horizon, E)),
        "rewards": np.empty((horizon, E)),
        "dones": np.empty((horizon, E), dtype=bool),
        "powers": np.empty((horizon, E)),
    }
    for t in range(horizon):
        prices = envs.current_prices()
        raw, lp = policy.sample_actions(obs, prices, rng)
        batch["obs"][t] = obs
        batch["prices"][t] = prices
        batch["raw"][t] = raw
        batch["log_probs"][t] = lp
        batch["values"][t] = policy.values(obs)
        power = requested_powers(policy, raw, prices)
        obs, rewards, dones, delivered = envs.step(power)
        batch["rewards"][t] = rewards
        batch["dones"][t] = dones
        batch["powers"][t] = delivered
    batch["last_obs"] = obs
    batch["last_values"] = policy.values(obs)
    return batch


def compute_gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
                gamma: float, lam: float, last_values=None):
    """Generalized advantage estimation over a (T, E) rollout.

    Advantages are returned raw (not normalized); returns = advantages +
    values. Bootstrapping stops at done flags; `last_values` bootstraps the
    final step when its episode is still open.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    dones = np.asarray(dones, dtype=bool)
    T = rewards.shape[0]
    if last_values is None:
        last_values = np.zeros(rewards.shape[1:])
    adv = np.zeros_like(rewards)
    gae = np.zeros(rewards.shape[1:])
    for t in range(T - 1, -1, -1):
        nonterminal = ~dones[t]
        v_next = values[t + 1] if t < T - 1 else np.asarray(last_values, dtype=float)
        delta = rewards[t] + gamma * v_next * nonterminal - values[t]
        gae = delta + gamma * lam * nonterminal * gae
        adv[t] = gae
    return adv, adv + values


def clipped_objective(log_probs: np.ndarray, old_log_probs: np.ndarray,
                      advantages: np.ndarray, clip_eps: float):
    """Per-sample clipped surrogate and its gradient bookkeeping.

    Returns (objective, ratio, active, clip_fraction) where `active` marks
    samples whose gradient flows through the unclipped ratio branch.
    """
    ratio = np.exp(log_probs - old_log_probs)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * advantages
    objective = np.minimum(unclipped, clipped)
    active = unclipped <= clipped
    clip_fraction = float(np.mean((ratio < 1.0 - clip_eps) | (ratio > 1.0 + clip_eps)))
    return objective, ratio, active, clip_fraction


def actor_loss_and_grads(policy: PolicyNetwork, obs: np.ndarray, prices,
                         raw: np.ndarray, old_log_probs: np.ndarray,
                         advantages: np.ndarray, clip_eps: float,
                         entropy_coef: float):
    """Clipped-surrogate actor loss with analytic parameter gradients.

    Loss = -mean(min(r A, clip(r) A)) - entropy_coef * mean(entropy).
    Returns (loss, w_grads, b_grads, diagnostics dict).
    """
    x = policy.actor_input(obs, prices)
    out, cache = policy.actor.forward(x)
    means, log_stds = policy.split_heads(out)
    stds = np.exp(log_stds)
    z = (raw - means) / stds
    log_probs = gaussian_log_prob(raw, means, log_stds)
    objective, ratio, active, clip_frac = clipped_objective(
        log_probs, old_log_probs, advantages, clip_eps)
    B, K = means.shape
    entropy = log_stds.sum(axis=-1) + 0.5 * K * (LOG2PI + 1.0)
    loss = float(-objective.mean() - entropy_coef * entropy.mean())

    dl_dlp = -(advantages * ratio * active) / B
    g_mean = dl_dlp[:, None] * (z / stds)
    g_logstd = dl_dlp[:, None] * (z * z - 1.0) - entropy_coef / B
    upstream = np.concatenate([g_mean, g_logstd * 3.0], axis=1)  # dlogstd/draw = 3
    w_grads, b_grads, _ = policy.actor.backward(cache, upstream)
    diag = {
        "clip_fraction": clip_frac,
        "approx_kl": float(np.mean(old_log_probs - log_probs)),
        "entropy": float(entropy.mean()),
    }
    return loss, w_grads, b_grads, diag


def critic_loss_and_grads(policy: PolicyNetwork, obs: np.ndarray, returns: np.ndarray):
    """Mean-squared-error critic loss and parameter gradients."""
    v, cache = policy.critic.forward(obs)
    v = v[:, 0]
    err = v - returns
    loss = float(np.mean(err * err))
    upstream = (2.0 * err / len(err))[:, None]
    w_grads, b_grads, _ = policy.critic.backward(cache, upstream)
    return loss, w_grads, b_grads


def _all_finite(loss, w_grads, b_grads) -> bool:
    if not np.isfinite(loss):
        return False
    return all(np.all(np.isfinite(g)) for g in w_grads + b_grads)


def ppo_update(policy: PolicyNetwork, batch: dict, config: TrainConfig,
               adam_actor: Adam, adam_critic: Adam, rng: np.random.Generator,
               freeze_price_input: bool = False) -> dict:
    """One PPO update over the rollout batch.

    Advantages are normalized here (zero mean, unit variance across the
    update). A non-finite loss or gradient aborts the whole update and
    restores the pre-update parameters and optimizer state. With
    `freeze_price_input`, gradients to the actor's price input rows are
    zeroed, so a zero-initialized price column stays silent.
    """
    T, E = batch["rewards"].shape
    adv, returns = compute_gae(batch["rewards"], batch["values"], batch["dones"],
                               config.gamma, config.gae_lambda, batch["last_values"])
    obs = batch["obs"].reshape(T * E, -1)
    prices = batch["prices"].reshape(T * E)
    raw = batch["raw"].reshape(T * E, -1)
    old_lp = batch["log_probs"].reshape(T * E)
    adv = adv.reshape(T * E)
    returns = returns.reshape(T * E)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)

    snap = (policy.actor.get_params(), policy.critic.get_params(),
            adam_actor.state_snapshot(), adam_critic.state_snapshot())
    n = T * E
    mb = min(config.minibatch_size, n)
    actor_losses, critic_losses, clip_fracs, kls = [], [], [], []
    for _ in range(config.update_epochs):
        perm = rng.permutation(n)
        for lo in range(0, n, mb):
            idx = perm[lo:lo + mb]
            a_loss, aw, ab, diag = actor_loss_and_grads(
                policy, obs[idx], prices[idx], raw[idx], old_lp[idx],
                adv[idx], config.clip_eps, config.entropy_coef)
            if freeze_price_input:
                aw[0][OBS_DIM:, :] = 0.0
            c_loss, cw, cb = critic_loss_and_grads(policy, obs[idx], returns[idx])
            if not (_all_finite(a_loss, aw, ab) and _all_finite(c_loss, cw, cb)):
                policy.actor.set_params(*snap[0])
                policy.critic.set_params(*snap[1])
                adam_actor.restore(snap[2])
                adam_critic.restore(snap[3])
                return {"aborted": True, "actor_loss": float("nan"),
                        "critic_loss": float("nan"), "clip_fraction": float("nan"),
                        "approx_kl": float("nan")}
            adam_actor.step(aw, ab)
            adam_critic.step(cw, cb)
            actor_losses.append(a_loss)
            critic_losses.append(c_loss)
            clip_fracs.append(diag["clip_fraction"])
            kls.append(diag["approx_kl"])
    return {
        "aborted": False,
        "actor_loss": float(np.mean(actor_losses)),
        "critic_loss": float(np.mean(critic_losses)),
        "clip_fraction": float(np.mean(clip_fracs)),
        "approx_kl": float(np.mean(kls)),
    }


def _format_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_curve_csv(path, rows, extra_comment: str | None = None):
    """Training-curve CSV; env_steps counts steps summed over all envs."""
    with open(path, "w") as f:
        f.write("# env_steps are totals across all environments\n")
        if extra_comment:
            f.write(f"# {extra_comment}\n")
        f.write(",".join(CURVE_COLUMNS) + "\n")
        for row in rows:
            f.write(",".join(_format_cell(row[c]) for c in CURVE_COLUMNS) + "\n")


def _probe_observations(envs: VecMarketEnv, n_probe: int = 64) -> np.ndarray:
    """Fixed observation set for monotonicity logging: evenly spaced
    positions with SoC cycling through quarter points."""
    positions = (np.arange(n_probe) * envs.n) // n_probe
    soc = envs.params.capacity_mwh * (0.25 + 0.25 * (np.arange(n_probe) % 3))
    return envs.builder.observations(positions, soc)


def _run_loop(policy: PolicyNetwork, values: np.ndarray, config: TrainConfig,
              rng: np.random.Generator, retraining: bool,
              train_values_for_sampling: np.ndarray) -> list:
    envs = VecMarketEnv(values, policy.params, config.n_envs,
                        levels=policy.levels if retraining else None)
    adam_actor = Adam(policy.actor, config.lr_actor)
    adam_critic = Adam(policy.critic, config.lr_critic)
    obs = envs.reset()
    rows = []
    fd_step = 0.01 * policy.price_scale.span
    metric_grid = np.linspace(policy.price_scale.lo, policy.price_scale.hi, 200)
    probe_obs = _probe_observations(envs) if retraining else None
    warmup_updates = 0
    if policy.mode == "nneb" and not retraining:
        warmup_updates = int(config.price_warmup_frac * config.n_updates)
    env_steps = 0
    for u in range(config.n_updates):
        batch = rollout(envs, policy, config.rollout_horizon, rng, obs)
        obs = batch["last_obs"]
        env_steps += config.rollout_horizon * config.n_envs
        diag = ppo_update(policy, batch, config, adam_actor, adam_critic, rng,
                          freeze_price_input=u < warmup_updates)

        mono_loss_val = None
        mono_metric_val = None
        if retraining:
            flat_obs = batch["obs"].reshape(-1, batch["obs"].shape[-1])
            take = min(config.mono_batch, len(flat_obs))
            idx = rng.choice(len(flat_obs), size=take, replace=False)
            lam = rng.choice(train_values_for_sampling, size=take, replace=True)
            mono_loss_val, mw, mb_ = monotonicity_loss(policy, flat_obs[idx], lam, fd_step)
            if config.mono_weight > 0.0:
                mw = [g * config.mono_weight for g in mw]
                mb_ = [g * config.mono_weight for g in mb_]
                adam_actor.step(mw, mb_)
            mono_metric_val = monotonicity_metric(policy, probe_obs, metric_grid)

        episodes = int(batch["dones"].sum())
        mean_reward = float(batch["rewards"].sum() / max(episodes, 1))
        rows.append({
            "update_index": u,
            "env_steps": env_steps,
            "mean_reward": mean_reward,
            "actor_loss": diag["actor_loss"],
            "critic_loss": diag["critic_loss"],
            "mono_loss": mono_loss_val,
            "mono_metric": mono_metric_val,
            "clip_fraction": diag["clip_fraction"],
        })
    return rows


def train(config: TrainConfig, params: EssParams, data, mode: str,
          curve_path=None, checkpoint_path=None):
    """Train a fresh policy in the given mode on the price data.

    `data` is a price container with a `.values` array, or a plain array.
    Returns (policy, curve rows); optionally writes the curve CSV and the
    checkpoint JSON.
    """
    values = np.asarray(getattr(data, "values", data), dtype=float)
    rng = np.random.default_rng(config.seed)
    price_scale = PriceScale.from_prices(values)
    policy = PolicyNetwork(mode, params, price_scale, rng)
    rows = _run_loop(policy, values, config, rng, retraining=False,
                     train_values_for_sampling=values)
    if curve_path is not None:
        write_curve_csv(curve_path, rows)
    if checkpoint_path is not None:
        policy.save(checkpoint_path)
    return policy, rows


def retrain(policy: PolicyNetwork, levels: ReferenceLevels, config: TrainConfig,
            data, curve_path=None, checkpoint_path=None):
    """Continue training with level-snapped cleared power and a
    monotonicity gradient phase after every PPO update."""
    if policy.mode != "nneb":
        raise ValueError("retraining applies to nneb policies")
    values = np.asarray(getattr(data, "values", data), dtype=float)
    rng = np.random.default_rng(config.seed)
    policy.levels = levels
    rows = _run_loop(policy, values, config, rng, retraining=True,
                     train_values_for_sampling=values)
    if curve_path is not None:
        write_curve_csv(curve_path, rows)
    if checkpoint_path is not None:
        policy.save(checkpoint_path)
    return policy, rows
