"""Actor/critic policy, zero-band action decoding, monotonicity tools.

The actor emits a diagonal Gaussian over the raw action; means and log-std
raws both come out of a Tanh layer, and log-stds are mapped affinely into
[-5, 1]. Three modes share the machinery:

  nneb      actor input 16 (observation + normalized price), output 8
  two-pair  actor input 15 (observation only), output 8
  self      actor input 15, output 2 (signed power mean + log-std)

The critic always maps the 15-dim observation to one value with a linear
head, since day-scale returns are far outside Tanh range.
"""

import json
from dataclasses import dataclass

import numpy as np

from .ess import EssParams
from .features import OBS_DIM
from .market import ZeroBandAction, eval_zero_band_many
from .nets import Mlp

MODES = ("nneb", "two-pair", "self")
LOG_STD_LO = -5.0
LOG_STD_HI = 1.0

CHECKPOINT_SCHEMA = "nnbid-checkpoint-v1"


@dataclass(frozen=True)
class PriceScale:
    """Affine price normalization range used at the actor input."""
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.hi > self.lo):
            raise ValueError(f"invalid price scale [{self.lo}, {self.hi}]")

    @property
    def span(self) -> float:
        return self.hi - self.lo

    def normalize(self, price):
        x = (np.asarray(price, dtype=float) - self.lo) / self.span * 2.0 - 1.0
        return np.clip(x, -1.0, 1.0)

    @classmethod
    def from_prices(cls, prices: np.ndarray) -> "PriceScale":
        lo, hi = np.quantile(np.asarray(prices, dtype=float), [0.001, 0.999])
        if hi <= lo:
            hi = lo + 1.0
        return cls(float(lo), float(hi))


@dataclass(frozen=True)
class ReferenceLevels:
    """Sorted snap targets for the discretized output, as fractions of p_max."""
    levels: tuple

    def __post_init__(self):
        arr = np.asarray(self.levels, dtype=float)
        if arr.ndim != 1 or len(arr) == 0:
            raise ValueError("levels must be a non-empty 1-d sequence")
        if np.any(np.diff(arr) <= 0):
            raise ValueError("levels must be strictly increasing")
        if arr[0] < -1.0 - 1e-12 or arr[-1] > 1.0 + 1e-12:
            raise ValueError("levels must lie within [-1, 1] (fractions of p_max)")
        object.__setattr__(self, "levels", tuple(float(v) for v in arr))

    def candidates(self) -> np.ndarray:
        """{-1} plus the levels, ascending and deduplicated."""
        arr = np.asarray(self.levels)
        if arr[0] <= -1.0 + 1e-15:
            return arr.copy()
        return np.concatenate([[-1.0], arr])


def discretize(p, levels: ReferenceLevels, params: EssParams):
    """Snap signed power to the nearest candidate, ties toward the lower one."""
    cand = levels.candidates() * params.p_max
    mids = 0.5 * (cand[:-1] + cand[1:])
    idx = np.searchsorted(mids, np.asarray(p, dtype=float), side="left")
    out = cand[idx]
    if np.isscalar(p) or np.ndim(p) == 0:
        return float(out)
    return out


def decode_action(raw, params: EssParams, price_scale: PriceScale) -> ZeroBandAction:
    """Map 4 raw actor outputs to a zero-band action.

    The two threshold raws are interchangeable; min/max ordering guarantees
    lambda_c <= lambda_d. Raw values are clipped to [-1, 1] first so sampled
    (unsquashed) Gaussian actions stay in range.
    """
    a = np.clip(np.asarray(raw, dtype=float), -1.0, 1.0)
    if a.shape != (4,):
        raise ValueError(f"expected 4 raw outputs, got shape {a.shape}")
    lo, hi = price_scale.lo, price_scale.hi
    lam_a = lo + (a[0] + 1.0) / 2.0 * (hi - lo)
    lam_b = lo + (a[1] + 1.0) / 2.0 * (hi - lo)
    return ZeroBandAction(
        lambda_c=min(lam_a, lam_b),
        lambda_d=max(lam_a, lam_b),
        p_c=(a[2] + 1.0) / 2.0 * params.p_max,
        p_d=(a[3] + 1.0) / 2.0 * params.p_max,
    )


def decode_batch(raw: np.ndarray, params: EssParams, price_scale: PriceScale):
    """Vectorized decode_action; returns (lam_c, lam_d, p_c, p_d) arrays."""
    a = np.clip(np.asarray(raw, dtype=float), -1.0, 1.0)
    lo, hi = price_scale.lo, price_scale.hi
    lam_a = lo + (a[..., 0] + 1.0) / 2.0 * (hi - lo)
    lam_b = lo + (a[..., 1] + 1.0) / 2.0 * (hi - lo)
    lam_c = np.minimum(lam_a, lam_b)
    lam_d = np.maximum(lam_a, lam_b)
    p_c = (a[..., 2] + 1.0) / 2.0 * params.p_max
    p_d = (a[..., 3] + 1.0) / 2.0 * params.p_max
    return lam_c, lam_d, p_c, p_d


class PolicyNetwork:
    """Actor/critic pair with a mode flag and optional reference levels."""

    def __init__(self, mode: str, params: EssParams, price_scale: PriceScale,
                 rng: np.random.Generator, hidden=(256, 256),
                 levels: ReferenceLevels | None = None):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.mode = mode
        self.params = params
        self.price_scale = price_scale
        self.levels = levels
        self.action_dim = 1 if mode == "self" else 4
        actor_in = OBS_DIM + 1 if mode == "nneb" else OBS_DIM
        self.actor = Mlp([actor_in] + list(hidden) + [2 * self.action_dim],
                         rng, out_activation="tanh")
        if mode == "nneb":
            # the price column starts silent: a random price coupling lets the
            # band learn to track the query price and go inert, so price
            # sensitivity has to be earned through gradients
            self.actor.weights[0][OBS_DIM:, :] = 0.0
        self.critic = Mlp([OBS_DIM] + list(hidden) + [1],
                          rng, out_activation="linear")

    # ---- actor plumbing ----

    def actor_input(self, obs: np.ndarray, prices=None) -> np.ndarray:
        obs = np.atleast_2d(np.asarray(obs, dtype=float))
        if self.mode != "nneb":
            return obs
        if prices is None:
            raise ValueError("nneb actor needs the clearing price as input")
        lam = self.price_scale.normalize(prices).reshape(-1, 1)
        return np.concatenate([obs, np.broadcast_to(lam, (len(obs), 1))], axis=1)

    @staticmethod
    def split_heads(actor_out: np.ndarray):
        """(means, log_stds) from the Tanh output; log-stds mapped into [-5, 1]."""
        k = actor_out.shape[-1] // 2
        means = actor_out[..., :k]
        mid = 0.5 * (LOG_STD_HI + LOG_STD_LO)
        half = 0.5 * (LOG_STD_HI - LOG_STD_LO)
        log_stds = np.clip(mid + half * actor_out[..., k:], LOG_STD_LO, LOG_STD_HI)
        return means, log_stds

    def action_stats(self, obs: np.ndarray, prices=None):
        out, _ = self.actor.forward(self.actor_input(obs, prices))
        return self.split_heads(out)

    def sample_actions(self, obs: np.ndarray, prices, rng: np.random.Generator):
        """Draw raw actions and their diagonal-Gaussian log-densities."""
        means, log_stds = self.action_stats(obs, prices)
        stds = np.exp(log_stds)
        raw = means + stds * rng.standard_normal(means.shape)
        return raw, gaussian_log_prob(raw, means, log_stds)

    def values(self, obs: np.ndarray) -> np.ndarray:
        obs = np.atleast_2d(np.asarray(obs, dtype=float))
        v, _ = self.critic.forward(obs)
        return v[:, 0]

    # ---- deterministic supply function (nneb) ----

    def mean_powers(self, obs: np.ndarray, prices: np.ndarray) -> np.ndarray:
        """Continuous signed power at each (obs[i], prices[i]) via the actor mean."""
        if self.mode != "nneb":
            raise ValueError("supply function queries require nneb mode")
        prices = np.asarray(prices, dtype=float)
        means, _ = self.action_stats(obs, prices)
        lam_c, lam_d, p_c, p_d = decode_batch(means, self.params, self.price_scale)
        return eval_zero_band_many(lam_c, p_c, lam_d, p_d, prices)

    def supply_grid(self, obs_set: np.ndarray, grid: np.ndarray) -> np.ndarray:
        """Continuous supply power for every observation at every grid price.

        Returns shape (B, G). One batched forward pass over the B*G inputs.
        """
        obs_set = np.atleast_2d(np.asarray(obs_set, dtype=float))
        grid = np.asarray(grid, dtype=float)
        B, G = len(obs_set), len(grid)
        obs_rep = np.repeat(obs_set, G, axis=0)
        prices_rep = np.tile(grid, B)
        return self.mean_powers(obs_rep, prices_rep).reshape(B, G)

    # ---- persistence ----

    def to_json_dict(self) -> dict:
        return {
            "schema": CHECKPOINT_SCHEMA,
            "mode": self.mode,
            "ess": {
                "capacity_mwh": self.params.capacity_mwh,
                "p_max": self.params.p_max,
                "eta_c": self.params.eta_c,
                "eta_d": self.params.eta_d,
                "lambda_dep": self.params.lambda_dep,
                "tau": self.params.tau,
            },
            "price_scale": {"lo": self.price_scale.lo, "hi": self.price_scale.hi},
            "levels": list(self.levels.levels) if self.levels is not None else None,
            "actor": self.actor.to_json_dict(),
            "critic": self.critic.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PolicyNetwork":
        if d.get("schema") != CHECKPOINT_SCHEMA:
            raise ValueError(f"unsupported checkpoint schema: {d.get('schema')!r}")
        pol = cls.__new__(cls)
        pol.mode = d["mode"]
        if pol.mode not in MODES:
            raise ValueError(f"checkpoint has unknown mode {pol.mode!r}")
        e = d["ess"]
        pol.params = EssParams(capacity_mwh=e["capacity_mwh"], p_max=e["p_max"],
                               eta_c=e["eta_c"], eta_d=e["eta_d"],
                               lambda_dep=e["lambda_dep"], tau=e["tau"])
        pol.price_scale = PriceScale(d["price_scale"]["lo"], d["price_scale"]["hi"])
        pol.levels = (ReferenceLevels(tuple(d["levels"]))
                      if d.get("levels") is not None else None)
        pol.actor = Mlp.from_json_dict(d["actor"])
        pol.critic = Mlp.from_json_dict(d["critic"])
        pol.action_dim = pol.actor.sizes[-1] // 2
        return pol

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json_dict(), f)

    @classmethod
    def load(cls, path) -> "PolicyNetwork":
        with open(path) as f:
            return cls.from_json_dict(json.load(f))


def gaussian_log_prob(x: np.ndarray, means: np.ndarray, log_stds: np.ndarray) -> np.ndarray:
    """Diagonal Gaussian log-density, summed over action dimensions."""
    z = (x - means) / np.exp(log_stds)
    per_dim = -0.5 * z * z - log_stds - 0.5 * np.log(2.0 * np.pi)
    return per_dim.sum(axis=-1)


def supply_power(policy: PolicyNetwork, obs: np.ndarray, price: float) -> float:
    """Deterministic signed power of the policy's supply function at one price."""
    return float(policy.mean_powers(np.atleast_2d(obs), np.array([price]))[0])


def fraction_nondecreasing(powers: np.ndarray) -> float:
    """Fraction of adjacent pairs along the last axis that do not decrease."""
    powers = np.atleast_2d(np.asarray(powers, dtype=float))
    diffs = np.diff(powers, axis=-1)
    return float(np.mean(diffs >= -1e-9))


def monotonicity_metric(policy: PolicyNetwork, obs_set: np.ndarray,
                        price_grid: np.ndarray) -> float:
    """Share of adjacent grid prices where the continuous supply power does
    not decrease, averaged over the observation set."""
    return fraction_nondecreasing(policy.supply_grid(obs_set, price_grid))


def monotonicity_loss(policy: PolicyNetwork, obs_batch: np.ndarray,
                      prices: np.ndarray, fd_step: float):
    """Quadratic penalty on negative price-derivatives of the supply function.

    The derivative at each (obs, price) sample is a central finite difference
    of the continuous (pre-discretization) supply power. Returns the loss and
    actor parameter gradients; gradients flow through both evaluations. The
    step thresholds contribute zero almost everywhere, so the gradient moves
    the charge/discharge magnitudes, which is the exact a.e. derivative of
    the piecewise-constant composition.
    """
    if policy.mode != "nneb":
        raise ValueError("monotonicity loss requires nneb mode")
    obs_batch = np.atleast_2d(np.asarray(obs_batch, dtype=float))
    prices = np.asarray(prices, dtype=float)
    n = len(obs_batch)
    if len(prices) != n:
        raise ValueError("need one sampled price per observation")

    def eval_side(lam):
        x = policy.actor_input(obs_batch, lam)
        out, cache = policy.actor.forward(x)
        means, _ = policy.split_heads(out)
        lam_c, lam_d, p_c, p_d = decode_batch(means, policy.params, policy.price_scale)
        dis = lam >= lam_d
        chg = ~dis & (lam <= lam_c)
        power = np.where(dis, p_d, np.where(chg, -p_c, 0.0))
        return power, cache, dis, chg

    p_plus, cache_p, dis_p, chg_p = eval_side(prices + fd_step)
    p_minus, cache_m, dis_m, chg_m = eval_side(prices - fd_step)
    d = (p_plus - p_minus) / (2.0 * fd_step)
    active = d < 0.0
    loss = float(np.mean(np.where(active, d * d, 0.0)))

    dl_dd = 2.0 * d * active / n
    half_pmax = policy.params.p_max / 2.0

    def upstream(dl_dp, dis, chg):
        g = np.zeros((n, 2 * policy.action_dim))
        g[:, 3] = dl_dp * dis * half_pmax      # discharge magnitude slot
        g[:, 2] = -dl_dp * chg * half_pmax     # charge magnitude slot
        return g

    wg_p, bg_p, _ = policy.actor.backward(cache_p, upstream(dl_dd / (2.0 * fd_step), dis_p, chg_p))
    wg_m, bg_m, _ = policy.actor.backward(cache_m, upstream(-dl_dd / (2.0 * fd_step), dis_m, chg_m))
    w_grads = [a + b for a, b in zip(wg_p, wg_m)]
    b_grads = [a + b for a, b in zip(bg_p, bg_m)]
    return loss, w_grads, b_grads
