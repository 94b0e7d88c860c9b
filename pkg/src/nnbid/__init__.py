"""Learning high-dimensional energy-market bids for a storage system.

The package trains a neural supply function with PPO, retrains it to be
monotone and discrete, converts it into valid price-quantity bids, and
scores the result against baselines and a hindsight-optimal benchmark.
"""

from .benchmarks import brute_force_optimal, hindsight_dp, profit_ratio
from .data import PriceSeries, SynthSpec, load_csv, save_csv, split, synth_prices
from .envs import VecMarketEnv
from .ess import (EssParams, EssState, FeasibilityError, PowerDispatch,
                  degradation_cost, dispatch_from_signed, feasible_range, step_soc)
from .evaluation import EvalResult, evaluate_policy, write_trace_csv
from .extraction import (extract_bid, monotone_repair, price_grid, sweep_supply,
                         to_bid_curve, verify_equivalence)
from .features import PriceHistory, build_observation, encode_history, encode_time
from .market import (BidCurve, Settlement, ZeroBandAction, clear_bid,
                     clear_bid_many, eval_zero_band, net_income_arr, settle,
                     validate_bid, zero_band_to_bid)
from .nets import Adam, Mlp
from .policy import (PolicyNetwork, PriceScale, ReferenceLevels, decode_action,
                     discretize, monotonicity_loss, monotonicity_metric, supply_power)
from .quantize import collect_actions, derive_levels, kmeans_1d, kmeans_sse
from .training import (TrainConfig, compute_gae, ppo_update, requested_powers,
                       retrain, rollout, train)

__all__ = [
    "Adam", "BidCurve", "EssParams", "EssState", "EvalResult", "FeasibilityError",
    "Mlp", "PolicyNetwork", "PowerDispatch", "PriceHistory", "PriceScale",
    "PriceSeries", "ReferenceLevels", "Settlement", "SynthSpec", "TrainConfig",
    "VecMarketEnv", "ZeroBandAction", "brute_force_optimal", "build_observation",
    "clear_bid", "clear_bid_many", "collect_actions", "compute_gae",
    "decode_action", "degradation_cost", "derive_levels", "dispatch_from_signed",
    "discretize", "encode_history", "encode_time", "eval_zero_band",
    "evaluate_policy", "extract_bid", "feasible_range", "hindsight_dp",
    "kmeans_1d", "kmeans_sse", "load_csv", "monotone_repair",
    "monotonicity_loss", "monotonicity_metric", "net_income_arr",
    "ppo_update", "price_grid", "profit_ratio", "requested_powers", "retrain",
    "rollout", "save_csv",
    "settle", "split", "step_soc", "supply_power", "sweep_supply", "synth_prices",
    "to_bid_curve", "train", "validate_bid", "verify_equivalence", "write_trace_csv",
    "zero_band_to_bid",
]
