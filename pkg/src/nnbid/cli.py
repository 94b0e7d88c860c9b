"""Command-line pipeline: train, retrain, extract, evaluate, oracle, synth-data.

All commands read one JSON config file describing the storage asset, the
data source and split, and the training hyperparameters. CLI flags narrow
or override the config; `--set a.b.c=value` patches any key. Every emitted
file carries a schema tag and the resolved config snapshot.
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .benchmarks import dp_rounding_error, hindsight_dp, profit_ratio
from .data import SynthSpec, load_csv, save_csv, split, synth_prices
from .ess import EssParams
from .evaluation import evaluate_policy, write_trace_csv
from .policy import PolicyNetwork
from .quantize import derive_levels
from .training import TrainConfig, retrain, train, write_curve_csv

CURVE_SCHEMA = "nnbid-curve-v1"
SCHEDULE_SCHEMA = "nnbid-bid-schedule-v1"
METRICS_SCHEMA = "nnbid-metrics-v1"
ORACLE_SCHEMA = "nnbid-oracle-v1"
LEVELS_SCHEMA = "nnbid-levels-v1"
TRACE_SCHEMA = "nnbid-trace-v1"


class ConfigError(Exception):
    """Configuration problem, message prefixed with the offending key path."""


def load_config(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{path}: config file not found")
    try:
        with open(p) as f:
            cfg = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


def apply_overrides(cfg: dict, sets) -> dict:
    for item in sets or []:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected KEY.PATH=VALUE")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {part} is not an object")
        node[parts[-1]] = value
    return cfg


def _section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{name}: must be an object")
    return sec


def parse_ess(cfg: dict) -> EssParams:
    sec = _section(cfg, "ess")
    allowed = {"capacity_mwh", "p_max", "eta_c", "eta_d", "lambda_dep", "tau"}
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"ess.{key}: unknown key")
    for key in ("capacity_mwh", "p_max"):
        if key not in sec:
            raise ConfigError(f"ess.{key}: required")
    try:
        return EssParams(**sec)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"ess: {e}") from e


def parse_train_config(cfg: dict, seed: int) -> TrainConfig:
    sec = dict(_section(cfg, "train"))
    if "seed" in sec:
        raise ConfigError("train.seed: set via --seed, not the config file")
    try:
        return TrainConfig(seed=seed, **sec)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"train: {e}") from e


def resolve_series(cfg: dict):
    """Load or synthesize the price series and apply the chronological split.

    Returns (train_series, test_series).
    """
    sec = _section(cfg, "data")
    if "csv" in sec:
        path = Path(sec["csv"])
        if not path.exists():
            raise ConfigError(f"data.csv: file not found: {path}")
        series, _ = load_csv(path)
    elif "synthetic" in sec:
        syn = sec["synthetic"]
        if not isinstance(syn, dict):
            raise ConfigError("data.synthetic: must be an object")
        for key in ("seed", "days"):
            if key not in syn:
                raise ConfigError(f"data.synthetic.{key}: required")
        spec_keys = {k: v for k, v in syn.items() if k not in ("seed", "days")}
        try:
            spec = SynthSpec(**spec_keys)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"data.synthetic: {e}") from e
        series = synth_prices(int(syn["seed"]), int(syn["days"]), spec)
    else:
        raise ConfigError("data: need either data.csv or data.synthetic")
    for key in ("train_days", "test_days"):
        if key not in sec:
            raise ConfigError(f"data.{key}: required")
    try:
        return split(series, int(sec["train_days"]), int(sec["test_days"]))
    except ValueError as e:
        raise ConfigError(f"data: {e}") from e


def _snapshot(cfg: dict, params: EssParams, train_cfg=None, mode=None) -> dict:
    snap = {"ess": asdict(params), "data": cfg.get("data", {})}
    if train_cfg is not None:
        snap["train"] = train_cfg.to_json_dict()
    if mode is not None:
        snap["mode"] = mode
    for name in ("quantize", "extract", "oracle"):
        if name in cfg:
            snap[name] = cfg[name]
    return snap


def _compact(d: dict) -> str:
    return json.dumps(d, sort_keys=True, separators=(",", ":"))


def _write_json(path, payload: dict):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f, indent=1)
        f.write("\n")


def _out_dir(args) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_train(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set)
    params = parse_ess(cfg)
    train_cfg = parse_train_config(cfg, args.seed)
    train_series, _ = resolve_series(cfg)
    out = _out_dir(args)
    tag = f"{args.mode}-seed{args.seed}"
    curve_path = out / f"curve-{tag}.csv"
    ckpt_path = out / f"checkpoint-{tag}.json"
    snap = _snapshot(cfg, params, train_cfg, args.mode)

    policy, rows = train(train_cfg, params, train_series, args.mode)
    write_curve_csv(curve_path, rows,
                    extra_comment=f"schema={CURVE_SCHEMA} config={_compact(snap)}")
    ckpt = policy.to_json_dict()
    ckpt["config_snapshot"] = snap
    _write_json(ckpt_path, ckpt)
    print(f"wrote {ckpt_path} and {curve_path}")
    return 0


def cmd_retrain(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set)
    params = parse_ess(cfg)
    train_cfg = parse_train_config(cfg, args.seed)
    train_series, _ = resolve_series(cfg)
    policy = PolicyNetwork.load(args.checkpoint)
    if policy.mode != "nneb":
        raise ConfigError(f"checkpoint mode is {policy.mode!r}; retraining needs nneb")

    qsec = _section(cfg, "quantize")
    n_samples = int(qsec.get("n_samples", 20000))
    k = int(qsec.get("k", 10))
    rng = np.random.default_rng(args.seed)
    levels = derive_levels(policy, train_series.values, train_cfg.n_envs,
                           n_samples, rng, k=k)

    out = _out_dir(args)
    tag = f"nneb-retrained-seed{args.seed}"
    snap = _snapshot(cfg, params, train_cfg, "nneb")
    policy, rows = retrain(policy, levels, train_cfg, train_series)
    write_curve_csv(out / f"curve-{tag}.csv", rows,
                    extra_comment=f"schema={CURVE_SCHEMA} config={_compact(snap)}")
    ckpt = policy.to_json_dict()
    ckpt["config_snapshot"] = snap
    _write_json(out / f"checkpoint-{tag}.json", ckpt)
    _write_json(out / f"levels-seed{args.seed}.json",
                {"schema": LEVELS_SCHEMA, "levels": list(levels.levels),
                 "config_snapshot": snap})
    print(f"wrote {out / f'checkpoint-{tag}.json'}")
    return 0


def cmd_extract(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set)
    params = parse_ess(cfg)
    train_series, test_series = resolve_series(cfg)
    policy = PolicyNetwork.load(args.checkpoint)
    if policy.mode != "nneb" or policy.levels is None:
        raise ConfigError("extraction needs a retrained nneb checkpoint with levels")
    grid_size = int(_section(cfg, "extract").get("grid_size", 512))

    n_hours = len(test_series.values) // 12
    hours = min(args.hours, n_hours) if args.hours else n_hours
    result = evaluate_policy(policy, test_series.values[:hours * 12],
                             train_series.values, grid_size=grid_size,
                             compute_mono=False)
    if result.max_equivalence_deviation != 0.0:
        print(f"equivalence deviation {result.max_equivalence_deviation} != 0",
              file=sys.stderr)
        return 1
    snap = _snapshot(cfg, params)
    payload = {
        "schema": SCHEDULE_SCHEMA,
        "config_snapshot": snap,
        "max_equivalence_deviation": result.max_equivalence_deviation,
        "hours": [
            {"hour": h, "bid": bid.to_json_dict()}
            for h, bid in enumerate(result.bids)
        ],
    }
    out_path = Path(args.out) if args.out else _out_dir(args) / "bid-schedule.json"
    _write_json(out_path, payload)
    print(f"wrote {out_path} ({hours} hours, max deviation "
          f"{result.max_equivalence_deviation})")
    return 0


def cmd_evaluate(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set)
    params = parse_ess(cfg)
    train_series, test_series = resolve_series(cfg)
    osec = _section(cfg, "oracle")
    soc_levels = int(osec.get("soc_levels", 401))
    power_levels = int(osec.get("power_levels", 21))
    grid_size = int(_section(cfg, "extract").get("grid_size", 512))
    out = _out_dir(args)
    snap = _snapshot(cfg, params)

    oracle_profit, _ = hindsight_dp(test_series.values, params,
                                    soc_levels=soc_levels, power_levels=power_levels)
    entries = []
    for i, ckpt_path in enumerate(args.checkpoint):
        policy = PolicyNetwork.load(ckpt_path)
        result = evaluate_policy(policy, test_series.values, train_series.values,
                                 grid_size=grid_size)
        trace_path = out / f"eval-trace-{i}-{policy.mode}.csv"
        write_trace_csv(trace_path, result,
                        extra_comment=f"schema={TRACE_SCHEMA} config={_compact(snap)}")
        entries.append({
            "checkpoint": str(ckpt_path),
            "mode": policy.mode,
            "profit": result.total_profit,
            "profit_ratio": profit_ratio(result.total_profit, oracle_profit)
            if oracle_profit > 0 else None,
            "mono_metric": result.mono_metric,
            "max_equivalence_deviation": result.max_equivalence_deviation,
            "trace_csv": str(trace_path),
        })

    payload = {
        "schema": METRICS_SCHEMA,
        "config_snapshot": snap,
        "oracle": {"profit": oracle_profit, "soc_levels": soc_levels,
                   "power_levels": power_levels},
        "policies": entries,
    }
    out_path = Path(args.out) if args.out else out / "evaluation.json"
    _write_json(out_path, payload)

    print(f"{'mode':<10}{'profit':>14}{'ratio':>10}{'mono':>8}")
    for e in entries:
        ratio = f"{e['profit_ratio']:.4f}" if e["profit_ratio"] is not None else "-"
        mono = f"{e['mono_metric']:.4f}" if e["mono_metric"] is not None else "-"
        print(f"{e['mode']:<10}{e['profit']:>14.2f}{ratio:>10}{mono:>8}")
    print(f"{'oracle':<10}{oracle_profit:>14.2f}{'1.0000':>10}{'-':>8}")
    print(f"wrote {out_path}")
    return 0


def cmd_oracle(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set)
    params = parse_ess(cfg)
    train_series, test_series = resolve_series(cfg)
    series = {"test": test_series, "train": train_series}[args.window]
    osec = _section(cfg, "oracle")
    soc_levels = int(osec.get("soc_levels", 401))
    power_levels = int(osec.get("power_levels", 21))

    profit, schedule = hindsight_dp(series.values, params,
                                    soc_levels=soc_levels, power_levels=power_levels)
    coarse_n = max(2, (soc_levels - 1) // 2 + 1)
    coarse_profit, _ = hindsight_dp(series.values, params,
                                    soc_levels=coarse_n, power_levels=power_levels)
    payload = {
        "schema": ORACLE_SCHEMA,
        "config_snapshot": _snapshot(cfg, params),
        "window": args.window,
        "profit": profit,
        "soc_levels": soc_levels,
        "power_levels": power_levels,
        "refinement": {
            "coarse_soc_levels": coarse_n,
            "coarse_profit": coarse_profit,
            "relative_change": abs(profit - coarse_profit) / abs(profit)
            if profit != 0 else 0.0,
            "max_soc_rounding_mwh": dp_rounding_error(params, soc_levels, power_levels),
        },
        "schedule_mw": [float(p) for p in schedule],
    }
    out_path = Path(args.out) if args.out else _out_dir(args) / "oracle.json"
    _write_json(out_path, payload)
    print(f"oracle profit {profit:.2f} over {series.n_days} days; wrote {out_path}")
    return 0


def cmd_synth_data(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.set) if args.config else {}
    syn = _section(cfg, "data").get("synthetic", {}) if cfg else {}
    seed = args.seed if args.seed is not None else syn.get("seed")
    days = args.days if args.days is not None else syn.get("days")
    if seed is None:
        raise ConfigError("synth-data: need --seed or data.synthetic.seed")
    if days is None:
        raise ConfigError("synth-data: need --days or data.synthetic.days")
    spec_keys = {k: v for k, v in syn.items() if k not in ("seed", "days")}
    try:
        spec = SynthSpec(**spec_keys)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"data.synthetic: {e}") from e
    series = synth_prices(int(seed), int(days), spec)
    out_path = Path(args.out) if args.out else _out_dir(args) / "synthetic.csv"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_csv(series, out_path)
    print(f"wrote {out_path} ({days} days, seed {seed})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nnbid",
        description="Train, discretize, extract, and evaluate storage market bids.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="JSON config file")
        p.add_argument("--set", action="append", metavar="KEY.PATH=VALUE",
                       help="override a config key (JSON value)")
        p.add_argument("--out-dir", default=".", help="output directory")

    p = sub.add_parser("train", help="PPO-train a policy in one bid mode")
    common(p)
    p.add_argument("--mode", required=True, choices=("self", "two-pair", "nneb"))
    p.add_argument("--seed", required=True, type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("retrain", help="derive levels, then monotone+discrete retraining")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.set_defaults(func=cmd_retrain)

    p = sub.add_parser("extract", help="emit the hourly bid schedule from a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--hours", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="market-faithful evaluation vs the oracle")
    common(p)
    p.add_argument("--checkpoint", required=True, action="append",
                   help="checkpoint JSON (repeatable)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle", help="hindsight-optimal profit and schedule")
    common(p)
    p.add_argument("--window", choices=("test", "train"), default="test")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("synth-data", help="generate a synthetic price CSV")
    common(p, config_required=False)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--days", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synth_data)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
