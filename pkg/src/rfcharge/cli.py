"""Command-line entry point: ``rfcharge <subcommand> [options]``."""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .beamforming import solve_itbf
from .config import parse_config, parse_value
from .errors import ConfigError, InvalidParameterError, RfChargeError, SingularGeometryError
from .harvesting import read_demand_trace

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _common(p):
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted override, e.g. --set ddpg.tau=0.01 (repeatable)")


def build_parser():
    parser = argparse.ArgumentParser(prog="rfcharge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("beamform", help="solve one charging slot")
    _common(p)
    p.add_argument("--weights", help="comma-separated charging weights (default: all ones)")
    p.add_argument("--budget", type=float, help="transmit power budget in W (default: p_max)")
    p.add_argument("-K", type=int, help="number of devices")
    p.add_argument("-N", type=int, help="elements per side of the square array")

    p = sub.add_parser("simulate", help="run the threshold heuristic")
    _common(p)

    p = sub.add_parser("train", help="train a DDPG scheduler")
    _common(p)

    p = sub.add_parser("eval", help="greedy rollout of a checkpoint")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--trace", help="demand trace CSV (default: the seed's evaluation trace)")

    p = sub.add_parser("compare", help="heuristic vs DDPG on shared traces")
    _common(p)
    p.add_argument("--seeds", default="1,2,3", help="comma-separated seeds")

    p = sub.add_parser("sweep", help="repeat a run over a list of values")
    _common(p)
    p.add_argument("--key", default="K", help="dotted config key to vary")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--seeds", help="comma-separated seeds (default: the config seed)")
    return parser


def _ints(text, name):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}", name) from None


def _config(args, extra=()):
    overrides = list(extra) + list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return parse_config(args.config, overrides)


def _dump(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_beamform(args, out):
    extra = []
    if args.K is not None:
        extra.append(f"K={args.K}")
    if args.N is not None:
        extra += [f"array.rows={args.N}", f"array.cols={args.N}"]
    cfg = _config(args, extra)
    _, _, H = harness.build_channel(cfg)
    if args.weights:
        try:
            alpha = np.array([float(x) for x in args.weights.split(",")])
        except ValueError:
            raise ConfigError(f"bad weights {args.weights!r}", "weights") from None
    else:
        alpha = np.ones(cfg.K)
    if alpha.shape[0] != cfg.K:
        raise ConfigError(f"expected {cfg.K} weights, got {alpha.shape[0]}", "weights")
    budget = cfg.p_max if args.budget is None else args.budget
    if budget < 0:
        raise ConfigError("must be nonnegative", "budget")
    rep = solve_itbf(alpha, budget, H, harness.eh_params(cfg), harness.solver_options(cfg))
    report = rep.to_dict()
    report.pop("wall_time", None)
    _dump(out / "solve_report.json", report)
    print(f"objective {rep.objective:.6g}  weighted DC {rep.weighted_dc * 1e3:.4f} mW  "
          f"outer {rep.outer_iterations}  status {rep.status}")


def _print_summary(label, metrics):
    s = metrics.summary()
    if s["episodes"]:
        print(f"{label}: {s['episodes']} episodes  reward {s['mean_reward']:.4f}  "
              f"power {s['mean_tx_power_W']:.4f} W  outage {s['outage_prob']:.4f}")


def cmd_simulate(args, out):
    cfg = _config(args)
    _print_summary("heuristic", harness.run_heuristic(cfg, out=out))


def cmd_train(args, out):
    cfg = _config(args)
    _, metrics = harness.run_train(cfg, out=out)
    _print_summary("train", metrics)


def cmd_eval(args, out):
    cfg = _config(args)
    trace = None
    if args.trace:
        flat = read_demand_trace(args.trace)
        if flat.shape[1] != cfg.K or flat.shape[0] % cfg.T:
            raise ConfigError(f"trace shape {flat.shape} does not fit K={cfg.K}, T={cfg.T}",
                              "trace")
        trace = flat.reshape(-1, cfg.T, cfg.K)
    try:
        agent = harness.load_checkpoint(args.checkpoint)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load checkpoint: {exc}", "checkpoint") from exc
    _print_summary("eval", harness.run_eval(cfg, agent, trace, out=out))


def cmd_compare(args, out):
    cfg = _config(args)
    report = harness.compare(cfg, _ints(args.seeds, "seeds"), out=out)
    for r in report["seeds"]:
        print(f"seed {r['seed']}: delta power {r['delta_tx_power_W']:+.4f} W  "
              f"delta outage {r['delta_outage_prob']:+.4f}")


def cmd_sweep(args, out):
    cfg = _config(args)
    values = [parse_value(v) for v in args.values.split(",") if v.strip()]
    seeds = _ints(args.seeds, "seeds") if args.seeds else None
    for r in harness.sweep(cfg, args.key, values, seeds, out=out):
        print(f"{r['key']}={r['value']} seed {r['seed']}: power {r['mean_tx_power_W']:.4f} W  "
              f"outage {r['outage_prob']:.4f}")


COMMANDS = {"beamform": cmd_beamform, "simulate": cmd_simulate, "train": cmd_train,
            "eval": cmd_eval, "compare": cmd_compare, "sweep": cmd_sweep}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.seed is not None and args.seed < 0:
        print("error: seed: must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, out)
    except (ConfigError, InvalidParameterError, SingularGeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RfChargeError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
