"""Command line front end.

Subcommands: evaluate (one placement -> SE report), oracle (exhaustive),
optimize (random|greedy), train (policy-gradient), sweep (full experiment).
Global flags: --config PATH, --seed N, --out DIR.  Exit code 0 on success;
categorized error message and nonzero code otherwise.
"""

import argparse
import sys
from dataclasses import replace

import numpy as np

from .config import ScenarioConfig
from .harness import (ConfigError, ExperimentSpec, dump_config, load_config,
                      run_sweep, run_training)
from .optimizers import (BudgetExceededError, SumSeObjective, exhaustive_search,
                         greedy_coordinate_ascent, random_search)

EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_INTERNAL = 1


def _load_spec(args) -> ExperimentSpec:
    if args.config is not None:
        spec = load_config(args.config)
    else:
        spec = ExperimentSpec(scenario=ScenarioConfig())
        spec.validate()
    if args.seed is not None:
        spec.seeds = [args.seed]
        spec.ppo = replace(spec.ppo, rng_seed=args.seed)
    if args.out is not None:
        spec.output_dir = args.out
    return spec


def _parse_placement(raw: str, num_aps: int) -> np.ndarray:
    try:
        values = [int(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"placement must be comma-separated integers, got '{raw}'")
    if len(values) != num_aps:
        raise ConfigError(f"placement needs {num_aps} entries, got {len(values)}")
    return np.asarray(values, dtype=np.int64)


def _print_report(scenario, placement, report) -> None:
    print(f"placement: {' '.join(str(int(n)) for n in placement)}")
    print(f"{'TA':>3} {'ds_power_w':>14} {'interf_w':>14} {'noise_w':>14} "
          f"{'sinr':>12} {'se_bps_hz':>12}")
    for k in range(scenario.num_tas):
        interference = report.ui_power[k].sum()
        print(f"{k:>3} {report.ds_power[k]:>14.6e} {interference:>14.6e} "
              f"{report.noise_term[k]:>14.6e} {report.sinr[k]:>12.6g} {report.se[k]:>12.6g}")
    print(f"sum_se_bps_hz: {report.sum_se:.12g}")


def cmd_evaluate(args) -> int:
    spec = _load_spec(args)
    scenario = spec.scenario
    obj = SumSeObjective(scenario)
    if args.placement is None:
        placement = np.ones(scenario.num_aps, dtype=np.int64)
    else:
        placement = _parse_placement(args.placement, scenario.num_aps)
    report = obj.report(placement)
    _print_report(scenario, placement, report)
    return 0


def cmd_oracle(args) -> int:
    spec = _load_spec(args)
    scenario = spec.scenario
    obj = SumSeObjective(scenario)
    res = exhaustive_search(obj, scenario.num_aps, scenario.num_positions,
                            budget_cap=args.cap if args.cap else spec.exhaustive_cap)
    print(f"best placement: {' '.join(str(n) for n in res.best_placement)}")
    print(f"best sum_se_bps_hz: {res.best_value:.12g}")
    print(f"evaluations: {res.evaluations}")
    return 0


def cmd_optimize(args) -> int:
    spec = _load_spec(args)
    scenario = spec.scenario
    obj = SumSeObjective(scenario)
    seed = spec.seeds[0]
    if args.algorithm == "random":
        budget = args.budget if args.budget else spec.random_budget
        res = random_search(obj, scenario.num_aps, scenario.num_positions,
                            budget, rng_seed=seed)
    else:
        passes = args.max_passes if args.max_passes else spec.greedy_max_passes
        res = greedy_coordinate_ascent(obj, scenario.num_aps, scenario.num_positions,
                                       max_passes=passes)
    print(f"algorithm: {args.algorithm}")
    print(f"best placement: {' '.join(str(n) for n in res.best_placement)}")
    print(f"best sum_se_bps_hz: {res.best_value:.12g}")
    print(f"evaluations: {res.evaluations}")
    return 0


def cmd_train(args) -> int:
    spec = _load_spec(args)
    if args.episodes is not None:
        spec.ppo = replace(spec.ppo, max_episodes=args.episodes)
    paths = run_training(spec)
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_sweep(args) -> int:
    spec = _load_spec(args)
    path = run_sweep(spec)
    print(f"wrote {path}")
    return 0


def cmd_show_config(args) -> int:
    spec = _load_spec(args)
    sys.stdout.write(dump_config(spec))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="railmimo",
        description="Movable-antenna cell-free massive MIMO simulator and optimizers")
    parser.add_argument("--config", type=str, default=None, help="key = value config file")
    parser.add_argument("--seed", type=int, default=None, help="override run seed")
    parser.add_argument("--out", type=str, default=None, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score one placement")
    p.add_argument("--placement", type=str, default=None,
                   help="comma-separated positions, default all ones")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle", help="exhaustive search")
    p.add_argument("--cap", type=int, default=None, help="evaluation cap")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("optimize", help="random or greedy search")
    p.add_argument("--algorithm", choices=("random", "greedy"), required=True)
    p.add_argument("--budget", type=int, default=None, help="random-search budget")
    p.add_argument("--max-passes", type=int, default=None, help="greedy sweep limit")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("train", help="policy-gradient training, writes convergence CSVs")
    p.add_argument("--episodes", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run the configured experiment sweep")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("show-config", help="print the effective configuration")
    p.set_defaults(func=cmd_show_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error[config]: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as e:
        print(f"error[budget]: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as e:
        print(f"error[validation]: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error[io]: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
