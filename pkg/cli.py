"""
PairTrust command line.

    pairtrust simulate --roster roster.json --condition all --sessions 5 --out runs/a
    pairtrust score    --in rounds.csv --params default --out runs/b
    pairtrust analyze  --in rounds.csv --against external.csv --out runs/c
    pairtrust compare  --in rounds.csv --start-round 4 --out runs/d
    pairtrust compare  --in rounds.csv --model behavior --level round --condition score --out runs/e

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal numeric error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

load_dotenv()

from config import (
    DEFAULT_OUT_DIR,
    DEFAULT_SEED,
    DEFAULT_START_ROUND,
    ENDOWMENT,
    HUMAN_DECIMALS,
    MULTIPLIER,
    ROUNDS_PER_PAIR,
)
from tools.agents import load_roster, roster_to_json
from tools.analysis import (
    BEHAVIOR_LEVELS,
    MEASURE_COLUMNS,
    condition_comparisons,
    dependent_measures,
    external_comparison,
    predictive_comparison,
    trust_behavior_regressions,
    zero_send_rates,
)
from tools.errors import NumericError, PairTrustError, UsageError
from tools.game_engine import GameCondition, GameConfig
from tools.ledger import REPUTATION_COLUMNS, TRAJECTORY_COLUMNS, score_log
from tools.logger import log_event, setup_logging
from tools.reports import (
    BEHAVIOR_COLUMNS,
    RunConfig,
    behavior_table,
    comparisons_table,
    format_behavior_table,
    format_table,
    write_manifest,
    write_report,
    write_report_schema,
    write_table,
)
from tools.round_log import parse_round_log, write_round_log, write_rows
from tools.simulation import run_experiment
from tools.trust_engine import load_trust_params

logger = logging.getLogger(__name__)

CONDITION_CHOICES = [c.value for c in GameCondition] + ["all"]
COMPARISON_COLUMNS = [
    "role", "baseline", "condition", "n_pairs", "ci_lo", "ci_hi", "ci_df", "mean_diff", "degenerate",
    "welch_t", "welch_df", "welch_p",
]


class _ArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: error: {message}\n\n{self.format_help()}")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--params", default="default", help="trust params JSON file, or 'default'")
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT_DIR, help="output directory")
    parser.add_argument("--format", choices=["csv", "json"], default="csv", dest="output_format")
    parser.add_argument("--endowment", type=int, default=ENDOWMENT)
    parser.add_argument("--multiplier", type=int, default=MULTIPLIER)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="pairtrust", description="Pairwise trust scores for repeated trust games.")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="play seeded games between scripted agents")
    _add_common(simulate)
    simulate.add_argument("--roster", required=True, type=Path, help="roster JSON: [{agent_id, kind, params}]")
    simulate.add_argument("--seed", type=int, default=DEFAULT_SEED)
    simulate.add_argument("--condition", choices=CONDITION_CHOICES, default=GameCondition.SIMPLE.value)
    simulate.add_argument("--sessions", type=int, default=1, help="independent groups")
    simulate.add_argument("--group-size", type=int, default=None, help="defaults to the roster size")
    simulate.add_argument("--rounds-per-pair", type=int, default=ROUNDS_PER_PAIR)
    simulate.add_argument("--plot", action="store_true", help="also write trust_trajectory.png")
    simulate.set_defaults(handler=cmd_simulate)

    score = commands.add_parser("score", help="trust and reputation trajectories of a round log")
    _add_common(score)
    score.add_argument("--in", dest="input_path", required=True, type=Path)
    score.add_argument("--plot", action="store_true", help="also write trust_trajectory.png")
    score.set_defaults(handler=cmd_score)

    analyze = commands.add_parser("analyze", help="dependent measures, zero-send rates, condition tests")
    _add_common(analyze)
    analyze.add_argument("--in", dest="input_path", required=True, type=Path)
    analyze.add_argument("--condition", choices=[c.value for c in GameCondition], default=GameCondition.SIMPLE.value,
                         help="baseline condition for paired and Welch tests")
    analyze.add_argument("--against", type=Path, default=None, help="second round log for a Welch comparison")
    analyze.add_argument("--plot", action="store_true", help="also write condition_means.png")
    analyze.set_defaults(handler=cmd_analyze)

    compare = commands.add_parser("compare", help="trust vs. reputation as predictors of send proportions")
    _add_common(compare)
    compare.add_argument("--in", dest="input_path", required=True, type=Path)
    compare.add_argument("--start-round", type=int, default=DEFAULT_START_ROUND)
    compare.add_argument("--condition", choices=[c.value for c in GameCondition], default=None,
                         help="only this game; every game in the log by default")
    compare.add_argument("--model", choices=["comparison", "behavior"], default="comparison",
                         help="trust vs. reputation (comparison) or send proportion on both sides' trust (behavior)")
    compare.add_argument("--level", choices=list(BEHAVIOR_LEVELS), default="average",
                         help="behavior models on participant averages or per round")
    compare.add_argument("--dataset", default=None, help="label for the report's dataset column")
    compare.set_defaults(handler=cmd_compare)
    return parser


def _prepare_out(args: argparse.Namespace) -> Path:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _finish(run_config: RunConfig, out_dir: Path, outputs: List[Path]) -> int:
    write_manifest(run_config, out_dir, [p.name for p in outputs])
    for path in outputs:
        log_event("OUTPUT", str(path))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    params = load_trust_params(args.params)
    roster = load_roster(args.roster)
    conditions = list(GameCondition) if args.condition == "all" else [GameCondition(args.condition)]
    game = GameConfig(
        endowment=args.endowment,
        multiplier=args.multiplier,
        group_size=args.group_size if args.group_size is not None else len(roster),
        rounds_per_pair=args.rounds_per_pair,
        condition=conditions[0],
        rng_seed=args.seed,
        trust_params=params,
    )
    run_config = RunConfig(
        command="simulate",
        trust_params=params,
        game=game,
        conditions=[c.value for c in conditions],
        sessions=args.sessions,
        roster=roster_to_json(roster),
        seed=args.seed,
        endowment=args.endowment,
        multiplier=args.multiplier,
        output_format=args.output_format,
    )
    log_event("RUN", f"simulate config_hash={run_config.config_hash()} seed={args.seed}")

    result = run_experiment(game, roster, sessions=args.sessions, conditions=conditions)
    out_dir = _prepare_out(args)
    fmt = args.output_format
    outputs = [
        write_round_log(result.records, out_dir / "rounds.csv"),
        write_rows(result.trajectory, TRAJECTORY_COLUMNS, out_dir / f"trust_trajectory.{fmt}", fmt),
        write_rows(result.reputations, REPUTATION_COLUMNS, out_dir / f"reputation_trajectory.{fmt}", fmt),
    ]
    if args.plot and result.trajectory:
        from tools.visualizer import plot_trust_trajectory

        outputs.append(plot_trust_trajectory(result.trajectory, out_dir / "trust_trajectory.png"))
    return _finish(run_config, out_dir, outputs)


def cmd_score(args: argparse.Namespace) -> int:
    params = load_trust_params(args.params)
    run_config = RunConfig(
        command="score",
        trust_params=params,
        input_path=str(args.input_path),
        endowment=args.endowment,
        multiplier=args.multiplier,
        output_format=args.output_format,
    )
    log_event("RUN", f"score config_hash={run_config.config_hash()} input={args.input_path}")

    records = parse_round_log(args.input_path, multiplier=args.multiplier, endowment=args.endowment)
    trajectory, reputations = score_log(records, params, args.endowment, args.multiplier)
    out_dir = _prepare_out(args)
    fmt = args.output_format
    outputs = [
        write_rows(trajectory, TRAJECTORY_COLUMNS, out_dir / f"trust_trajectory.{fmt}", fmt),
        write_rows(reputations, REPUTATION_COLUMNS, out_dir / f"reputation_trajectory.{fmt}", fmt),
    ]
    if args.plot and trajectory:
        from tools.visualizer import plot_trust_trajectory

        outputs.append(plot_trust_trajectory(trajectory, out_dir / "trust_trajectory.png"))
    return _finish(run_config, out_dir, outputs)


def cmd_analyze(args: argparse.Namespace) -> int:
    run_config = RunConfig(
        command="analyze",
        conditions=[args.condition],
        input_path=str(args.input_path),
        against_path=str(args.against) if args.against else None,
        endowment=args.endowment,
        multiplier=args.multiplier,
        output_format=args.output_format,
    )
    log_event("RUN", f"analyze config_hash={run_config.config_hash()} input={args.input_path}")

    records = parse_round_log(args.input_path, multiplier=args.multiplier, endowment=args.endowment)
    measures = dependent_measures(records, args.endowment, args.multiplier)
    rates = [{"game_condition": c, "role": role, "zero_send_rate": rate} for c, role, rate in zero_send_rates(records)]
    comparisons = comparisons_table(condition_comparisons(measures, baseline=args.condition))

    out_dir = _prepare_out(args)
    fmt = args.output_format
    outputs = [
        write_rows(measures, MEASURE_COLUMNS, out_dir / f"dependent_measures.{fmt}", fmt),
        write_table(rates, ["game_condition", "role", "zero_send_rate"], fmt, out_dir / f"zero_send_rates.{fmt}"),
        write_table(comparisons, COMPARISON_COLUMNS, fmt, out_dir / f"comparisons.{fmt}"),
    ]
    if args.against is not None:
        theirs = dependent_measures(
            parse_round_log(args.against, multiplier=args.multiplier, endowment=args.endowment),
            args.endowment,
            args.multiplier,
        )
        welch = external_comparison(measures, theirs, condition=args.condition, role="sender")
        row = {"condition": args.condition, "role": "sender", "welch_t": welch.t, "welch_df": welch.df, "welch_p": welch.p_value}
        outputs.append(write_table([row], list(row), fmt, out_dir / f"external_comparison.{fmt}"))
    if args.plot and measures:
        from tools.visualizer import plot_condition_means

        outputs.append(plot_condition_means(measures, out_dir / "condition_means.png"))
    return _finish(run_config, out_dir, outputs)


def cmd_compare(args: argparse.Namespace) -> int:
    params = load_trust_params(args.params)
    dataset = args.dataset or Path(args.input_path).stem
    behavior = args.model == "behavior"
    run_config = RunConfig(
        command="compare",
        trust_params=params,
        conditions=[args.condition] if args.condition else [],
        input_path=str(args.input_path),
        start_round=args.start_round,
        model=args.model,
        level=args.level if behavior else None,
        endowment=args.endowment,
        multiplier=args.multiplier,
        output_format=args.output_format,
    )
    log_event("RUN", f"compare config_hash={run_config.config_hash()} input={args.input_path} model={args.model}")

    records = parse_round_log(args.input_path, multiplier=args.multiplier, endowment=args.endowment)
    options = dict(
        trust_params=params,
        start_round=args.start_round,
        endowment=args.endowment,
        multiplier=args.multiplier,
        dataset=dataset,
        condition=args.condition,
    )
    out_dir = _prepare_out(args)
    fmt = args.output_format

    if behavior:
        models = trust_behavior_regressions(records, level=args.level, **options)
        path = write_table(behavior_table(models), BEHAVIOR_COLUMNS, fmt, out_dir / f"behavior_regressions.{fmt}")
        print(format_behavior_table(models, HUMAN_DECIMALS))
        return _finish(run_config, out_dir, [path])

    reports = predictive_comparison(records, **options)
    outputs = [write_report(reports, fmt, out_dir / f"regression_report.{fmt}", run_config)]
    if fmt == "json":
        outputs.append(write_report_schema(outputs[0]))
    print(format_table(reports, HUMAN_DECIMALS))
    return _finish(run_config, out_dir, outputs)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return e.exit_code
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else 0

    setup_logging()
    try:
        return args.handler(args)
    except NumericError as e:
        logger.error(f"Internal numeric error: {e}", exc_info=True)
        return e.exit_code
    except PairTrustError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return 2
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
