"""
Command-Line Interface for ledfit

Subcommands:
    convert     photometric file -> samples CSV (or single-plane .ies)
    fit         fit the cosine-power model to one or more files
    gen         generate artificial instances as .ies files plus manifest
    experiment  run configuration sets over a dataset
    stats       summary, ranking, Wilcoxon, improvement and scatter reports

Results go to standard output as CSV (or to --out); progress and errors
go to standard error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from ledfit import __version__
from ledfit.config import load_config_file, log_level, resolve
from ledfit.errors import EXIT_INPUT, EXIT_OK, EXIT_USAGE, ConfigError, LedFitError
from ledfit.generator import DEFAULT_I_MAX, generate_dataset, write_dataset
from ledfit.harness import config_set, load_dataset, run_suite
from ledfit.heuristics import random_params, search
from ledfit.newton import newton_optimize
from ledfit.photometry import format_samples_csv, load_samples, write_ies
from ledfit.records import (
    ResultsStore,
    comment_header,
    fit_frame,
    read_params_csv,
    read_value_list,
    with_header,
)
from ledfit.state import AlgorithmConfig, CliConfig, FitResult, NewtonOptions
from ledfit.stats import (
    improvement_from_records,
    improvement_report,
    rank_frame,
    scatter_report,
    summary_table,
    weighted_ranking,
    wilcoxon_table,
)

logger = logging.getLogger(__name__)

FIT_METHODS = ("newton", "if", "if+newton", "s-newton", "l-newton", "random")
REPORTS = ("summary", "rank", "wilcoxon", "improvement", "scatter")
CONFIG_SETS = ("table1", "short", "long", "extended", "ran")

# Total evaluation budget per fit method when --budget is not given.
DEFAULT_BUDGETS = {
    "s-newton": 1_000_000,
    "l-newton": 4_000_000,
    "random": 1_000_000,
    "if": 1_000_000,
    "if+newton": 1_000_000,
}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with the usage exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _status(message: str = ""):
    print(message, file=sys.stderr)


def _banner(title: str):
    _status("=" * 70)
    _status(title)
    _status("=" * 70)


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, encoding="utf-8")
        _status(f"✅ Wrote {out}")
    else:
        sys.stdout.write(text)


def _settings(args: argparse.Namespace, keys: List[str]) -> CliConfig:
    """Merge flags with the config file, the environment and the defaults."""
    flags = {key: getattr(args, key, None) for key in keys}
    merged = resolve(flags, load_config_file(args.config))
    settings = CliConfig(
        subcommand=args.command,
        no_timestamp=args.no_timestamp,
        average=getattr(args, "average", False),
    )
    for key in keys:
        settings[key] = merged.get(key)
    return settings


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ledfit",
        description="Fit sums of cosine-power functions to LED light distributions.",
    )
    parser.add_argument("--version", action="version", version=f"ledfit {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file with option defaults")
    common.add_argument(
        "--no-timestamp",
        action="store_true",
        help="omit the timestamp header and wall times for byte-identical output",
    )
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    output = argparse.ArgumentParser(add_help=False)
    output.add_argument("--out", dest="output", help="output file (default: standard output)")

    planes = argparse.ArgumentParser(add_help=False)
    planes.add_argument("--plane", type=int, help="C-plane index (default 0)")
    planes.add_argument("--average", action="store_true", help="average all C-planes")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    convert = sub.add_parser(
        "convert", parents=[common, output, planes], help="photometric file to samples CSV"
    )
    convert.add_argument("input")
    convert.add_argument("--to", choices=("csv", "ies"), default="csv")
    convert.add_argument("--decimals", type=int, help="candela decimals (default: full precision)")

    fit = sub.add_parser("fit", parents=[common, output, planes], help="fit the model to files")
    fit.add_argument("inputs", nargs="+")
    fit.add_argument("--method", choices=FIT_METHODS)
    fit.add_argument("--init", default="random", help="params CSV or 'random' (newton only)")
    fit.add_argument("--budget", type=int, help="total heuristic evaluations")
    fit.add_argument("--starts", type=int, help="IF multi-starts")
    fit.add_argument("--seed", type=int)
    fit.add_argument("--pool-size", dest="pool_size", type=int)
    fit.add_argument("--max-iterations", type=int, default=50)

    gen = sub.add_parser("gen", parents=[common], help="generate artificial instances")
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", dest="directory", required=True, help="target directory")
    gen.add_argument("--i-max", dest="i_max", type=float, default=DEFAULT_I_MAX)
    gen.add_argument("--decimals", type=int, help="candela decimals (default: full precision)")

    experiment = sub.add_parser(
        "experiment", parents=[common, output, planes], help="run configurations over a dataset"
    )
    experiment.add_argument("--configs", choices=CONFIG_SETS, default="table1")
    experiment.add_argument("--dataset", required=True, help="dataset directory")
    experiment.add_argument("--seed", type=int)
    experiment.add_argument("--scale", type=float, default=1.0, help="budget factor")
    experiment.add_argument("--repeats", type=int, default=1)
    experiment.add_argument("--jobs", dest="workers", type=int, help="parallel workers")

    stats = sub.add_parser("stats", parents=[common, output], help="statistics over results")
    stats.add_argument("--in", dest="inputs", help="results CSV")
    stats.add_argument("--report", choices=REPORTS, default="summary")
    stats.add_argument("--criterion", choices=("Best", "Mean"), default="Best")
    stats.add_argument("--before", help="rmsp list before improvement")
    stats.add_argument("--after", help="rmsp list after improvement")
    stats.add_argument(
        "--from-records",
        action="store_true",
        help="improvement of Newton over the heuristic stage of each record",
    )
    return parser


def cmd_convert(args: argparse.Namespace) -> int:
    settings = _settings(args, ["output", "plane", "decimals"])
    samples = load_samples(args.input, settings["plane"], settings["average"])
    _status(f"📄 {args.input}: {samples.n} samples, i_max {samples.i_max:g} cd")
    if args.to == "ies":
        text = write_ies(samples, settings["decimals"], metadata=[f"[TEST] {Path(args.input).stem}"])
    else:
        header = comment_header(
            None,
            {"input": args.input, "plane": settings["plane"], "average": settings["average"]},
            not settings["no_timestamp"],
        )
        text = format_samples_csv(samples, header)
    _emit(text, settings["output"])
    return EXIT_OK


def _fit_config(method: str, budget: int, starts: int, pool_size: int) -> AlgorithmConfig:
    if method == "s-newton":
        return AlgorithmConfig("S-Newton", "random-newton", budget, pool_size=pool_size)
    if method == "l-newton":
        return AlgorithmConfig("L-Newton", "random-newton", budget, pool_size=pool_size)
    if method == "random":
        return AlgorithmConfig("RAN", "random", budget, pool_size=pool_size, newton=False)
    if starts < 1 or budget < starts:
        raise ConfigError(f"budget {budget} is too small for {starts} starts")
    return AlgorithmConfig(
        f"IF{starts}", "if", starts, budget // starts, newton=method == "if+newton"
    )


def cmd_fit(args: argparse.Namespace) -> int:
    settings = _settings(
        args, ["output", "method", "seed", "budget", "starts", "pool_size", "plane"]
    )
    method = settings["method"]
    seed = settings["seed"]
    if method not in FIT_METHODS:
        raise ConfigError(f"unknown method {method!r}")
    newton_opts = NewtonOptions(max_iterations=args.max_iterations)
    budget = settings["budget"] or DEFAULT_BUDGETS.get(method)

    _banner(f"🔧 ledfit fit ({method}, seed {seed})")
    results = []
    for path in args.inputs:
        samples = load_samples(path, settings["plane"], settings["average"])
        if method == "newton":
            if args.init == "random":
                p0 = random_params(np.random.default_rng(seed))
            else:
                p0 = read_params_csv(args.init)
            result: FitResult = newton_optimize(p0, samples, newton_opts)
        else:
            cfg = _fit_config(method, budget, settings["starts"], settings["pool_size"])
            result = search(cfg, samples, seed, newton_opts).best
        _status(f"✅ {Path(path).name}: rmsp {result.rmsp:.6g}% ({result.termination.value})")
        results.append((Path(path).stem, method, result))

    config: Dict[str, Any] = {"method": method}
    if method == "newton":
        config["init"] = args.init
    else:
        config.update(budget=budget, starts=settings["starts"])
    header = comment_header(seed, config, not settings["no_timestamp"])
    _emit(with_header(header, fit_frame(results)), settings["output"])
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    settings = _settings(args, ["seed", "decimals"])
    if args.count < 0:
        raise ConfigError("--count must be >= 0")
    _banner(f"🎲 Generating {args.count} artificial instances (seed {settings['seed']})")
    instances = generate_dataset(args.count, settings["seed"], args.i_max)
    manifest = write_dataset(
        instances,
        args.directory,
        settings["decimals"],
        master_seed=settings["seed"],
        timestamp=not settings["no_timestamp"],
    )
    _status(f"✅ {len(instances)} files and {manifest}")
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    settings = _settings(args, ["output", "seed", "workers", "plane"])
    configs = config_set(args.configs, args.scale)
    dataset = load_dataset(args.dataset, settings["plane"], settings["average"])
    _banner(
        f"🧪 {len(configs)} configurations x {len(dataset)} instances x {args.repeats} "
        f"repeats (seed {settings['seed']}, {settings['workers']} workers)"
    )
    records = run_suite(
        configs, dataset, settings["seed"], args.repeats, settings["workers"]
    )
    header = comment_header(
        settings["seed"],
        {
            "configs": args.configs,
            "scale": args.scale,
            "repeats": args.repeats,
            "dataset": args.dataset,
        },
        not settings["no_timestamp"],
    )
    store = ResultsStore(header)
    store.extend(records)
    stats = store.get_stats()
    _status(f"📊 {stats['total_records']} records, best rmsp {stats['best_rmsp']:.6g}%")
    _emit(store.format(wall_times=not settings["no_timestamp"]), settings["output"])
    return EXIT_OK


def _improvement(args: argparse.Namespace) -> pd.DataFrame:
    if args.from_records:
        return improvement_from_records(ResultsStore.load(args.inputs).records)
    if not (args.before and args.after):
        raise ConfigError("the improvement report needs --before and --after, or --from-records")
    labels, before = read_value_list(args.before)
    _, after = read_value_list(args.after)
    return improvement_report(before, after, labels)


def cmd_stats(args: argparse.Namespace) -> int:
    settings = _settings(args, ["output"])
    needs_records = args.report != "improvement" or args.from_records
    if needs_records and not args.inputs:
        raise ConfigError(f"the {args.report} report needs --in")

    if args.report == "improvement":
        table = _improvement(args)
    else:
        records = ResultsStore.load(args.inputs).records
        if args.report == "summary":
            table = summary_table(records)
        elif args.report == "rank":
            table = rank_frame(weighted_ranking(records))
        elif args.report == "wilcoxon":
            table = wilcoxon_table(records, criterion=args.criterion)
        else:
            table = scatter_report(records)

    header = comment_header(
        None,
        {"report": args.report, "input": args.inputs or f"{args.before},{args.after}"},
        not settings["no_timestamp"],
    )
    _emit(with_header(header, table), settings["output"])
    return EXIT_OK


COMMANDS = {
    "convert": cmd_convert,
    "fit": cmd_fit,
    "gen": cmd_gen,
    "experiment": cmd_experiment,
    "stats": cmd_stats,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv``, run the subcommand and return the exit status."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # --help and --version exit with 0, parse errors with EXIT_USAGE
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else log_level(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except LedFitError as exc:
        _status(f"❌ Error: {exc}")
        return exc.exit_code
    except OSError as exc:
        _status(f"❌ Error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
