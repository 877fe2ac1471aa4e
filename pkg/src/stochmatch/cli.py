"""Command-line interface for the stochmatch workbench using argparse."""

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import __version__
from .analysis import (
    chebyshev_bound,
    chebyshev_series,
    convergence_series,
    greedy_expect_closed,
    greedy_expect_recurrence,
    greedy_ratio,
    greedy_summand,
    poisson_binomial_tail,
    round_dist,
    sbal_total_bound,
    slack_floor,
)
from .benchmarks import opt_fractional, sopt_dp
from .config import SettingsStore, get_settings, use_settings
from .dualaudit import SLACK_COLUMNS, epsilon_curve, estimate_slack, gnb_family, heterogeneous_sweep
from .engine import STATS_COLUMNS, OutcomeOracle, monte_carlo, run_online
from .errors import CapacityError, InvalidParameterError, StochMatchError, UsageError
from .logging_config import log_run_header, setup_logging
from .model import Instance, gen_gnb, gen_random, instance_to_dict, load, save, vertex_split
from .policies import POLICIES, StochasticBalance, get_policy
from .report import Report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3

GENERATORS: Dict[str, Callable[..., Instance]] = {"gnb": gen_gnb, "random": gen_random}

CONVERGENCE_COLUMNS = ["n", "b", "p", "sbal_ratio", "sbal_ci95", "bound_ratio", "greedy_ratio", "ratio_upper"]
COMPARE_COLUMNS = ["policy", "mean", "ci95", "opt", "sopt", "ratio_opt", "ratio_sopt", "zero_ratio"]
BENCHMARK_COLUMNS = ["benchmark", "instance", "value"]
EPSILON_COLUMNS = ["b", "min_ratio", "ci95", "floor", "epsilon"]

FORMULA_COLUMNS = {
    "round-dist": ["b", "k", "probability"],
    "sbal-bound": ["n", "b", "k", "sum_bound", "aggregate_bound", "ratio_bound"],
    "greedy": ["n", "m", "recurrence", "closed"],
    "greedy-ratio": ["n", "ratio", "summand"],
    "poisson-tail": ["b", "tail", "chebyshev"],
    "chebyshev": ["b", "load", "bound"],
    "slack-floor": ["b", "floor"],
    "convergence": ["n", "sbal_bound_ratio", "greedy_ratio"],
}


# --- Experiment configuration ---


def parse_list(text: Optional[str], kind: Callable[[str], Any] = int) -> List[Any]:
    """Parse a comma-separated list such as ``25,50,100``."""
    if text is None:
        return []
    try:
        return [kind(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise UsageError(f"cannot parse list {text!r}: {e}") from None


def _parse_value(text: str) -> Any:
    if "/" in text:
        return tuple(_parse_value(part) for part in text.split("/"))
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def parse_generator(spec: str) -> Dict[str, Any]:
    """Parse ``name:key=value,...``; ranges are written ``low/high``.

    >>> parse_generator("gnb:n=2,b=1,p=0.5")
    {'name': 'gnb', 'n': 2, 'b': 1, 'p': 0.5}
    """
    name, _, rest = spec.partition(":")
    params: Dict[str, Any] = {"name": name.strip()}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"generator parameter {item!r} is not in key=value form")
        params[key.strip()] = _parse_value(value.strip())
    return params


def generate(spec: str) -> Instance:
    params = parse_generator(spec)
    name = params.pop("name")
    if name not in GENERATORS:
        raise UsageError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")
    try:
        return GENERATORS[name](**params)
    except TypeError as e:
        raise UsageError(f"bad parameters for generator {name!r}: {e}") from None


@dataclass
class ExperimentConfig:
    """Everything that determines a command's output."""

    command: str
    instance: Optional[str] = None
    generator: Optional[str] = None
    policies: List[str] = field(default_factory=lambda: [StochasticBalance.name])
    trials: int = 100_000
    seed: int = 0
    out: Optional[str] = None
    workers: int = 1
    n_list: List[int] = field(default_factory=list)
    b_list: List[int] = field(default_factory=list)
    p_list: List[float] = field(default_factory=list)
    family: Optional[str] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "ExperimentConfig":
        settings = get_settings()
        instance = getattr(args, "instance", None)
        policies = parse_list(getattr(args, "policy", None), str) or [StochasticBalance.name]
        return cls(
            command=args.command,
            instance=str(instance) if instance else None,
            generator=getattr(args, "gen", None),
            policies=policies,
            trials=settings.trials if args.trials is None else args.trials,
            seed=settings.seed if args.seed is None else args.seed,
            out=str(args.out) if args.out else None,
            workers=settings.workers if args.workers is None else args.workers,
            n_list=parse_list(getattr(args, "n_list", None), int),
            b_list=parse_list(getattr(args, "b_list", None), int),
            p_list=parse_list(getattr(args, "p_list", None), float),
            family=getattr(args, "family", None),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def validate(self) -> None:
        if self.trials < 1:
            raise UsageError(f"--trials must be at least 1, got {self.trials}")
        if self.workers < 1:
            raise UsageError(f"--workers must be at least 1, got {self.workers}")
        if self.seed < 0:
            raise UsageError(f"--seed must be non-negative, got {self.seed}")
        if self.instance and not Path(self.instance).exists():
            raise UsageError(f"instance file not found: {self.instance}")
        for name in self.policies:
            if name not in POLICIES:
                raise UsageError(f"unknown policy {name!r}; choose from {', '.join(POLICIES)}")

    def load_instance(self) -> Instance:
        if bool(self.instance) == bool(self.generator):
            raise UsageError("give exactly one of --instance or --gen")
        if self.instance:
            return load(self.instance)
        return generate(self.generator)

    def report(self, columns: List[str]) -> Report:
        return Report.for_config(columns, self.to_dict())


def _dedupe(values: Sequence[Any], flag: str) -> List[Any]:
    unique = list(dict.fromkeys(values))
    if len(unique) != len(values):
        logger.warning(f"Dropping duplicate values from {flag}: {values} -> {unique}")
    return unique


def _ratio(value: float, benchmark: Optional[float]) -> Any:
    if benchmark is None:
        return ""
    if benchmark == 0.0:
        return 1.0 if value == 0.0 else math.inf
    return value / benchmark


# --- Report builders ---


def cmd_convergence(config: ExperimentConfig) -> Report:
    """Simulated SBal ratio on gen_gnb(n, b, p) against the analytic bounds."""
    if not config.n_list or not config.b_list or not config.p_list:
        raise UsageError("convergence needs --n-list, --b-list and --p-list")
    report = config.report(CONVERGENCE_COLUMNS)
    policy = StochasticBalance()
    for b in _dedupe(config.b_list, "--b-list"):
        for p in _dedupe(config.p_list, "--p-list"):
            for n in _dedupe(config.n_list, "--n-list"):
                stats = monte_carlo(gen_gnb(n, b, p), policy, config.trials, config.seed, config.workers)
                scale = n * b
                sbal_ratio = stats.mean / scale
                greedy = greedy_ratio(scale)
                report.add(
                    n,
                    b,
                    p,
                    sbal_ratio,
                    stats.half_width / scale,
                    sbal_total_bound(n, b).ratio_bound,
                    greedy,
                    sbal_ratio / greedy,
                )
                logger.info(f"n={n} b={b} p={p}: SBal ratio {sbal_ratio:.6f}")
    return report


def cmd_compare(config: ExperimentConfig) -> Report:
    """Policy means next to Opt and SOpt; a benchmark that is too large is left blank."""
    inst = config.load_instance()
    report = config.report(COMPARE_COLUMNS)

    benchmarks: Dict[str, Optional[float]] = {}
    for name, solve in (("opt", lambda: opt_fractional(inst).value), ("sopt", lambda: sopt_dp(inst, keep_actions=False).value)):
        try:
            benchmarks[name] = solve()
        except CapacityError as e:
            logger.warning(f"Skipping {name}: {e}")
            benchmarks[name] = None

    for name in config.policies:
        stats = monte_carlo(inst, get_policy(name), config.trials, config.seed, config.workers)
        ratio_opt = _ratio(stats.mean, benchmarks["opt"])
        ratio_sopt = _ratio(stats.mean, benchmarks["sopt"])
        zero = any(b == 0.0 for b in benchmarks.values() if b is not None) and stats.mean == 0.0
        report.add(
            name,
            stats.mean,
            stats.half_width,
            "" if benchmarks["opt"] is None else benchmarks["opt"],
            "" if benchmarks["sopt"] is None else benchmarks["sopt"],
            ratio_opt,
            ratio_sopt,
            zero,
        )
    return report


def cmd_simulate(config: ExperimentConfig, trace_path: Optional[Path] = None, predrawn: bool = False) -> Report:
    inst = config.load_instance()
    report = config.report(STATS_COLUMNS)
    for name in config.policies:
        policy = get_policy(name)
        stats = monte_carlo(inst, policy, config.trials, config.seed, config.workers, predrawn=predrawn)
        report.add(*stats.csv_row())
        if trace_path is not None:
            oracle = OutcomeOracle.predrawn(inst, config.seed) if predrawn else OutcomeOracle.seeded(config.seed)
            path = trace_path if len(config.policies) == 1 else trace_path.with_name(f"{trace_path.stem}.{name}{trace_path.suffix}")
            run_online(inst, policy, oracle).write(path)
            logger.info(f"Wrote trial 0 trace of {name} to {path}")
    return report


def cmd_benchmark(config: ExperimentConfig, which: str, sidecar: Optional[Path] = None) -> Report:
    inst = config.load_instance()
    report = config.report(BENCHMARK_COLUMNS)
    if which == "opt":
        solution = opt_fractional(inst)
        value = solution.value
        if sidecar is not None:
            solution.write(sidecar)
    else:
        dp = sopt_dp(inst, keep_actions=sidecar is not None)
        value = dp.value
        if sidecar is not None:
            dp.write(sidecar)
    report.add(which, inst.metadata.label(), value)
    return report


def cmd_dual_audit(config: ExperimentConfig) -> Report:
    if config.b_list:
        family = _audit_family(config.family)
        report = config.report(EPSILON_COLUMNS)
        for row in epsilon_curve(_dedupe(config.b_list, "--b-sweep"), family, config.trials, config.seed, config.workers):
            report.add(row.b, row.min_ratio, row.half_width, row.floor, row.epsilon)
        return report

    inst = config.load_instance()
    estimate = estimate_slack(inst, config.trials, config.seed, config.workers)
    report = config.report(SLACK_COLUMNS)
    for edge in estimate.edges:
        report.add(*edge.csv_row())
    report.footer.update(min_ratio=repr(estimate.min_ratio), c_effective=repr(estimate.c_effective))
    return report


def _audit_family(spec: Optional[str]):
    if not spec:
        raise UsageError("--b-sweep needs --family, e.g. gnb:n=3,p=0.1 or hetero:n_servers=3,p=0.1,seed=0")
    params = parse_generator(spec)
    name = params.pop("name")
    try:
        if name == "gnb":
            return gnb_family(params["n"], params["p"])
        if name == "hetero":
            return heterogeneous_sweep(**params)
    except (KeyError, TypeError) as e:
        raise UsageError(f"bad parameters for family {name!r}: {e}") from None
    raise UsageError(f"unknown family {name!r}; choose gnb or hetero")


def cmd_formulas(name: str, args: argparse.Namespace, config: ExperimentConfig) -> Report:
    report = config.report(FORMULA_COLUMNS[name])
    n_list = config.n_list
    b_list = config.b_list

    def need(values, flag):
        if not values:
            raise UsageError(f"formulas {name} needs {flag}")
        return values

    if name == "round-dist":
        if args.m is None:
            raise UsageError("formulas round-dist needs --m")
        for b in need(b_list, "--b-list"):
            for k, mass in enumerate(round_dist(b, args.m).masses):
                report.add(b, k, mass)
    elif name == "sbal-bound":
        for n in need(n_list, "--n-list"):
            for b in need(b_list, "--b-list"):
                bound = sbal_total_bound(n, b)
                report.add(n, b, bound.k, bound.sum_bound, bound.aggregate_bound, bound.ratio_bound)
    elif name == "greedy":
        for n in need(n_list, "--n-list"):
            ms = [args.m] if args.m is not None else range(n + 1)
            for m in ms:
                report.add(n, m, greedy_expect_recurrence(n, m), greedy_expect_closed(n, m))
    elif name == "greedy-ratio":
        for n in need(n_list, "--n-list"):
            report.add(n, greedy_ratio(n), greedy_summand(n))
    elif name == "poisson-tail":
        probs = parse_list(args.probs, float)
        for b in need(b_list, "--b-list"):
            total = math.fsum(probs)
            cheb = chebyshev_bound(total, b) if total < b else ""
            report.add(b, poisson_binomial_tail(probs, b), cheb)
    elif name == "chebyshev":
        if args.load is not None:
            for b in need(b_list, "--b-list"):
                report.add(b, args.load, chebyshev_bound(args.load, b))
        else:
            for b, bound in chebyshev_series(need(b_list, "--b-list")):
                report.add(b, max(b - b ** (2.0 / 3.0), 0.0), bound)
    elif name == "slack-floor":
        for b in need(b_list, "--b-list"):
            report.add(b, slack_floor(b))
    else:
        for n, sbal, greedy in convergence_series(need(n_list, "--n-list")):
            report.add(n, sbal, greedy)
    return report


# --- Command handlers ---


def _emit(report: Report, config: ExperimentConfig) -> int:
    if config.out:
        report.write(config.out)
        log_run_header(report.header_lines())
    else:
        report.write()
    return EXIT_OK


def gen_command(args):
    """Generate an instance and write it as JSON."""
    if args.kind == "gnb":
        inst = gen_gnb(args.n, args.b, args.p)
    elif args.kind == "random":
        inst = gen_random(
            n_servers=args.servers,
            n_requests=args.requests,
            edge_density=args.density,
            p_range=parse_list(args.p_range, float),
            cap_range=parse_list(args.cap_range, int),
            weight_range=parse_list(args.weight_range, float),
            seed=get_settings().seed if args.seed is None else args.seed,
        )
    else:
        if not args.instance or not Path(args.instance).exists():
            raise UsageError(f"instance file not found: {args.instance}")
        inst = vertex_split(load(args.instance))

    if args.out:
        save(inst, args.out)
        print(f"✓ Wrote {inst.n_servers} servers, {inst.n_requests} requests, {inst.n_edges} edges to {args.out}")
    else:
        json.dump(instance_to_dict(inst), sys.stdout, indent=1)
        sys.stdout.write("\n")
    return EXIT_OK


def simulate_command(args):
    """Monte Carlo estimate of each policy's expected matched weight."""
    config = ExperimentConfig.from_args(args)
    config.validate()
    return _emit(cmd_simulate(config, args.trace, args.predrawn), config)


def benchmark_command(args):
    """Exact offline benchmark value of an instance."""
    config = ExperimentConfig.from_args(args)
    config.validate()
    return _emit(cmd_benchmark(config, args.which, args.sidecar), config)


def formulas_command(args):
    """Evaluate closed forms, recurrences and bounds."""
    config = ExperimentConfig.from_args(args)
    return _emit(cmd_formulas(args.name, args, config), config)


def dual_audit_command(args):
    """Audit the primal-dual accounting of StochasticBalance."""
    config = ExperimentConfig.from_args(args)
    config.validate()
    return _emit(cmd_dual_audit(config), config)


def convergence_command(args):
    """Convergence table on the upper-triangular family."""
    config = ExperimentConfig.from_args(args)
    config.validate()
    return _emit(cmd_convergence(config), config)


def compare_command(args):
    """Compare policies with the offline benchmarks."""
    config = ExperimentConfig.from_args(args)
    config.validate()
    return _emit(cmd_compare(config), config)


def _columns_help(columns: Dict[str, str]) -> str:
    lines = ["output columns:"]
    lines.extend(f"  {name:<16}{text}" for name, text in columns.items())
    return "\n".join(lines)


def create_parser():
    """Create the argument parser."""
    parser = argparse.ArgumentParser(
        prog="stochmatch",
        description="Online b-matching with stochastic rewards: simulation, benchmarks and bounds",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--config-path",
        type=Path,
        default=None,
        help="Path to the settings file (default: $STOCHMATCH_CONFIG_PATH or the platform config dir)",
    )
    parser.add_argument(
        "--log-level",
        default=None,
        help="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)",
    )
    parser.add_argument("--no-log-file", action="store_true", help="Do not write a log file")

    # Flags shared by every subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Master seed (default from settings, 0)")
    common.add_argument("--trials", type=int, default=None, help="Monte Carlo trials (default from settings, 100000)")
    common.add_argument("--out", type=Path, default=None, help="Write output here instead of stdout")
    common.add_argument("--workers", type=int, default=None, help="Worker processes for trials (default 1)")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--instance", type=Path, help="Instance JSON file")
    source.add_argument("--gen", help="Generator spec, e.g. gnb:n=2,b=1,p=0.5")

    formatter = argparse.RawDescriptionHelpFormatter
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # Gen command
    gen_parser = subparsers.add_parser("gen", help="Generate an instance file")
    gen_sub = gen_parser.add_subparsers(dest="kind", help="Generators")
    gnb_parser = gen_sub.add_parser("gnb", help="Upper-triangular hard family", parents=[common])
    gnb_parser.add_argument("--n", type=int, required=True, help="Servers and rounds")
    gnb_parser.add_argument("--b", type=int, required=True, help="Capacity of every server")
    gnb_parser.add_argument("--p", type=float, required=True, help="Edge success probability")
    random_parser = gen_sub.add_parser("random", help="Seeded random instance", parents=[common])
    random_parser.add_argument("--servers", type=int, required=True, help="Number of servers")
    random_parser.add_argument("--requests", type=int, required=True, help="Number of requests")
    random_parser.add_argument("--density", type=float, default=0.5, help="Edge density (default 0.5)")
    random_parser.add_argument("--p-range", default="0.1,0.9", help="low,high edge probabilities")
    random_parser.add_argument("--cap-range", default="1,2", help="low,high capacities")
    random_parser.add_argument("--weight-range", default="1,1", help="low,high server weights")
    split_parser = gen_sub.add_parser("split", help="Split servers into unit-capacity copies", parents=[common])
    split_parser.add_argument("--instance", type=Path, required=True, help="Instance JSON file")
    gen_parser.set_defaults(func=gen_command)

    # Simulate command
    simulate_parser = subparsers.add_parser(
        "simulate",
        help="Monte Carlo simulation of online policies",
        parents=[common, source],
        formatter_class=formatter,
        epilog=_columns_help({
            "policy": "policy name",
            "instance": "generator label of the instance",
            "trials": "number of trials",
            "mean": "mean matched weight",
            "var": "sample variance of the matched weight",
            "ci95": "95% normal confidence half-width of the mean",
        }),
    )
    simulate_parser.add_argument("--policy", default="sbal", help=f"Comma-separated policies: {', '.join(POLICIES)}")
    simulate_parser.add_argument("--trace", type=Path, help="Write the trace of trial 0 to this file")
    simulate_parser.add_argument("--predrawn", action="store_true", help="Draw every edge outcome up front")
    simulate_parser.set_defaults(func=simulate_command)

    # Benchmark command
    benchmark_parser = subparsers.add_parser(
        "benchmark",
        help="Offline benchmarks: fractional Opt or stochastic SOpt",
        parents=[common, source],
        formatter_class=formatter,
        epilog=_columns_help({
            "benchmark": "opt or sopt",
            "instance": "generator label of the instance",
            "value": "benchmark value",
        }),
    )
    benchmark_parser.add_argument("which", choices=["opt", "sopt"], help="Benchmark to compute")
    benchmark_parser.add_argument("--sidecar", type=Path, help="Write the LP solution or the action table here")
    benchmark_parser.set_defaults(func=benchmark_command)

    # Formulas command
    formulas_parser = subparsers.add_parser(
        "formulas",
        help="Closed forms and bounds",
        parents=[common],
        formatter_class=formatter,
        epilog="\n".join(f"{name}: {', '.join(cols)}" for name, cols in FORMULA_COLUMNS.items()),
    )
    formulas_parser.add_argument("name", choices=list(FORMULA_COLUMNS), help="Formula to evaluate")
    formulas_parser.add_argument("--n-list", help="Comma-separated n values")
    formulas_parser.add_argument("--b-list", help="Comma-separated b values")
    formulas_parser.add_argument("--m", type=int, help="Remaining capacity m")
    formulas_parser.add_argument("--load", type=float, help="Expected load for chebyshev")
    formulas_parser.add_argument("--probs", default="", help="Comma-separated probabilities for poisson-tail")
    formulas_parser.set_defaults(func=formulas_command)

    # Dual audit command
    audit_parser = subparsers.add_parser(
        "dual-audit",
        help="Dual feasibility audit of StochasticBalance",
        parents=[common, source],
        formatter_class=formatter,
        epilog=_columns_help({
            "server_id": "server of the edge",
            "request_id": "request of the edge",
            "estimate": "mean of p*x(s) + y(r)",
            "ci95": "95% half-width of the estimate",
            "target": "p * w_s",
            "ratio": "estimate / target",
        }) + "\nfooter: min_ratio, c_effective = (1-1/e) * min_ratio\n\n" + _columns_help({
            "b": "sweep value (with --b-sweep)",
            "min_ratio": "minimum slack ratio over edges",
            "ci95": "95% half-width of that ratio",
            "floor": "analytic slack floor",
            "epsilon": "1 - min_ratio",
        }),
    )
    audit_parser.add_argument("--b-sweep", dest="b_list", help="Comma-separated b values for the epsilon curve")
    audit_parser.add_argument("--family", help="Family for --b-sweep: gnb:n=3,p=0.1 or hetero:n_servers=3,p=0.1,seed=0")
    audit_parser.set_defaults(func=dual_audit_command)

    # Convergence command
    convergence_parser = subparsers.add_parser(
        "convergence",
        help="SBal ratio on the hard family against 1-1/e",
        parents=[common],
        formatter_class=formatter,
        epilog=_columns_help({
            "n": "servers and rounds",
            "b": "server capacity",
            "p": "edge probability",
            "sbal_ratio": "simulated E[SBal] / (n b)",
            "sbal_ci95": "95% half-width of sbal_ratio",
            "bound_ratio": "analytic bound min(k, n) / n",
            "greedy_ratio": "Greedy lower bound on SOpt / (n b)",
            "ratio_upper": "sbal_ratio / greedy_ratio",
        }),
    )
    convergence_parser.add_argument("--n-list", required=True, help="Comma-separated n values")
    convergence_parser.add_argument("--b-list", default="1", help="Comma-separated b values (default 1)")
    convergence_parser.add_argument("--p-list", default="0.01", help="Comma-separated p values (default 0.01)")
    convergence_parser.set_defaults(func=convergence_command)

    # Compare command
    compare_parser = subparsers.add_parser(
        "compare",
        help="Policies against Opt and SOpt",
        parents=[common, source],
        formatter_class=formatter,
        epilog=_columns_help({
            "policy": "policy name",
            "mean": "mean matched weight",
            "ci95": "95% half-width of the mean",
            "opt": "fractional LP optimum (blank if too large)",
            "sopt": "stochastic optimum (blank if too large)",
            "ratio_opt": "mean / opt, 1 for 0/0",
            "ratio_sopt": "mean / sopt, 1 for 0/0",
            "zero_ratio": "1 when a ratio is the 0/0 convention",
        }),
    )
    compare_parser.add_argument("--policy", default="sbal,greedy", help="Comma-separated policies")
    compare_parser.set_defaults(func=compare_command)

    return parser


def main(argv: Optional[Sequence[str]] = None):
    """Main entry point for the workbench."""
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    if args.config_path:
        use_settings(SettingsStore(args.config_path).settings)
    setup_logging(args.log_level or get_settings().log_level, log_to_file=not args.no_log_file)

    # If no subcommand provided, show help
    if not hasattr(args, "func"):
        parser.print_help()
        return EXIT_USAGE
    if args.command == "gen" and not args.kind:
        print("Error: No generator provided (gnb, random or split)", file=sys.stderr)
        return EXIT_USAGE

    try:
        return args.func(args)
    except (UsageError, InvalidParameterError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except StochMatchError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
