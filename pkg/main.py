#!/usr/bin/env python3
"""
Command-line driver for Sparse Forge.
Builds Cantor systems, measures their sparsity, runs the verification audits and the encoding demos.
"""
import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence, Tuple

from cantor.system import CantorSystem, GapRule
from config import RunConfig, apply_run_config, config, load_run_config, parse_fraction
from corners.audits import containment_audit, default_delta, scale_lemma_check
from corners.cells import CornerSpec
from corners.symmetries import corner_symmetries, covering_check, default_directions
from encoding.boundaries import BoundaryKind, GapDescriptor, boundary_extract, gap_descriptors, reconstruct_from_gaps
from encoding.codec import x_tuple
from encoding.factorial import factorial_demo
from encoding.packing import pack_demo
from errors import ConfigError, SerializationError, SparseForgeError
from exact_sets.intervals import Interval, IntervalSet
from exact_sets.scalars import Scalar
from exact_sets.serialization import interval_set_from_json, scalar_from_json, scalar_to_json
from magnitudes.sequences import fastness_check
from monitoring.metrics import MetricsCollector
from reports.writers import (
    read_interval_set, read_json, summarize_reports, write_interval_set, write_plot_csv, write_profile_csv,
    write_report
)
from sparsity.diagnostics import null_diagnostic
from sparsity.dimension import box_dim_estimate, plot_points
from sparsity.modulus import modulus_pushforward, parse_modulus
from sparsity.profiles import closed_form_for, covering_profile, regime_radii
from utils.logging_config import get_logger, setup_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_COUNTEREXAMPLE = 2
EXIT_USAGE = 64
EXIT_INTERRUPTED = 130

Outcome = Tuple[int, Dict[str, Any]]


class UsageError(Exception):
    """Raised by the parser in place of its own exit."""


class CLIParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 64.

    Abbreviated long options are off: a subcommand flag such as --m would
    otherwise be read as a prefix of the global --max-pairs or --metrics.
    """

    def __init__(self, *args: Any, **kwargs: Any) -> None:
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _window(text: str) -> Tuple[int, int]:
    lo, sep, hi = text.partition(":")
    try:
        window = (int(lo), int(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like 4:12, got {text!r}") from None
    if not sep or window[0] > window[1] or window[0] < 0:
        raise argparse.ArgumentTypeError(f"window must look like 4:12 with 0 <= lo <= hi, got {text!r}")
    return window


def _fraction(text: str) -> Fraction:
    try:
        return parse_fraction(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(e.message) from None


def _fraction_list(text: str) -> List[Fraction]:
    return [_fraction(part) for part in text.split(",") if part.strip()]


def _add_system_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rule", default=GapRule.THEOREM_B.value, choices=[r.value for r in GapRule])
    parser.add_argument("--regime", default=argparse.SUPPRESS, help="rational or tower")
    parser.add_argument("--depth", type=int, help="level K (default: kmax)")
    parser.add_argument("--lengths", type=_fraction_list, help="gap lengths for gap-encoded sets, e.g. 1/2,1/6")
    parser.add_argument("--block-depth", type=int, default=3, help="separator depth for gap-encoded sets")


def build_parser() -> CLIParser:
    parser = CLIParser(prog="sparse-forge", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--regime", help="rational or tower")
    parser.add_argument("--precision", help="precision ceiling, e.g. 2^-256")
    parser.add_argument("--kmax", type=int)
    parser.add_argument("--exp-ceiling", type=int)
    parser.add_argument("--max-pairs", type=int)
    parser.add_argument("--max-refine", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--output-dir")
    parser.add_argument("--log-level", default=config.LOG_LEVEL)
    parser.add_argument("--log-format", choices=("text", "json"), default=config.LOG_FORMAT)
    parser.add_argument("--log-file", default=config.LOG_FILE)
    parser.add_argument("--metrics", action="store_true", help="append run metrics under METRICS_DIR")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=CLIParser)

    build = commands.add_parser("build", help="build a level set and write its set document")
    _add_system_arguments(build)
    build.add_argument("--out", help="output path (default: <output-dir>/sets/e<K>.json)")

    dims = commands.add_parser("dims", help="covering profile and box-counting slope")
    _add_system_arguments(dims)
    dims.add_argument("--in", dest="input", help="set document (default: build from --rule/--depth)")
    dims.add_argument("--window", type=_window, help="scale indices lo:hi")
    dims.add_argument("--radii-from-regime", action="store_true", help="use r_lo .. r_hi of the rule as radii")
    dims.add_argument("--radii", type=_fraction_list, help="explicit radii, e.g. 1/3,1/9,1/27")
    dims.add_argument("--modulus", help="push the profile through identity, power:<e>, scaled:<c> or psi:<l>")
    dims.add_argument("--strict", action="store_true", help="fail on constant covering counts")
    dims.add_argument("--no-verify", action="store_true", help="skip greedy checks of closed-form counts")
    dims.add_argument("--csv", help="profile CSV path")
    dims.add_argument("--plot", help="plot-data CSV path")
    dims.add_argument("--out", help="report path")

    verify = commands.add_parser("verify", help="run a verification audit")
    checks = verify.add_subparsers(dest="check", required=True, parser_class=CLIParser)

    scale = checks.add_parser("scale-lemma")
    _add_system_arguments(scale)
    scale.add_argument("--k", type=int, help="scale index (default: every k < K)")
    scale.add_argument("--reading", choices=("differences", "points"), default="differences")
    scale.add_argument("--out")

    contain = checks.add_parser("containment")
    _add_system_arguments(contain)
    contain.add_argument("--n", type=int, default=2)
    contain.add_argument("--corner", default="poly:2", help="poly:<l> or psi:<l>")
    contain.add_argument("--delta", default="auto", help="auto, r:<index> or a rational")
    mode = contain.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", dest="mode", action="store_const", const="exhaustive")
    mode.add_argument("--sampling", dest="mode", action="store_const", const="sampling")
    contain.add_argument("--samples", type=int, default=2000)
    contain.add_argument("--refine", type=int, help="extra levels for undecided boxes (default: max-refine)")
    contain.add_argument("--out")

    fast = checks.add_parser("fastness")
    fast.add_argument("--regime", default=argparse.SUPPRESS, help="rational or tower")
    fast.add_argument("--j", type=int, default=1, help="ψ iterate index")
    fast.add_argument("--k-max", type=int, default=8)
    fast.add_argument("--out")

    null = checks.add_parser("null")
    _add_system_arguments(null)
    null.add_argument("--m", type=int, default=1, help="exponential height")
    null.add_argument("--k-range", type=_window, help="indices lo:hi (default: 1 .. K-1)")
    null.add_argument("--out")

    sym = checks.add_parser("symmetries")
    sym.add_argument("--n", type=int, default=2)
    sym.add_argument("--reading", choices=("octagon", "cube"))
    sym.add_argument("--radius", type=int, default=2, help="integer direction box for the covering check")
    sym.add_argument("--out")

    encode = commands.add_parser("encode", help="encoding demos")
    demos = encode.add_subparsers(dest="demo", required=True, parser_class=CLIParser)
    xt = demos.add_parser("x-tuple")
    xt.add_argument("--x", type=_fraction, required=True)
    xt.add_argument("--y", type=_fraction, required=True)
    xt.add_argument("--depth", type=int, default=20)
    xt.add_argument("--out")
    fd = demos.add_parser("factorial-demo")
    fd.add_argument("--n-max", type=int, default=5)
    fd.add_argument("--block-depth", type=int, default=3)
    fd.add_argument("--out")
    pd = demos.add_parser("pack-demo")
    _add_system_arguments(pd)
    pd.add_argument("--samples", type=int, default=1000)
    pd.add_argument("--out")

    transform = commands.add_parser("transform", help="gap transforms of a set document")
    transform.add_argument("kind", choices=[k.value for k in BoundaryKind] + ["reconstruct"])
    transform.add_argument("--in", dest="input", required=True)
    transform.add_argument("--out")

    report = commands.add_parser("report", help="summarize report files")
    report.add_argument("paths", nargs="*", help="report files (default: <output-dir>/reports/*.json)")
    report.add_argument("--metrics-hours", type=int, help="also summarize run metrics of the last N hours")
    report.add_argument("--out")
    return parser


def resolve_run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {
        "regime": args.regime,
        "precision_ceiling": args.precision,
        "kmax": args.kmax,
        "exp_ceiling": args.exp_ceiling,
        "max_pairs": args.max_pairs,
        "max_refine": args.max_refine,
        "seed": args.seed,
        "workers": args.workers,
        "output_dir": args.output_dir,
    }
    return load_run_config(args.config, overrides)


def _system(args: argparse.Namespace, run_config: RunConfig) -> CantorSystem:
    lengths = args.lengths
    if args.rule == GapRule.GAP_ENCODED.value and not lengths:
        raise ConfigError("gap-encoded sets need --lengths")
    depth = run_config.kmax if args.depth is None else args.depth
    if args.rule == GapRule.GAP_ENCODED.value:
        return CantorSystem(args.rule, depth=args.block_depth, lengths=lengths)
    return CantorSystem(args.rule, run_config.regime, depth=depth, lengths=lengths)


def _level(args: argparse.Namespace, system: CantorSystem) -> int:
    return system.depth if args.depth is None or system.rule is GapRule.GAP_ENCODED else args.depth


def _path(args: argparse.Namespace, run_config: RunConfig, default: str) -> Path:
    return Path(args.out) if getattr(args, "out", None) else Path(run_config.output_dir) / default


def _finish(path: Path, payload: Dict[str, Any], run_config: RunConfig, status: int) -> Outcome:
    write_report(path, payload, run_config)
    print(json.dumps({"report": str(path), "exit": status}, sort_keys=True))
    return status, payload


def cmd_build(args: argparse.Namespace, run_config: RunConfig) -> Outcome:
    system = _system(args, run_config)
    level = _level(args, system)
    level_set = system.level_set(level)
    path = _path(args, run_config, f"sets/e{level}.json")
    extra = system.to_dict()
    extra["depth"] = level
    write_interval_set(path, level_set, run_config, **extra)
    logger.info(f"{system.rule.value}: level {level} has {len(level_set)} components")
    print(json.dumps({"set": str(path), "components": len(level_set)}, sort_keys=True))
    return EXIT_OK, {"components": len(level_set)}


def _system_from_document(document: Dict[str, Any], run_config: RunConfig) -> Optional[CantorSystem]:
    if "rule" not in document:
        return None
    lengths = [Fraction(x) for x in document.get("lengths", [])]
    return CantorSystem(document["rule"], document.get("regime", run_config.regime),
                        depth=int(document["depth"]), lengths=lengths or None)


def cmd_dims(args: argparse.Namespace, run_config: RunConfig) -> Outcome:
    if args.input:
        document = read_json(args.input)
        level_set = interval_set_from_json(document)
        system = _system_from_document(document, run_config) if isinstance(document, dict) else None
        level = system.depth if system is not None else None
    else:
        system = _system(args, run_config)
        level = _level(args, system)
        level_set = system.level_set(level)

    radii: List[Scalar]
    if args.radii_from_regime:
        if system is None or args.window is None:
            raise ConfigError("--radii-from-regime needs --window and a set built from a rule")
        if system.rule is GapRule.GAP_ENCODED:
            raise ConfigError("gap-encoded sets have no scale sequence; pass --radii")
        radii = regime_radii(system, args.window)
    elif args.radii:
        radii = list(args.radii)
    else:
        raise ConfigError("dims needs --radii-from-regime with --window, or --radii")

    closed_form = closed_form_for(system, level) if system is not None and level is not None else None
    profile = covering_profile(level_set, radii, closed_form, verify=not args.no_verify, workers=run_config.workers)
    if args.modulus:
        profile = modulus_pushforward(profile, parse_modulus(args.modulus))
    payload: Dict[str, Any] = {"check": "dims", "profile": profile.to_dict()}
    if len(profile) >= 3:
        payload["dimension"] = box_dim_estimate(profile, strict=args.strict).to_dict()
    elif args.strict:
        raise ConfigError(f"box dimension needs at least 3 radii, got {len(profile)}")
    if args.csv:
        write_profile_csv(args.csv, profile)
    if args.plot:
        write_plot_csv(args.plot, plot_points(profile))
    return _finish(_path(args, run_config, "reports/dims.json"), payload, run_config, EXIT_OK)


def _delta(text: str, system: CantorSystem, spec: CornerSpec, level: int) -> Tuple[Scalar, Dict[str, Any]]:
    token = text.strip().lower()
    if token == "auto":
        choice = default_delta(system, spec, level)
        return choice.delta, choice.to_dict()
    if token.startswith("r:"):
        index = int(token[2:])
        return system.scale(index), {"delta": scalar_to_json(system.scale(index)), "index": index, "source": "flag"}
    value = parse_fraction(text)
    return value, {"delta": scalar_to_json(value), "source": "flag"}


def cmd_verify(args: argparse.Namespace, run_config: RunConfig) -> Outcome:
    path = _path(args, run_config, f"reports/{args.check}.json")

    if args.check == "scale-lemma":
        system = _system(args, run_config)
        level = _level(args, system)
        ks = [args.k] if args.k is not None else list(range(level))
        reports = [scale_lemma_check(system, level, k, args.reading).to_dict() for k in ks]
        passed = all(r["passed"] for r in reports)
        payload = {"check": "scale-lemma", "passed": passed, "results": reports}
        return _finish(path, payload, run_config, EXIT_OK if passed else EXIT_COUNTEREXAMPLE)

    if args.check == "containment":
        system = _system(args, run_config)
        level = _level(args, system)
        spec = CornerSpec.parse(args.corner, args.n)
        delta, delta_info = _delta(args.delta, system, spec, level)
        report = containment_audit(
            system, level, args.n, spec, delta, mode=args.mode, samples=args.samples,
            seed=run_config.seed, max_pairs=run_config.max_pairs,
            refine=run_config.max_refine if args.refine is None else args.refine,
            precision=run_config.precision_ceiling,
        )
        payload = {"check": "containment", **report.to_dict(), "delta_choice": delta_info}
        return _finish(path, payload, run_config, EXIT_OK if report.passed else EXIT_COUNTEREXAMPLE)

    if args.check == "fastness":
        report = fastness_check(run_config.regime, args.j, args.k_max)
        failed = any(entry["verdict"] == "fail" for entry in report.trace)
        payload = {"check": "fastness", **report.to_dict(), "passed": not failed}
        return _finish(path, payload, run_config, EXIT_COUNTEREXAMPLE if failed else EXIT_OK)

    if args.check == "null":
        system = _system(args, run_config)
        k_range = range(args.k_range[0], args.k_range[1] + 1) if args.k_range else None
        report = null_diagnostic(system, args.m, k_range, run_config.precision_ceiling)
        failed = any(entry["verdict"] == "fail" for entry in report.trace)
        payload = {"check": "null", **report.to_dict(), "passed": not failed}
        return _finish(path, payload, run_config, EXIT_COUNTEREXAMPLE if failed else EXIT_OK)

    group = corner_symmetries(args.n, args.reading)
    coverage = covering_check(group, default_directions(args.n, args.radius))
    payload = {"check": "symmetries", "group": group.to_dict(), "covering": coverage.to_dict(),
               "passed": coverage.passed}
    return _finish(path, payload, run_config, EXIT_OK if coverage.passed else EXIT_COUNTEREXAMPLE)


def cmd_encode(args: argparse.Namespace, run_config: RunConfig) -> Outcome:
    path = _path(args, run_config, f"reports/{args.demo}.json")
    if args.demo == "x-tuple":
        payload = {"check": "x-tuple", **x_tuple(args.x, args.y, args.depth).to_dict()}
    elif args.demo == "factorial-demo":
        payload = {"check": "factorial-demo", **factorial_demo(args.n_max, args.block_depth)}
    else:
        system = _system(args, run_config)
        payload = {"check": "pack-demo", **pack_demo(system, _level(args, system), args.samples, run_config.seed).to_dict()}
    return _finish(path, payload, run_config, EXIT_OK)


def _read_gaps(document: Any) -> Tuple[Interval, List[GapDescriptor]]:
    try:
        lo, hi = (scalar_from_json(x) for x in document["hull"])
        gaps = [GapDescriptor(scalar_from_json(left), scalar_from_json(right)) for left, right in document["gaps"]]
    except (KeyError, TypeError, ValueError) as e:
        raise SerializationError("reconstruct needs a document with 'hull' and 'gaps'") from e
    return Interval(lo, hi), gaps


def cmd_transform(args: argparse.Namespace, run_config: RunConfig) -> Outcome:
    path = _path(args, run_config, f"sets/{Path(args.input).stem}-{args.kind}.json")
    if args.kind == "reconstruct":
        hull, gaps = _read_gaps(read_json(args.input))
        rebuilt = reconstruct_from_gaps(hull, gaps)
        write_interval_set(path, rebuilt, run_config)
        print(json.dumps({"set": str(path), "components": len(rebuilt)}, sort_keys=True))
        return EXIT_OK, {"components": len(rebuilt)}

    level_set: IntervalSet = read_interval_set(args.input)
    kind = BoundaryKind(args.kind)
    hull = level_set.hull()
    payload = {
        "check": f"transform:{kind.value}",
        "kind": kind.value,
        "values": [scalar_to_json(v) for v in boundary_extract(level_set, kind)],
        "hull": [scalar_to_json(hull.lo), scalar_to_json(hull.hi)],
        "gaps": [[scalar_to_json(g.left), scalar_to_json(g.right)] for g in gap_descriptors(level_set)],
    }
    return _finish(path, payload, run_config, EXIT_OK)


def cmd_report(args: argparse.Namespace, run_config: RunConfig) -> Outcome:
    paths = args.paths or sorted(str(p) for p in (Path(run_config.output_dir) / "reports").glob("*.json"))
    summary = summarize_reports(paths)
    if args.metrics_hours:
        summary["metrics"] = MetricsCollector().generate_run_report(args.metrics_hours)
    path = _path(args, run_config, "summary.json")
    return _finish(path, summary, run_config, EXIT_OK if summary["passed"] else EXIT_COUNTEREXAMPLE)


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], Outcome]] = {
    "build": cmd_build,
    "dims": cmd_dims,
    "verify": cmd_verify,
    "encode": cmd_encode,
    "transform": cmd_transform,
    "report": cmd_report,
}


def _command_name(args: argparse.Namespace) -> str:
    sub = getattr(args, "check", None) or getattr(args, "demo", None) or getattr(args, "kind", None)
    return f"{args.command} {sub}" if sub else args.command


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit status.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        0 on pass, 2 when a verification finds a counterexample, 1 on
        error, 64 on usage errors
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE

    setup_logging(log_level=args.log_level, log_file=args.log_file, use_json=args.log_format == "json")
    command = _command_name(args)
    try:
        run_config = resolve_run_config(args)
        apply_run_config(run_config)
        if not args.metrics:
            status, _ = COMMANDS[args.command](args, run_config)
        else:
            with MetricsCollector().track_run(command) as run:
                status, payload = COMMANDS[args.command](args, run_config)
                run.exit_code = status
                run.counters = {k: v for k, v in payload.items() if isinstance(v, int) and not isinstance(v, bool)}
    except SparseForgeError as e:
        logger.error(f"{e.code}: {e.message}")
        return EXIT_ERROR
    except ValueError as e:
        logger.error(f"INVALID_ARGUMENT: {e}")
        return EXIT_ERROR
    logger.info(f"{command} finished with exit code {status}")
    return status


def main() -> NoReturn:
    try:
        sys.exit(run_command())
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        sys.exit(EXIT_INTERRUPTED)
    except Exception as e:
        logger.error(f"Failed with critical error: {e}")
        sys.exit(EXIT_ERROR)


if __name__ == "__main__":
    main()
