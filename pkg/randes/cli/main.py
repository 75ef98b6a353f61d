"""`randes` command line: simulate, select, verify and covariance.

Exit codes are 0 on success, 1 on usage or configuration errors and 2 when a verification suite fails.
"""
import argparse
import csv
import logging
import os
import sys
from pathlib import Path
from typing import NoReturn, Optional, Sequence

import numpy as np
from pydantic import TypeAdapter, ValidationError

from ..base.collection import (
    BaseCollection,
    CompleteCollection,
    OrderedCollection,
    load_explicit_collection,
    recommended_complete_dmax,
)
from ..base.exceptions import ConfigError, RandesError
from ..base.penalty import PenaltySpec, check_assumption
from ..base.selector import select
from ..base.types import DataSet, GroundTruth, Model
from ..simulation.design import (
    SeedSpec,
    build_sigma2,
    exp_circulant,
    generator_version,
    identity,
    poly_circulant,
    write_covariance_csv,
)
from ..simulation.experiment import run_experiment
from ..simulation.verify import (
    CONCENTRATION_KINDS,
    VerificationReport,
    verify_circulant_psd,
    verify_concentration,
    verify_concentration_grid,
    verify_fpe_trend,
    verify_minimal_penalty,
    verify_risk_identities,
)
from .config import bundled_config, load_config, split_str
from .report import format_audit, format_selection, format_verification, write_report

logger = logging.getLogger(__name__)

THREADS_ENV = "RANDES_THREADS"
SUITES = ("risk-identities", "concentration", "minimal-penalty", "fpe-trend", "circulant-psd")
# Alternate names accepted on the command line.
SUITE_ALIASES = {"lemma21": "risk-identities"}
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with 1, not argparse's 2, which is reserved for failed verifications."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logs")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="randes", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    simulate = commands.add_parser("simulate", help="run a Monte-Carlo experiment from a configuration file")
    simulate.add_argument("config", help="configuration file, or the name of a bundled one such as experiment1_n30")
    simulate.add_argument("--out", type=Path, help="report file; stdout when omitted")
    simulate.add_argument("--format", choices=("csv", "json"))
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--threads", type=int)
    _common(simulate)

    select_ = commands.add_parser("select", help="penalized model selection on a data file")
    select_.add_argument("data", type=Path, help="CSV with header y,x1,...,xp")
    select_.add_argument("--collection", choices=("ordered", "complete", "explicit"), default="complete")
    select_.add_argument("--dmax", type=int)
    select_.add_argument("--models", type=Path, help="model list for --collection explicit")
    select_.add_argument(
        "--penalty", choices=("minimal", "heuristic", "complexity", "complete", "prior"), default="complete"
    )
    select_.add_argument("--K", type=float, default=2.0)
    select_.add_argument("--eta", type=float, help="check the penalty assumption with this eta before selecting")
    select_.add_argument("--audit", type=Path, help="write every model with its criterion value to this CSV")
    _common(select_)

    verify = commands.add_parser("verify", help="run a Monte-Carlo verification suite")
    verify.add_argument("suite", choices=SUITES + tuple(SUITE_ALIASES))
    verify.add_argument("--reps", type=int)
    verify.add_argument("--seed", type=int)
    verify.add_argument("--kind", choices=CONCENTRATION_KINDS)
    verify.add_argument("--d", type=int)
    verify.add_argument("--x", type=float)
    verify.add_argument("--n", type=int)
    verify.add_argument("--p", type=int)
    verify.add_argument("--nu", type=float, default=0.5)
    verify.add_argument("--control", action="store_true", help="minimal-penalty control run with K=2")
    verify.add_argument("--theta", default="2,1,0.5")
    verify.add_argument("--covariance", choices=("identity", "sigma2"), default="identity")
    verify.add_argument("--model", default="1,2")
    verify.add_argument("--n-grid", default="50,100,200,400")
    verify.add_argument("--s", type=float, default=1.0)
    _common(verify)

    covariance = commands.add_parser("covariance", help="write a covariance matrix as CSV")
    covariance.add_argument("kind", choices=("identity", "sigma2", "exp_circulant", "poly_circulant"))
    covariance.add_argument("--p", type=int, required=True)
    covariance.add_argument("--omega", type=float)
    covariance.add_argument("--t", type=float)
    covariance.add_argument("--out", type=Path)
    _common(covariance)
    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def resolve_threads(flag: Optional[int], configured: Optional[int] = None) -> int:
    """Worker count: the flag, then RANDES_THREADS, then the configuration file, then 1."""
    if flag is not None:
        value = flag
    elif os.environ.get(THREADS_ENV):
        try:
            value = int(os.environ[THREADS_ENV])
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {os.environ[THREADS_ENV]!r}.") from e
    elif configured is not None:
        value = configured
    else:
        value = 1
    if value < 1:
        raise ConfigError(f"Thread count must be positive, got {value}.")
    return value


def resolve_seed(seed: Optional[int]) -> SeedSpec:
    """The given seed, or one drawn from entropy and announced on stderr so the run can be repeated."""
    if seed is not None:
        return SeedSpec(master_seed=seed)
    spec = SeedSpec.from_entropy()
    print(f"seed: {spec.master_seed}", file=sys.stderr)
    return spec


def _config_path(name: str) -> Path:
    path = Path(name)
    if path.is_file() or path.suffix:
        return path
    return bundled_config(name)


def cmd_simulate(args: argparse.Namespace) -> int:
    loaded = load_config(_config_path(args.config))
    seed = resolve_seed(args.seed if args.seed is not None else loaded.run.seed)
    cfg = loaded.experiment(seed=seed.master_seed)
    n_jobs = resolve_threads(args.threads, loaded.run.threads)
    report = run_experiment(cfg, n_jobs=n_jobs)
    out = args.out if args.out is not None else loaded.run.output
    write_report(report, out, args.format or loaded.run.format, stream=sys.stdout)
    if out is not None:
        logger.info("Report written to %s", out)
    return EXIT_OK


def read_data_csv(path: Path) -> DataSet:
    """Observations from a CSV whose header is y,x1,...,xp."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = [row for row in csv.reader(f) if row]
    if not rows:
        raise ConfigError(f"{path}: empty data file.")
    header = [name.strip() for name in rows[0]]
    expected = ["y"] + [f"x{j}" for j in range(1, len(header))]
    if len(header) < 2 or header != expected:
        raise ConfigError(f"{path}: header must be y,x1,...,xp, got {','.join(header)}.")
    if len(rows) < 2:
        raise ConfigError(f"{path}: no observations.")
    try:
        values = np.array([[float(value) for value in row] for row in rows[1:]])
    except ValueError as e:
        raise ConfigError(f"{path}: {e}.") from e
    if values.ndim != 2 or values.shape[1] != len(header):
        raise ConfigError(f"{path}: every row needs {len(header)} values.")
    return DataSet(x=values[:, 1:], y=values[:, 0])


def _selection_collection(args: argparse.Namespace, data: DataSet) -> BaseCollection:
    if args.collection == "explicit":
        if args.models is None:
            raise ConfigError("--collection explicit needs --models.")
        return load_explicit_collection(args.models, data.p)
    if args.collection == "ordered":
        dmax = args.dmax if args.dmax is not None else min(data.p, data.n - 2)
        return OrderedCollection(p=data.p, dmax=dmax)

    cap = recommended_complete_dmax(data.n, data.p)
    if args.dmax is None:
        return CompleteCollection(p=data.p, dmax=cap)
    if args.dmax > cap:
        logger.warning("dmax=%d exceeds the recommended cap %d for n=%d, p=%d", args.dmax, cap, data.n, data.p)
    return CompleteCollection(p=data.p, dmax=args.dmax)


def cmd_select(args: argparse.Namespace) -> int:
    data = read_data_csv(args.data)
    c = _selection_collection(args, data)
    payload = {"kind": args.penalty} if args.penalty == "heuristic" else {"kind": args.penalty, "K": args.K}
    spec = TypeAdapter(PenaltySpec).validate_python(payload)
    if args.eta is not None:
        check = check_assumption(c, args.K, data.n, args.eta)
        if not check:
            raise ConfigError(f"assumption check failed: {check.diagnostic}")

    result = select(data, c, spec)
    sys.stdout.write(format_selection(result))
    if args.audit is not None:
        args.audit.write_text(format_audit(result), encoding="utf-8")
    return EXIT_OK


def _truth(args: argparse.Namespace) -> GroundTruth:
    theta_values = [float(value) for value in split_str(args.theta)]
    p = args.p if args.p is not None else max(len(theta_values), 10)
    if len(theta_values) > p:
        raise ConfigError(f"--theta has {len(theta_values)} entries but p={p}.")
    theta = np.zeros(p)
    theta[: len(theta_values)] = theta_values
    sigma = build_sigma2(p) if args.covariance == "sigma2" else identity(p)
    return GroundTruth(theta=theta, sigma=sigma, noise_var=1.0)


def run_suite(args: argparse.Namespace) -> VerificationReport:
    suite = SUITE_ALIASES.get(args.suite, args.suite)
    if suite == "circulant-psd":
        return verify_circulant_psd()

    if suite == "risk-identities":
        seed = resolve_seed(args.seed)
        return verify_risk_identities(
            _truth(args), Model(indices=args.model), args.n or 30, args.reps or 100_000, seed
        )
    if suite == "concentration":
        seed = resolve_seed(args.seed)
        reps = args.reps or 100_000
        if args.kind is None:
            return verify_concentration_grid(reps, seed)
        if args.d is None or args.x is None:
            raise ConfigError("--kind needs --d and --x.")
        return verify_concentration(args.kind, args.d, args.x, reps, seed, n=args.n)
    if suite == "minimal-penalty":
        seed = resolve_seed(args.seed)
        n = args.n or 60
        p = args.p or 40
        return verify_minimal_penalty(n, p, args.nu, args.reps or 500, seed, control=args.control)

    seed = resolve_seed(args.seed)
    n_grid = [int(value) for value in split_str(args.n_grid)]
    return verify_fpe_trend(n_grid, args.reps or 200, seed, s=args.s)


def cmd_verify(args: argparse.Namespace) -> int:
    report = run_suite(args)
    sys.stdout.write(format_verification(report))
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_covariance(args: argparse.Namespace) -> int:
    if args.kind == "identity":
        sigma = identity(args.p)
    elif args.kind == "sigma2":
        sigma = build_sigma2(args.p)
    elif args.kind == "exp_circulant":
        if args.omega is None:
            raise ConfigError("exp_circulant needs --omega.")
        sigma = exp_circulant(args.p, args.omega).matrix
    else:
        if args.t is None:
            raise ConfigError("poly_circulant needs --t.")
        sigma = poly_circulant(args.p, args.t).matrix

    if args.out is None:
        for row in sigma:
            print(",".join(repr(float(value)) for value in row))
    else:
        write_covariance_csv(args.out, sigma)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "select": cmd_select,
    "verify": cmd_verify,
    "covariance": cmd_covariance,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    logger.debug("randes %s with %s", args.command, generator_version())
    try:
        return COMMANDS[args.command](args)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        print(f"error: {location + ': ' if location else ''}{first['msg']}", file=sys.stderr)
    except (RandesError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_USAGE

