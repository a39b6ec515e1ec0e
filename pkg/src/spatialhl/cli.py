"""Command-line front end.

Exit status: 0 success, 2 unreadable input, 3 numerical failure or
non-convergence, 4 usage error. Failures print a JSON object
``{"error": ..., "message": ...}`` on stderr.
"""
import argparse
import io
import sys
from dataclasses import dataclass, field

from . import dataio, highdim, inference
from .errors import InvalidInput, ParseError, SpatialError
from .location import EXACT_TRIPLES_MAX_N, SolverConfig, _parse_mode, hl_estimator, spatial_median
from .sim import parse_family
from .transret import TrChoice, equivariance_witness, tr_hl, tr_spatial_median

EXIT_OK, EXIT_PARSE, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 4

COMMANDS = ("estimate", "test", "ellipsoid", "simulate", "figure3", "demo-equivariance")
ESTIMATORS = ("spatial-median", "hl", "tr-spatial-median", "tr-hl", "mean")
TESTS = ("sign", "signed-rank", "hotelling")
SCATTERS = ("hr", "rank-hr")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input_path: str = None
    output_path: str = None
    method: str = None
    bhat: str = "auto"
    scatter: str = None
    level: float = 0.95
    seed: int = 0
    format: str = "json"
    n: list = field(default_factory=list)
    p: int = None
    gamma: list = field(default_factory=list)
    family: str = "normal"
    replications: int = highdim.DEFAULT_REPLICATIONS
    workers: int = None
    summary_path: str = None
    tol: float = SolverConfig.tol
    max_iter: int = SolverConfig.max_iter

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.command in ("estimate", "test", "ellipsoid") and not self.input_path:
            raise UsageError(f"{self.command} needs an input CSV")
        if self.command in ("estimate", "ellipsoid") and self.method not in ESTIMATORS:
            raise UsageError(f"--method must be one of {', '.join(ESTIMATORS)}")
        if self.command == "test" and self.method not in TESTS:
            raise UsageError(f"--method must be one of {', '.join(TESTS)}")
        if self.command == "ellipsoid" and not 0.0 < self.level < 1.0:
            raise UsageError(f"--level must be in (0, 1), got {self.level}")
        if self.command == "simulate":
            if len(self.n) != 1 or self.p is None:
                raise UsageError("simulate needs a single --n and --p")
            if self.p < 2:
                raise UsageError("--p must be >= 2")
        if self.command == "figure3" and (not self.n or not self.gamma):
            raise UsageError("figure3 needs --n and --gamma")
        if self.command in ("simulate", "figure3"):
            if self.replications < 1:
                raise UsageError("--replications must be >= 1")
            if self.format not in ("csv", "json"):
                raise UsageError("--format must be csv or json")
            try:
                parse_family(self.family)
            except InvalidInput as exc:
                raise UsageError(f"--family: {exc}") from None
        try:
            _parse_mode(self.bhat, EXACT_TRIPLES_MAX_N)
        except InvalidInput as exc:
            raise UsageError(f"--bhat: {exc}") from None
        if self.workers is not None and self.workers < 1:
            raise UsageError("--workers must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("--seed must fit in 64 bits")
        return self

    def solver(self):
        return SolverConfig(tol=self.tol, max_iter=self.max_iter)


def _choice(cfg):
    return None if cfg.scatter is None else TrChoice(cfg.scatter)


def fit_location(cfg, y):
    solver = cfg.solver()
    if cfg.method == "spatial-median":
        return spatial_median(y, solver)
    if cfg.method == "hl":
        return hl_estimator(y, solver, bhat_mode=cfg.bhat)
    if cfg.method == "tr-spatial-median":
        return tr_spatial_median(y, _choice(cfg), solver)
    if cfg.method == "tr-hl":
        return tr_hl(y, _choice(cfg), solver, bhat_mode=cfg.bhat)
    return inference.mean_fit(y)


def run_test(cfg, y):
    if cfg.method == "sign":
        return inference.sign_test(y)
    if cfg.method == "signed-rank":
        return inference.signed_rank_test(y, bhat_mode=cfg.bhat)
    return inference.hotelling_t2(y)


def _study(cfg):
    if cfg.command == "simulate":
        n = cfg.n[0]
        grid = [(n, cfg.p / n)]
    else:
        grid = [(n, g) for g in cfg.gamma for n in cfg.n]
    family, df = parse_family(cfg.family)
    return highdim.figure3_study(grid, family, cfg.seed, cfg.replications,
                                 cfg.workers, cfg.solver(), df=df)


def _study_text(cfg, reports):
    if cfg.format == "csv":
        buf = io.StringIO()
        highdim.write_study_csv(reports, buf)
        return buf.getvalue()
    return dataio.dumps(highdim.study_summary(reports))


def execute(cfg):
    """Run a validated config; returns ``(text, status)``."""
    if cfg.command in ("estimate", "test", "ellipsoid"):
        y = dataio.ingest_csv(cfg.input_path)
    if cfg.command == "estimate":
        fit = fit_location(cfg, y)
        return dataio.dumps(fit.to_dict()), EXIT_OK if fit.converged else EXIT_NUMERIC
    if cfg.command == "test":
        return dataio.dumps(run_test(cfg, y).to_dict()), EXIT_OK
    if cfg.command == "ellipsoid":
        fit = fit_location(cfg, y)
        ell = inference.confidence_ellipsoid(fit, cfg.level)
        return dataio.dumps(ell.to_dict()), EXIT_OK if fit.converged else EXIT_NUMERIC
    if cfg.command in ("simulate", "figure3"):
        reports = _study(cfg)
        if cfg.summary_path:
            with open(cfg.summary_path, "w", encoding="utf-8") as fh:
                fh.write(dataio.dumps(highdim.study_summary(reports)))
        return _study_text(cfg, reports), EXIT_OK
    w = equivariance_witness(cfg=cfg.solver())
    return dataio.format_csv_records(w.rows(), ("set", "index", "x1", "x2")), EXIT_OK


def build_parser():
    parser = _Parser(prog="spatialhl", description="Spatial sign and signed-rank location methods.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, output=True):
        if output:
            sp.add_argument("-o", "--output", dest="output_path", help="write here instead of stdout")
        sp.add_argument("--tol", type=float, default=SolverConfig.tol)
        sp.add_argument("--max-iter", type=int, default=SolverConfig.max_iter)

    for name, methods, default in (("estimate", ESTIMATORS, "hl"), ("ellipsoid", ESTIMATORS, "hl"),
                                   ("test", TESTS, "signed-rank")):
        sp = sub.add_parser(name)
        sp.add_argument("input_path", metavar="CSV")
        sp.add_argument("--method", choices=methods, default=default)
        sp.add_argument("--bhat", default="auto",
                        help="exact, rank, subsample or subsample=M (default: auto)")
        if name != "test":
            sp.add_argument("--scatter", choices=SCATTERS,
                            help="standardizing shape for the tr-* methods")
        if name == "ellipsoid":
            sp.add_argument("--level", type=float, default=0.95)
        common(sp)

    for name in ("simulate", "figure3"):
        sp = sub.add_parser(name)
        if name == "simulate":
            sp.add_argument("--n", type=int, required=True, action="append")
            sp.add_argument("--p", type=int, required=True)
        else:
            sp.add_argument("--n", type=int, nargs="+", default=[100, 200, 500])
            sp.add_argument("--gamma", type=float, nargs="+", default=[0.5, 1.0])
        sp.add_argument("--family", default="normal", help="normal, t or t<df> (default df 3)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--replications", type=int, default=highdim.DEFAULT_REPLICATIONS)
        sp.add_argument("--workers", type=int,
                        help=f"worker threads (default: ${highdim.THREADS_ENV} or 1)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--summary", dest="summary_path", help="also write the JSON summary here")
        common(sp)

    sp = sub.add_parser("demo-equivariance")
    common(sp)
    return parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def config_from_args(argv):
    ns = vars(build_parser().parse_args(argv))
    fields = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in ns.items() if k in fields and v is not None}).validate()


def _fail(exc, status):
    sys.stderr.write(dataio.dumps({"error": type(exc).__name__, "message": str(exc), "status": status}))
    return status


def _status_for(exc):
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, (UsageError, InvalidInput)):
        return EXIT_USAGE
    return EXIT_NUMERIC


def main(argv=None):
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        return _fail(exc, EXIT_USAGE)
    except SystemExit as exc:  # --help
        return exc.code or EXIT_OK
    try:
        text, status = execute(cfg)
    except OSError as exc:
        return _fail(exc, EXIT_USAGE if isinstance(exc, FileNotFoundError) else EXIT_PARSE)
    except (SpatialError, ArithmeticError) as exc:
        return _fail(exc, _status_for(exc))
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if status == EXIT_NUMERIC:
        sys.stderr.write(dataio.dumps({
            "error": "NotConverged", "status": status,
            "message": "solver stopped at the iteration limit; output written with converged=false",
        }))
    return status


if __name__ == "__main__":
    sys.exit(main())
