"""
sparsevi Command Line
=====================

Usage:
    sparsevi fit --model toenail --data toenail.csv --algorithm alg2 --estimator 2 --seed 1
    sparsevi gradcheck --model sv --data gbpusd.csv --points 20
    sparsevi varcompare --model toenail --data toenail.csv --result runs/.../fit_result.txt
    sparsevi bench --family ssm --sizes 500,1000,2000 --iters 200
    sparsevi replay --manifest runs/.../manifest.txt --out runs/replayed

Exit codes: 0 success (diverged fits included), 1 usage or validation error,
2 data error, 3 gradient check failure.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional, Sequence

from sparsevi import __version__
from sparsevi.cli import commands
from sparsevi.exceptions import SparseVIError, UsageError
from sparsevi.targets.gradcheck import DEFAULT_STEP, DEFAULT_THRESHOLD

logger = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    """Raise instead of exiting with argparse's status 2, which is reserved for data errors."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def configure_logging(verbose: bool = False) -> None:
    level = "DEBUG" if verbose else os.getenv("LOG_LEVEL", "INFO")
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def _add_model_flags(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--model", required=required, choices=commands.MODEL_CHOICES)
    parser.add_argument("--data", help="Dataset CSV (required for real-data models)")
    parser.add_argument("--size", type=int, default=50,
                        help="Subjects or time points for sim-* models (default: 50)")
    parser.add_argument("--dim", type=int, default=20,
                        help="Dimension of the gaussian-test target (default: 20)")
    parser.add_argument("--data-seed", type=int, default=0,
                        help="Seed for synthetic data and the gaussian-test target (default: 0)")
    parser.add_argument("--raw-covariates", action="store_true",
                        help="Epilepsy: use raw Base/Age instead of their logarithms")


def _add_out_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--out",
        help="Run directory (default: $SPARSEVI_OUTPUT_DIR/<run name>; "
        "SPARSEVI_OUTPUT_DIR defaults to 'runs')",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="sparsevi",
        description="Gaussian variational approximations with sparse precision Cholesky factors",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    sub = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)

    fit = sub.add_parser("fit", help="Fit a variational approximation")
    _add_model_flags(fit)
    fit.add_argument("--algorithm", choices=("alg1-mf", "alg1-full", "alg2"), default="alg2")
    fit.add_argument("--estimator", default="2", help="Gradient estimator family, 1 or 2 (default: 2)")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--max-iter", type=int, default=100_000)
    fit.add_argument("--window", type=int, default=2500, help="Iterations per L̄ window F")
    fit.add_argument("--patience", type=int, default=3, help="Sub-maximum windows M before stopping")
    fit.add_argument("--draws", type=int, default=1, help="Variates averaged per iteration")
    fit.add_argument("--lb-draws", type=int, default=0,
                     help="Draws for a post-hoc lower-bound estimate (0 to skip)")
    _add_out_flag(fit)
    fit.set_defaults(handler=commands.cmd_fit)

    grad = sub.add_parser("gradcheck", help="Check model gradients against finite differences")
    _add_model_flags(grad)
    grad.add_argument("--points", type=int, default=20)
    grad.add_argument("--step", type=float, default=DEFAULT_STEP)
    grad.add_argument("--scale", type=float, default=0.3, help="SD of the random check points")
    grad.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    grad.add_argument("--seed", type=int, default=0)
    _add_out_flag(grad)
    grad.set_defaults(handler=commands.cmd_gradcheck)

    var = sub.add_parser("varcompare", help="Compare estimator variances at a fitted state")
    _add_model_flags(var)
    var.add_argument("--result", required=True, help="fit_result.txt of a completed fit")
    var.add_argument("--draws", type=int, default=1000)
    var.add_argument("--components", help="1-based components of μ, comma separated")
    var.add_argument("--seed", type=int, default=0)
    _add_out_flag(var)
    var.set_defaults(handler=commands.cmd_varcompare)

    bench = sub.add_parser("bench", help="Per-iteration cost on synthetic data")
    bench.add_argument("--family", choices=("glmm", "ssm"), required=True)
    bench.add_argument("--sizes", default="500,1000,2000")
    bench.add_argument("--iters", type=int, default=200)
    bench.add_argument("--algorithms", default="alg1-mf,alg1-full,alg2")
    bench.add_argument("--seed", type=int, default=0)
    _add_out_flag(bench)
    bench.set_defaults(handler=commands.cmd_bench)

    replay = sub.add_parser("replay", help="Re-run a manifest and verify its checksums")
    replay.add_argument("--manifest", required=True)
    _add_out_flag(replay)
    replay.set_defaults(handler=None)

    return parser


def dispatch(argv: Sequence[str]) -> int:
    """Parse ``argv`` and run the subcommand; exceptions propagate."""
    argv = list(argv)
    args = build_parser().parse_args(argv)
    if not args.command:
        raise UsageError("No command given; use one of fit, gradcheck, varcompare, bench, replay")
    configure_logging(args.verbose)
    args.argv = argv
    if args.command == "replay":
        return commands.cmd_replay(args, dispatch)
    return args.handler(args)


def main(argv: Optional[List[str]] = None) -> int:
    """Console entry point."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return dispatch(argv)
    except SparseVIError as e:
        print(str(e), file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 130
