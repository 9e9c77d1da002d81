"""
Subcommand implementations. Each takes the parsed arguments and returns the
process exit code; failures raise :class:`~sparsevi.exceptions.SparseVIError`
subclasses, which the entry point maps to exit codes.
"""

import argparse
import logging
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from sparsevi.cli import artifacts
from sparsevi.data import (
    EPILEPSY_SCHEMA,
    POLYPHARMACY_SCHEMA,
    TOENAIL_SCHEMA,
    build_epilepsy_model,
    build_polypharmacy_model,
    build_sv_model,
    build_toenail_model,
    load_csv,
    load_rates,
    mean_corrected_returns,
    simulate_glmm,
    simulate_sv,
)
from sparsevi.engine import (
    VariationalFitter,
    VariationalState,
    draw_standard_normal,
    estimate_gradients,
    estimate_lower_bound,
    make_rng,
    run_fit,
)
from sparsevi.exceptions import (
    DataError,
    DimensionMismatchError,
    GradientCheckError,
    ReplayError,
    UsageError,
)
from sparsevi.linalg.pattern import SparsityPattern
from sparsevi.models import Algorithm, Estimator, FitConfig, FitResult, GlmmFamily, RunManifest
from sparsevi.targets import (
    GlmmTarget,
    SvTarget,
    TargetModel,
    check_gradient,
    random_target,
)
from sparsevi.utils import parse_int_list, write_csv

logger = logging.getLogger(__name__)

DATASET_MODELS = ("epilepsy1", "epilepsy2", "toenail", "polypharmacy", "sv")
SYNTHETIC_MODELS = ("gaussian-test", "sim-logit", "sim-poisson", "sim-sv")
MODEL_CHOICES = DATASET_MODELS + SYNTHETIC_MODELS

# timing columns differ between otherwise identical runs
VOLATILE_ARTIFACTS = ("bench_timing.csv",)


# ============================================================================
# Model construction
# ============================================================================

def load_model(
    name: str,
    data: Optional[str] = None,
    size: int = 50,
    data_seed: int = 0,
    dim: int = 20,
    raw_covariates: bool = False,
) -> TargetModel:
    """Build the target named on the command line."""
    if name in DATASET_MODELS and not data:
        raise UsageError(f"--data is required for model '{name}'")

    if name in ("epilepsy1", "epilepsy2"):
        table = load_csv(data, EPILEPSY_SCHEMA)
        return GlmmTarget(build_epilepsy_model(table, name[-1], log_covariates=not raw_covariates))
    if name == "toenail":
        return GlmmTarget(build_toenail_model(load_csv(data, TOENAIL_SCHEMA)))
    if name == "polypharmacy":
        return GlmmTarget(build_polypharmacy_model(load_csv(data, POLYPHARMACY_SCHEMA)))
    if name == "sv":
        return SvTarget(build_sv_model(mean_corrected_returns(load_rates(data))))
    if name == "gaussian-test":
        if dim < 5:
            raise UsageError(f"--dim must be at least 5 for gaussian-test, got {dim}")
        return random_target(SparsityPattern.ssm(dim - 3, 1, 3), seed=data_seed)
    if name == "sim-logit":
        return GlmmTarget(simulate_glmm(size, family=GlmmFamily.BERNOULLI_LOGIT, seed=data_seed))
    if name == "sim-poisson":
        return GlmmTarget(simulate_glmm(size, family=GlmmFamily.POISSON_LOG, seed=data_seed))
    if name == "sim-sv":
        return SvTarget(build_sv_model(simulate_sv(size, seed=data_seed)))
    raise UsageError(f"Unknown model '{name}'; choose from {', '.join(MODEL_CHOICES)}")


def _model_from_args(args: argparse.Namespace) -> TargetModel:
    return load_model(
        args.model,
        data=args.data,
        size=args.size,
        data_seed=args.data_seed,
        dim=args.dim,
        raw_covariates=args.raw_covariates,
    )


def _state_from_result(result: FitResult) -> VariationalState:
    return VariationalState(
        result.mu, result.factor.copy(), precision=result.algorithm.is_precision
    )


# ============================================================================
# fit
# ============================================================================

def cmd_fit(args: argparse.Namespace) -> int:
    """Run one fit and write the result, summary, trace and (for SV) the volatility band."""
    model = _model_from_args(args)
    config = FitConfig(
        algorithm=args.algorithm,
        estimator=args.estimator,
        max_iterations=args.max_iter,
        window=args.window,
        patience=args.patience,
        rng_seed=args.seed,
        draws=args.draws,
    )
    run_name = (
        f"fit-{args.model}-{config.algorithm.short_name}-"
        f"{config.estimator.value}-seed{config.rng_seed}"
    )
    run_dir = artifacts.resolve_run_dir(args.out, run_name)

    result = run_fit(model, config)
    sd = result.marginal_sd()
    written = [
        artifacts.write_fit_result(run_dir, result),
        artifacts.write_summary(run_dir, model.parameter_names(), result.mu, sd),
        artifacts.write_lbar_trace(run_dir, result.lbar_trace, config.window),
    ]
    if isinstance(model, SvTarget):
        latent = model.blocks()["b"]
        written.append(artifacts.write_volatility_band(run_dir, result.mu[latent], sd[latent]))
    if args.lb_draws > 0:
        estimate = estimate_lower_bound(
            _state_from_result(result), model, draws=args.lb_draws, seed=config.rng_seed
        )
        path = run_dir / artifacts.LOWER_BOUND_FILE
        write_csv(path, {
            "draws": [estimate.draws],
            "mean": [estimate.mean],
            "stderr": [estimate.stderr],
            "nonfinite": [estimate.nonfinite],
        })
        written.append(path)

    artifacts.write_manifest(
        run_dir, args.argv, "fit", written,
        model=args.model, data=args.data or "", config=config.to_dict(),
    )
    print(
        f"{result.termination.value} after {result.iterations_used} iterations "
        f"({len(result.lbar_trace)} windows); results in {run_dir}"
    )
    return 0


# ============================================================================
# gradcheck
# ============================================================================

def cmd_gradcheck(args: argparse.Namespace) -> int:
    """Finite-difference check of the model gradient, one row per parameter block."""
    model = _model_from_args(args)
    run_dir = artifacts.resolve_run_dir(args.out, f"gradcheck-{args.model}")
    report = check_gradient(
        model, points=args.points, step=args.step, seed=args.seed, scale=args.scale,
        threshold=args.threshold,
    )
    rows = report.to_rows()
    names = model.parameter_names()
    path = run_dir / "gradcheck.csv"
    write_csv(path, {
        "block": [row["block"] for row in rows],
        "max_rel_error": [float(row["max_rel_error"]) for row in rows],
        "worst_parameter": [names[row["worst_index"]] for row in rows],
        "passed": [str(row["passed"]).lower() for row in rows],
    })
    artifacts.write_manifest(
        run_dir, args.argv, "gradcheck", [path], model=args.model, data=args.data or "",
        config={"points": args.points, "step": args.step, "seed": args.seed, "scale": args.scale},
    )

    print(f"{'block':<10} {'max rel error':>14}  worst parameter")
    for row in rows:
        flag = "" if row["passed"] else "  FAIL"
        print(f"{row['block']:<10} {row['max_rel_error']:>14.3e}  {names[row['worst_index']]}{flag}")

    if not report.passed:
        raise GradientCheckError(
            f"Gradient check failed for block(s): {', '.join(report.failing_blocks()) or 'n/a'}",
            details={
                "Max relative error": f"{report.max_error:.3e}",
                "Threshold": f"{report.threshold:.1e}",
                "Non-finite points": report.nonfinite_points,
            },
        )
    return 0


# ============================================================================
# varcompare
# ============================================================================

def _default_components(model: TargetModel) -> List[int]:
    """Every coordinate outside the latent block ``b``; all of them if there is none."""
    blocks = model.blocks()
    if "b" not in blocks:
        return list(range(model.dim))
    latent = blocks["b"]
    return [k for k in range(model.dim) if not latent.start <= k < latent.stop]


def cmd_varcompare(args: argparse.Namespace) -> int:
    """Paired family-1 / family-2 gradient draws for μ at a fitted state."""
    model = _model_from_args(args)
    result_path = Path(args.result)
    if not result_path.exists():
        raise DataError(f"Fit result file not found: {result_path}")
    result = FitResult.from_text(result_path.read_text(encoding="utf-8"))
    if result.factor.dim != model.dim:
        raise DimensionMismatchError(
            f"Fit result dimension {result.factor.dim} does not match model dimension {model.dim}"
        )

    components = [c - 1 for c in parse_int_list(args.components)] if args.components \
        else _default_components(model)
    if any(not 0 <= c < model.dim for c in components):
        raise UsageError(f"--components must lie in 1..{model.dim}")

    state = _state_from_result(result)
    rng = make_rng(args.seed)
    g1 = np.empty((args.draws, len(components)))
    g2 = np.empty((args.draws, len(components)))
    for k in range(args.draws):
        s = draw_standard_normal(rng, model.dim)
        g1[k] = estimate_gradients(state, model, s, Estimator.FAMILY1).g_mu[components]
        g2[k] = estimate_gradients(state, model, s, Estimator.FAMILY2).g_mu[components]

    names = model.parameter_names()
    run_dir = artifacts.resolve_run_dir(args.out, f"varcompare-{args.model}")
    draws_path = run_dir / "varcompare_draws.csv"
    write_csv(draws_path, {
        "component": [c + 1 for c in components for _ in range(args.draws)],
        "name": [names[c] for c in components for _ in range(args.draws)],
        "draw": [k + 1 for _ in components for k in range(args.draws)],
        "family1": [float(v) for v in g1.T.ravel()],
        "family2": [float(v) for v in g2.T.ravel()],
    })

    var1 = g1.var(axis=0, ddof=1)
    var2 = g2.var(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(var1 > 0, var2 / var1, np.nan)
    summary_path = run_dir / "varcompare_summary.csv"
    write_csv(summary_path, {
        "component": [c + 1 for c in components],
        "name": [names[c] for c in components],
        "var1": [float(v) for v in var1],
        "var2": [float(v) for v in var2],
        "ratio": [float(v) for v in ratio],
    })
    artifacts.write_manifest(
        run_dir, args.argv, "varcompare", [draws_path, summary_path],
        model=args.model, data=args.data or "",
        config={"draws": args.draws, "seed": args.seed, "result": args.result},
    )
    print(f"{len(components)} components, {args.draws} paired draws; "
          f"max var2/var1 = {np.nanmax(ratio) if np.any(np.isfinite(ratio)) else float('nan'):.3e}")
    return 0


# ============================================================================
# bench
# ============================================================================

def _bench_model(family: str, n: int, seed: int) -> TargetModel:
    if family == "ssm":
        return SvTarget(build_sv_model(simulate_sv(n, seed=seed)))
    return GlmmTarget(simulate_glmm(n, seed=seed))


def cmd_bench(args: argparse.Namespace) -> int:
    """Per-iteration wall clock and touched-value counts on synthetic data."""
    sizes = parse_int_list(args.sizes)
    if not sizes or min(sizes) < 2:
        raise UsageError("--sizes must be a comma separated list of integers >= 2")
    algorithms = [Algorithm.parse(a) for a in args.algorithms.split(",") if a.strip()]
    if args.iters < 1:
        raise UsageError("--iters must be at least 1")

    counts: Dict[str, list] = {k: [] for k in ("family", "n", "dim", "algorithm", "nnz", "touched_per_iter")}
    timing: Dict[str, list] = {k: [] for k in ("family", "n", "algorithm", "seconds_per_iter")}
    for n in sizes:
        model = _bench_model(args.family, n, args.seed)
        for algorithm in algorithms:
            config = FitConfig(
                algorithm=algorithm, estimator=Estimator.FAMILY2,
                max_iterations=args.iters, window=args.iters, rng_seed=args.seed,
            )
            fitter = VariationalFitter(model, config)
            fitter.step()  # compile the kernels outside the timed loop
            factor = fitter.state.factor
            factor.reset_counter()
            start = time.perf_counter()
            for _ in range(args.iters):
                fitter.step()
            elapsed = time.perf_counter() - start

            per_iter = elapsed / args.iters
            touched = factor.touched // args.iters
            logger.info("bench %s n=%d %s: %.3e s/iter, %d touched/iter",
                        args.family, n, algorithm.short_name, per_iter, touched)
            for key, value in (("family", args.family), ("n", n), ("dim", model.dim),
                               ("algorithm", algorithm.short_name),
                               ("nnz", fitter.state.pattern.nnz), ("touched_per_iter", touched)):
                counts[key].append(value)
            for key, value in (("family", args.family), ("n", n),
                               ("algorithm", algorithm.short_name), ("seconds_per_iter", per_iter)):
                timing[key].append(value)
            print(f"{args.family:<5} n={n:<6} {algorithm.short_name:<10} "
                  f"{per_iter:.3e} s/iter  {touched} touched/iter")

    run_dir = artifacts.resolve_run_dir(args.out, f"bench-{args.family}")
    counts_path = run_dir / "bench_counts.csv"
    timing_path = run_dir / "bench_timing.csv"
    write_csv(counts_path, counts)
    write_csv(timing_path, timing)
    artifacts.write_manifest(
        run_dir, args.argv, "bench", [counts_path, timing_path], model=args.family,
        config={"sizes": args.sizes, "iters": args.iters, "algorithms": args.algorithms,
                "seed": args.seed},
    )
    return 0


# ============================================================================
# replay
# ============================================================================

def cmd_replay(args: argparse.Namespace, dispatch: Callable[[Sequence[str]], int]) -> int:
    """Re-run a manifest's argv into a fresh directory and compare checksums."""
    manifest_path = Path(args.manifest)
    if not manifest_path.exists():
        raise DataError(f"Manifest not found: {manifest_path}")
    manifest = RunManifest.from_text(manifest_path.read_text(encoding="utf-8"))
    if manifest.subcommand == "replay":
        raise UsageError("Cannot replay a replay manifest")

    run_dir = artifacts.resolve_run_dir(args.out, f"replay-{manifest.subcommand}")
    code = dispatch([*manifest.argv, "--out", str(run_dir)])
    if code != 0:
        raise ReplayError(f"Replayed command exited with code {code}")

    mismatched = artifacts.compare_artifacts(run_dir, manifest, skip=VOLATILE_ARTIFACTS)
    if mismatched:
        raise ReplayError(
            f"{len(mismatched)} artifact(s) differ from the manifest",
            details={"Artifacts": ", ".join(mismatched), "Directory": str(run_dir)},
        )
    checked = len(set(manifest.artifacts) - set(VOLATILE_ARTIFACTS))
    print(f"Replay reproduced {checked} artifact(s) in {run_dir}")
    return 0
