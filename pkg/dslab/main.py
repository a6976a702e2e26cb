"""Command-line entry point for dslab.

Subcommands:
- spectrum: point spectra of the Schrodinger operators and of A1
- omega0: the band edge omega0 with a two-scheme cross-check
- identity: quadratic-form identity and trial-family limit
- resolvent-scan: resolvent norms along the imaginary axis
- continue: branch of periodic solitons
- growth: transverse growth rates lambda(kappa)
- evolve: time-domain growth measurement
- verify: the check registry

Exit codes: 0 success, 1 failed check or numerical failure, 2 configuration or
input error.
"""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from .config import load_config, resolve_config_path
from .dynamics.continuation import branch_to_json, continue_branch
from .dynamics.evolve import PeriodicDomain, measure_growth, pencil_profile, seed_perturbation
from .dynamics.instability import growth_curve
from .errors import ConfigError, DSLabError, PreconditionError
from .models import AppConfig, Scheme
from .output.formatter import format_csv, format_json, write_artifact
from .output.plots import plot_branch_frequency, plot_growth_curve
from .spectral.grid import Parity, build_grid
from .spectral.operators import (
    assemble_A1,
    assemble_schrodinger,
    compute_omega0,
    compute_point_spectrum,
    cutoff_correction,
    form_limit_scan,
    quadratic_form_A1,
    quadratic_form_identity_rhs,
)
from .spectral.resolvent import fit_loglog_slope, resolvent_norm_scan
from .utils.logger import bind_run, clear_run, get_logger, setup_logging, timed
from .verification.base import VerifyContext
from .verification.registry import CHECKS, format_report, run_checks

logger = get_logger("main")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _grid(config: AppConfig, N: Optional[int] = None):
    g = config.grid
    return build_grid(g.Lx, N or g.N, g.scheme)


def _out(config: AppConfig, name: str) -> Path:
    return Path(config.output_dir) / name


# ── Subcommands ───────────────────────────────────────────────────


def cmd_spectrum(args, config: AppConfig) -> int:
    grid = _grid(config)
    rows = []
    cases = [
        ("schrodinger_c6", assemble_schrodinger(grid, 6.0), None, 2),
        ("schrodinger_c2", assemble_schrodinger(grid, 2.0), None, 1),
        ("A1_even_odd", assemble_A1(grid, config.params), [Parity.EVEN, Parity.ODD], 1),
    ]
    for name, op, subspace, count in cases:
        edge_tol = 0.5 if op.ess_edge > 0 else config.tolerances.eig
        spectrum = compute_point_spectrum(op, subspace, count=count, edge_tol=edge_tol)
        for index, (value, loc) in enumerate(zip(spectrum.eigenvalues, spectrum.localization)):
            rows.append((name, index, float(value), float(loc)))
            print(f"{name}[{index}] = {value:.12f}  (localization {loc:.4f})")
    write_artifact(_out(config, "spectrum.csv"), format_csv(["operator", "index", "eigenvalue", "localization"], rows, config))
    return EXIT_OK


def cmd_omega0(args, config: AppConfig) -> int:
    grid = _grid(config)
    result = compute_omega0(grid, config.params, cross_check=True)
    print(f"omega0 = {result.omega0:.12f}")
    print(f"two-scheme gap in omega0^2 = {result.discretization_gap:.3e}")
    data = {
        "omega0": result.omega0,
        "eigenvalue": result.eigenvalue,
        "reference_eigenvalue": result.reference_eigenvalue,
        "discretization_gap": result.discretization_gap,
        "nodes": grid.nodes,
        "u1": result.u1,
        "phi": result.phi,
    }
    write_artifact(_out(config, "omega0.json"), format_json(data, config, grid.metadata()))
    return EXIT_OK if result.discretization_gap <= args.gap_tol else EXIT_FAILED


def cmd_identity(args, config: AppConfig) -> int:
    grid = _grid(config)
    params = config.params
    rng = np.random.default_rng(config.seed)
    x = grid.nodes
    rows = []
    worst = 0.0
    for sample in range(args.samples):
        a, b = rng.uniform(0.5, 2.0, size=2)
        c = rng.standard_normal(4)
        u1 = (c[0] + c[1] * np.cos(x / a)) / np.cosh(x / a)
        phi = (c[2] * np.tanh(x) + c[3] * np.sin(x / b)) * np.exp(-((x / (2.0 * b)) ** 2))
        direct = quadratic_form_A1(u1, phi, grid, params)
        rhs = quadratic_form_identity_rhs(u1, phi, grid, params)
        gap = abs(direct - rhs) / max(abs(rhs), 1e-300)
        worst = max(worst, gap)
        rows.append((sample, direct, rhs, gap))
    write_artifact(_out(config, "identity.csv"), format_csv(["sample", "direct", "identity", "relative_gap"], rows, config))

    R_candidates = args.R or [grid.Lx / 8.0, grid.Lx / 4.0, grid.Lx / 2.0]
    R_list = sorted(R for R in R_candidates if 2.0 * R <= grid.Lx)
    values = form_limit_scan(R_list, grid, params) if R_list else []
    limit_rows = [(R, v, -16.0 / 3.0 + cutoff_correction(R, params)) for R, v in zip(R_list, values)]
    write_artifact(_out(config, "form_limit.csv"), format_csv(["R", "form", "predicted"], limit_rows, config))
    for R, v, predicted in limit_rows:
        print(f"R = {R:g}: form = {v:.8f}, -16/3 + cutoff term = {predicted:.8f}")

    tol = args.tol if args.tol is not None else (1e-8 if grid.scheme == Scheme.FOURIER else 5e-2)
    print(f"largest relative identity gap over {args.samples} samples: {worst:.3e} (tolerance {tol:.1e})")
    return EXIT_OK if worst <= tol else EXIT_FAILED


def cmd_resolvent_scan(args, config: AppConfig) -> int:
    grid = _grid(config)
    omega0 = compute_omega0(grid, config.params).omega0
    ks = args.k or [10.0, 30.0, 100.0, 300.0]

    def scan(k):
        return resolvent_norm_scan([k], grid, config.params, omega0=omega0, method=args.method, seed=config.seed)[0]

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            points = list(pool.map(scan, ks))
    else:
        points = [scan(k) for k in ks]

    rows = [(p.k, p.opnorm_XX, p.opnorm_XD) for p in points]
    write_artifact(_out(config, "resolvent_scan.csv"), format_csv(["k", "opnorm_XX", "opnorm_XD"], rows, config))
    for k, xx, xd in rows:
        print(f"k = {k:g}: |R|_XX = {xx:.6e}, |R|_XD = {xd:.6e}")
    if len(points) >= 2:
        slope_xx = fit_loglog_slope(ks, [p.opnorm_XX for p in points])
        slope_xd = fit_loglog_slope(ks, [p.opnorm_XD for p in points])
        print(f"log-log slopes: XX {slope_xx:.3f}, XD {slope_xd:.3f}")
        if not (-1.2 <= slope_xx <= -0.8 and -0.2 <= slope_xd <= 0.2):
            return EXIT_FAILED
    return EXIT_OK


def cmd_continue(args, config: AppConfig) -> int:
    settings = config.continuation
    s_max = args.s_max if args.s_max is not None else settings.s_max
    ds = args.ds if args.ds is not None else settings.ds
    grid = _grid(config, settings.N)
    branch = continue_branch(
        s_max,
        ds,
        grid,
        config.params,
        M=settings.M,
        tol=config.tolerances.newton,
        max_iterations=settings.max_iterations,
        max_condition=config.tolerances.max_condition,
    )
    rows = [(sample.s, sample.field.omega, sample.residual) for sample in branch.samples]
    write_artifact(_out(config, "branch.csv"), format_csv(["s", "omega", "residual"], rows, config))
    write_artifact(_out(config, "branch.json"), format_json(branch_to_json(branch), config))
    plot_branch_frequency(_out(config, "branch_omega.svg"), branch.s_values, branch.omegas)
    a, b = branch.fit_frequency()
    print(f"omega0 = {branch.omega0:.12f}; omega(s) - omega0 = {a:.3e} s + {b:.6e} s^2")
    print(f"{len(branch.samples)} samples up to s = {branch.samples[-1].s:g}" + (" (truncated)" if branch.truncated else ""))
    return EXIT_FAILED if branch.truncated else EXIT_OK


def cmd_growth(args, config: AppConfig) -> int:
    grid = _grid(config)
    settings = config.growth
    omega0 = compute_omega0(grid, config.params).omega0
    if args.kappa:
        for kappa in args.kappa:
            if not 0 < kappa < omega0:
                raise PreconditionError(f"kappa must lie in (0, omega0) = (0, {omega0:.6f}), got {kappa}")
        kappas = list(args.kappa)
    else:
        kappas = list(np.linspace(settings.kappa_min, settings.kappa_max, settings.kappa_count) * omega0)

    curve = growth_curve(kappas, grid, config.params, omega0=omega0, band_margin=settings.band_margin, jobs=args.jobs)
    rows = curve.rows()
    write_artifact(_out(config, "growth.csv"), format_csv(["kappa", "lambda", "residual"], rows, config))
    if rows:
        plot_growth_curve(_out(config, "growth.svg"), [r[0] for r in rows], [r[1] for r in rows], omega0)
    if args.dump_modes:
        modes = {
            f"{p.kappa:.12e}": {"lambda": p.lam, "u1": p.mode.u1, "phi": p.mode.phi, "u2": p.mode.u2}
            for p in curve.successful()
        }
        write_artifact(_out(config, "growth_modes.json"), format_json({"nodes": grid.nodes, "modes": modes}, config))
    for point in curve.points:
        if point.ok:
            print(f"kappa = {point.kappa:.6f}: lambda = {point.lam:.10f} (residual {point.residual:.2e})")
        else:
            print(f"kappa = {point.kappa:.6f}: {point.error}")
    return EXIT_OK if all(p.ok for p in curve.points) else EXIT_FAILED


def cmd_evolve(args, config: AppConfig) -> int:
    settings = config.evolve
    grid = _grid(config)
    omega0 = compute_omega0(grid, config.params).omega0
    kappa = args.kappa if args.kappa is not None else 0.5 * omega0
    amp = args.amp if args.amp is not None else settings.amp
    T = args.T if args.T is not None else settings.T
    dt = args.dt if args.dt is not None else settings.dt
    if kappa <= 0:
        raise PreconditionError(f"kappa must be positive, got {kappa}")

    domain = PeriodicDomain(grid.Lx, settings.Nx, settings.Ny, kappa)
    profile, lam_pencil = pencil_profile(kappa, grid, config.params, omega0, domain.x, config.growth.band_margin)
    field0 = seed_perturbation(domain, profile, amp)
    measurement = measure_growth(
        field0, amp, T, dt, config.params,
        window_upper=settings.window_upper,
        require_window=lam_pencil is not None,
    )

    write_artifact(_out(config, "evolve.csv"), format_csv(["t", "perturbation_norm", "mass"], measurement.rows(), config))
    summary = {
        "kappa": kappa,
        "omega0": omega0,
        "lambda_measured": measurement.lam,
        "lambda_pencil": lam_pencil,
        "window": [measurement.window_start, measurement.window_end],
        "window_reached": measurement.window_reached,
    }
    write_artifact(_out(config, "evolve.json"), format_json(summary, config, domain.metadata()))
    print(f"kappa = {kappa:.6f}: measured lambda = {measurement.lam:.6f}" + (f", pencil lambda = {lam_pencil:.6f}" if lam_pencil is not None else ""))
    return EXIT_OK


def cmd_verify(args, config: AppConfig) -> int:
    ctx = VerifyContext(config, max_nodes=args.max_nodes)
    results = run_checks(ctx, args.check)
    print(format_report(results))
    data = {"checks": [r.model_dump() for r in results]}
    write_artifact(_out(config, "verify.json"), format_json(data, config))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


COMMANDS = {
    "spectrum": cmd_spectrum,
    "omega0": cmd_omega0,
    "identity": cmd_identity,
    "resolvent-scan": cmd_resolvent_scan,
    "continue": cmd_continue,
    "growth": cmd_growth,
    "evolve": cmd_evolve,
    "verify": cmd_verify,
}


# ── Argument parsing ──────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file (DSLAB_CONFIG overrides)")
    common.add_argument("--output-dir", help="directory for artifacts")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for independent scans")
    common.add_argument("--seed", type=int, help="seed for random start vectors")
    common.add_argument("--error-json", action="store_true", help="print errors as JSON on stdout")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--json-logs", action="store_true", help="emit JSON log lines")

    parser = argparse.ArgumentParser(prog="dslab", description="Line-soliton analysis for the focussing elliptic-elliptic system")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("spectrum", parents=[common], help="point spectra of the linearized operators")

    p = sub.add_parser("omega0", parents=[common], help="band edge omega0 with a two-scheme cross-check")
    p.add_argument("--gap-tol", type=float, default=1e-5, help="accepted gap in omega0^2 between schemes")

    p = sub.add_parser("identity", parents=[common], help="quadratic-form identity and trial-family limit")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--R", type=float, action="append", default=None, help="cutoff radius (repeatable)")
    p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("resolvent-scan", parents=[common], help="resolvent norms along the imaginary axis")
    p.add_argument("--k", type=float, action="append", help="wavenumber (repeatable)")
    p.add_argument("--method", choices=["power", "svd"], default="power")

    p = sub.add_parser("continue", parents=[common], help="branch of periodic solitons")
    p.add_argument("--s-max", type=float)
    p.add_argument("--ds", type=float)

    p = sub.add_parser("growth", parents=[common], help="transverse growth rates")
    p.add_argument("--kappa", type=float, action="append", help="wavenumber (repeatable)")
    p.add_argument("--kappa-grid", action="store_true", help="sample the configured band (default)")
    p.add_argument("--dump-modes", action="store_true")

    p = sub.add_parser("evolve", parents=[common], help="time-domain growth measurement")
    p.add_argument("--kappa", type=float)
    p.add_argument("--amp", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)

    p = sub.add_parser("verify", parents=[common], help="run the check registry")
    p.add_argument("--check", action="append", choices=sorted(CHECKS), help="run only this check (repeatable)")
    p.add_argument("--max-nodes", type=int, default=512)
    return parser


def _apply_overrides(config: AppConfig, args) -> AppConfig:
    update = {}
    if args.output_dir:
        update["output_dir"] = args.output_dir
    if args.seed is not None:
        update["seed"] = args.seed
    if args.log_level:
        update["log_level"] = args.log_level
    return config.model_copy(update=update) if update else config


def _report_error(args, error: Exception, exit_code: int):
    if getattr(args, "error_json", False):
        print(json.dumps({"error": type(error).__name__, "message": str(error), "exit_code": exit_code}))
    print(f"error: {error}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _apply_overrides(load_config(resolve_config_path(args.config)), args)
        setup_logging(level=config.log_level, json_output=args.json_logs)
        bind_run(args.command, label=config.label, seed=config.seed)
        logger.info("command_started", output_dir=config.output_dir)
        with timed(logger, "command"):
            exit_code = COMMANDS[args.command](args, config)
    except (ConfigError, PreconditionError, ValidationError, FileNotFoundError) as e:
        _report_error(args, e, EXIT_USAGE)
        return EXIT_USAGE
    except DSLabError as e:
        logger.error("command_failed", error=str(e), error_type=type(e).__name__)
        _report_error(args, e, EXIT_FAILED)
        return EXIT_FAILED
    finally:
        clear_run()

    logger.info("command_exit", exit_code=exit_code)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
