"""Command-line harness: ``accelode {run,compare,sweep-damping,plot-data,defaults}``.

Exit codes: 0 success, 2 usage or config error, 3 certificate failure,
4 divergence or non-convergence, 5 missing input file.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import continuous, coordinate, lyapunov, problems, schemes, traces
from .config import ExperimentConfig, build_problem, initial_point, resolve_damping, resolve_step
from .errors import ConfigError, DivergenceError, NonConvergenceError, StepSizeError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CERTIFICATE = 3
EXIT_DIVERGED = 4
EXIT_FILE = 5


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# commands


def _first_failure(records):
    for r in records:
        for c in r.certificate_verdicts:
            if not c.passed:
                return c
    return None


def _describe(cert):
    where = f" z={cert.z_tag}" if cert.z_tag else ""
    return f"certificate {cert.name} failed at n={cert.n}{where}: lhs={cert.lhs!r} rhs={cert.rhs!r}"


def _run_flow(cfg, oracle, x0, out):
    smooth = problems.smooth_part(oracle)
    if smooth is not oracle:
        raise ConfigError("the flow variant needs a smooth problem")
    dt = resolve_step(cfg.scheme.step, oracle.lipschitz)
    gamma = resolve_damping(cfg.scheme.damping, oracle.alpha)
    xstar, fstar = problems.reference_minimizer(oracle)
    states = continuous.rk4_trajectory(oracle, gamma, continuous.PhaseState.at_rest(x0), dt, cfg.run.iterations)
    rows = continuous.trajectory_rows(oracle, states, xstar, fstar)
    traces.write_csv(out / "trajectory.csv", traces.TRAJECTORY_COLUMNS, rows)
    if cfg.run.certify:
        gap0 = rows[0][1]
        for (t, gap, lyap, _), (_, _, prev, _) in zip(rows[1:], rows[:-1]):
            if lyap > prev * (1 + 1e-8) + lyapunov.ATOL:
                print(f"lyapunov increased at t={t!r}", file=sys.stderr)
                return EXIT_CERTIFICATE
            if gap > 2 * math.exp(-math.sqrt(oracle.alpha) * t) * gap0 * (1 + 1e-4) + lyapunov.ATOL:
                print(f"rate bound violated at t={t!r}", file=sys.stderr)
                return EXIT_CERTIFICATE
    return EXIT_OK


def _run_coordinate(cfg, oracle, x0, out):
    if isinstance(oracle, problems.CompositeOracle):
        raise ConfigError("coordinate descent needs a smooth problem")
    if not isinstance(oracle, problems.CoordinateOracle):
        oracle = problems.coordinate_oracle(oracle)
    mode = "semi_greedy" if cfg.scheme.variant == "acd_semi_greedy" else "sampled"
    xstar, fstar = problems.reference_minimizer(oracle)
    merged = []
    status = EXIT_OK
    for seed in cfg.run.seeds:
        sampler = coordinate.sampler_from_lipschitz(oracle.coord_lipschitz, seed)
        trace = coordinate.acd_run(oracle, sampler, oracle.alpha, x0, cfg.run.iterations, mode=mode,
                                   certify_steps=cfg.run.certify, checkpoint_every=cfg.run.checkpoint_every,
                                   xstar=xstar, fstar=fstar)
        traces.write_trace(out / f"trace_seed{seed}.csv", trace.records, coordinate=True)
        traces.write_certificates(out / f"certificates_seed{seed}.csv", trace.records)
        merged += [[seed] + row for row in traces.trace_rows(trace.records, coordinate=True)]
        failure = _first_failure(trace.records)
        if failure is not None and status == EXIT_OK:
            print(f"seed {seed}: {_describe(failure)}", file=sys.stderr)
            status = EXIT_CERTIFICATE
    traces.write_csv(out / "trace_merged.csv", ("seed",) + traces.COORDINATE_COLUMNS, merged)
    return status


def cmd_run(cfg: ExperimentConfig) -> int:
    cfg.validate()
    out = Path(cfg.run.out)
    oracle = build_problem(cfg.problem)
    x0 = initial_point(cfg.problem, oracle)
    variant = cfg.scheme.variant
    if variant == "flow":
        return _run_flow(cfg, oracle, x0, out)
    if variant.startswith("acd"):
        return _run_coordinate(cfg, oracle, x0, out)

    if isinstance(oracle, problems.CoordinateOracle):
        oracle = oracle.base
    smooth = problems.smooth_part(oracle)
    step = resolve_step(cfg.scheme.step, smooth.lipschitz)
    scfg = schemes.SchemeConfig(step, smooth.alpha, variant, cfg.scheme.strict)
    certifiers = []
    if cfg.run.certify and scfg.variant.is_flow:
        certifiers = lyapunov.default_certifiers(cfg.run.z_samples, seed=cfg.problem.seed)
    xstar, fstar = problems.reference_minimizer(oracle)
    records = schemes.run(oracle, scfg, schemes.DiscreteState.at_rest(x0), cfg.run.iterations,
                          certifiers, xstar=xstar, fstar=fstar)
    traces.write_trace(out / "trace.csv", records)
    traces.write_certificates(out / "certificates.csv", records)
    failure = _first_failure(records)
    if failure is not None:
        print(_describe(failure), file=sys.stderr)
        return EXIT_CERTIFICATE
    return EXIT_OK


def _count(cfg, oracle, variant, x0, xstar, fstar):
    tol, budget = cfg.run.tol, cfg.run.budget
    if variant.startswith("acd"):
        base = oracle if isinstance(oracle, problems.CoordinateOracle) else problems.coordinate_oracle(oracle)
        sampler = coordinate.sampler_from_lipschitz(base.coord_lipschitz, cfg.run.seeds[0])
        mode = "semi_greedy" if variant == "acd_semi_greedy" else "sampled"
        trace = coordinate.acd_run(base, sampler, base.alpha, x0, budget, mode=mode, xstar=xstar, fstar=fstar,
                                   stop_gap=tol)
        return next((r.n for r in trace.records if r.f_gap <= tol), None)
    if variant == "flow":
        raise ConfigError("compare does not support the flow variant")
    smooth = problems.smooth_part(oracle)
    step = resolve_step(cfg.scheme.step, smooth.lipschitz)
    scfg = schemes.SchemeConfig(step, smooth.alpha, variant, cfg.scheme.strict)
    target = oracle.base if isinstance(oracle, problems.CoordinateOracle) else oracle
    return schemes.iterations_to_tolerance(target, scfg, x0, tol, budget, xstar, fstar, relative=False)


def cmd_compare(cfg: ExperimentConfig) -> int:
    cfg.validate()
    if not cfg.scheme.variants:
        raise UsageError("compare needs at least one variant")
    oracle = build_problem(cfg.problem)
    x0 = initial_point(cfg.problem, oracle)
    xstar, fstar = problems.reference_minimizer(oracle)
    rows = []
    for variant in cfg.scheme.variants:
        n = _count(cfg, oracle, variant, x0, xstar, fstar)
        rows.append((variant, "inf" if n is None else n))
        print(f"{variant}: {rows[-1][1]}")
    traces.write_csv(Path(cfg.run.out) / "compare.csv", traces.COMPARE_COLUMNS, rows)
    return EXIT_OK


def sweep_rows(lam_min, lam_max, grid, dt, horizon):
    """Analytic and RK4-fitted decay rates for damping rates in ``(0, 4 sqrt(lam_min)]``.

    The empirical rate comes from the two-mode diagonal quadratic
    ``{lam_min, lam_max}`` started at rest from ``(1, 1)``.
    """
    eig = [lam_min] if lam_max == lam_min else [lam_min, lam_max]
    oracle = problems.quadratic_from_spectrum(eig, np.zeros(len(eig)))
    xstar, fstar = np.zeros(len(eig)), 0.0
    steps = int(round(horizon / dt))
    rows = []
    for gamma in continuous.damping_grid(lam_min, grid):
        gamma = float(gamma)
        a = continuous.classify_damping(lam_min, gamma)
        try:
            states = continuous.rk4_trajectory(oracle, gamma, continuous.PhaseState.at_rest(np.ones(len(eig))),
                                               dt, steps)
            values = [continuous.continuous_lyapunov(oracle, s, xstar, fstar) for s in states]
            rate = continuous.fit_decay_rate([s.t for s in states], values)
            diverged = False
        except DivergenceError:
            rate, diverged = math.nan, True
        rows.append((gamma, a.decay_rate, a.regime, rate, diverged))
    return rows


def cmd_sweep_damping(cfg: ExperimentConfig) -> int:
    cfg.validate()
    sw = cfg.sweep
    rows = sweep_rows(sw.lambda_min, sw.lambda_max, sw.grid, sw.dt, sw.horizon)
    traces.write_csv(Path(cfg.run.out) / "sweep.csv", traces.SWEEP_COLUMNS, rows)
    best = min(rows, key=lambda r: r[1])
    print(f"fastest analytic decay {best[1]!r} at gamma={best[0]!r} ({best[2]})")
    flagged = sum(r[4] for r in rows)
    if flagged:
        print(f"{flagged} damping rates diverged at dt={sw.dt}", file=sys.stderr)
    return EXIT_OK


def cmd_plot_data(paths) -> int:
    for p in paths:
        print(traces.write_plot_data(p))
    return EXIT_OK


# --------------------------------------------------------------------------
# argument handling


def build_parser():
    parser = argparse.ArgumentParser(prog="accelode", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="INI config file")
        p.add_argument("--iters", type=int)
        p.add_argument("--step", help="real or 'auto' (1/sqrt(L))")
        p.add_argument("--damping", help="real or 'auto' (2 sqrt(alpha))")
        p.add_argument("--certify", choices=("on", "off"))
        p.add_argument("--seeds", help="comma-separated seed list")
        p.add_argument("--out", help="output directory")
        p.add_argument("--tol", type=float)
        p.add_argument("--variant", help="scheme for 'run'")
        p.add_argument("--variants", help="comma-separated schemes for 'compare'")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override any config key")

    for name in ("run", "compare", "sweep-damping"):
        common(sub.add_parser(name))
    plot = sub.add_parser("plot-data")
    plot.add_argument("traces", nargs="+", type=Path)
    sub.add_parser("defaults")
    return parser


def load_config(args) -> ExperimentConfig:
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        cfg = ExperimentConfig.from_ini(text)
    else:
        cfg = ExperimentConfig()
    flat = {
        "run.iterations": args.iters, "scheme.step": args.step, "scheme.damping": args.damping,
        "run.certify": args.certify, "run.seeds": args.seeds, "run.out": args.out,
        "run.tol": args.tol, "scheme.variant": args.variant, "scheme.variants": args.variants,
    }
    for key, value in flat.items():
        if value is not None:
            cfg.set(key, str(value))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        cfg.set(key.strip(), value)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "defaults":
            sys.stdout.write(ExperimentConfig().to_ini())
            return EXIT_OK
        if args.command == "plot-data":
            return cmd_plot_data(args.traces)
        cfg = load_config(args)
        command = {"run": cmd_run, "compare": cmd_compare, "sweep-damping": cmd_sweep_damping}[args.command]
        return command(cfg)
    except (ConfigError, StepSizeError, UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergenceError, NonConvergenceError) as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except FileNotFoundError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_FILE


if __name__ == "__main__":
    sys.exit(main())
