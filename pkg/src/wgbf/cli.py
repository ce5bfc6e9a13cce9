"""Command-line driver: convergence studies, cavity runs, self-tests.

Exit codes: 0 success, 1 configuration error, 2 solver failure,
3 verification failure (study checks or self-test).
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import os
import sys
from dataclasses import replace

from .assembly import ProblemParams
from .dofspace import SpaceConfig
from .errors import ConfigError, NonConvergenceError, SolverError, WgbfError
from .mesh import generate_uniform_mesh, import_mesh, topology_report
from .postproc import (check_divergence_free, compute_errors,
                       convergence_rates, energy_identity_residual,
                       export_fields, export_table)
from .scenarios import (ManufacturedSolution, ScenarioConfig,
                        cavity_lid_velocity, load_config, parse_levels)
from .solver import SolverConfig, oseen_solve
from . import report, selftest

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wgbf",
        description="Divergence-free weak Galerkin solver for stationary "
                    "incompressible flow with convective and nonlinear "
                    "damping terms.")
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--scenario", choices=("manufactured", "cavity", "custom"))
    p.add_argument("--levels", help="comma list, e.g. 4,8,16 or 4x4,8x8")
    p.add_argument("--m", type=int, help="interior velocity degree (>= 1)")
    p.add_argument("--k", type=int, help="velocity trace degree (m-1 or m)")
    p.add_argument("--nu", type=float, help="viscosity")
    p.add_argument("--alpha", type=float, help="damping coefficient")
    p.add_argument("--r", type=float, help="damping exponent (>= 2)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--selftest", action="store_true",
                   help="run the operator verification suite and exit")
    p.add_argument("--condense", choices=("on", "off"),
                   help="static condensation of cell-interior unknowns")
    p.add_argument("--quaddeg", type=int, help="assembly quadrature degree")
    p.add_argument("--threads", type=int,
                   help="BLAS thread cap (default: env WG_BF_THREADS)")
    return p


def merge_config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if args.scenario:
        overrides["scenario"] = args.scenario
    if args.levels:
        overrides["levels"] = parse_levels(args.levels)
    if args.m is not None:
        overrides["m"] = args.m
        if args.k is None and args.config is None:
            overrides["k"] = args.m
    if args.k is not None:
        overrides["k"] = args.k
    if args.nu is not None:
        overrides["nu"] = args.nu
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.r is not None:
        overrides["r"] = args.r
    if args.out:
        overrides["out_dir"] = args.out
    if args.condense:
        overrides["condense"] = args.condense == "on"
    if args.quaddeg is not None:
        overrides["quad_degree"] = args.quaddeg
    if overrides.get("scenario", cfg.scenario) == "cavity" \
            and args.config is None:
        # paper-style cavity defaults unless explicitly overridden
        overrides.setdefault("nu", cfg.nu if args.nu is not None else 0.1)
        if args.m is None:
            overrides.setdefault("m", 2)
            overrides.setdefault("k", 2)
        if args.levels is None:
            overrides.setdefault("levels", [(25, 25)])
    return replace(cfg, **overrides)


def _solver_config(cfg: ScenarioConfig) -> SolverConfig:
    return SolverConfig(tol=cfg.tol, max_iter=cfg.max_iter,
                        condense=cfg.condense, quad_degree=cfg.quad_degree)


def _build_mesh(cfg: ScenarioConfig, level):
    if cfg.mesh_node_file:
        return import_mesh(cfg.mesh_node_file, cfg.mesh_cell_file)
    return generate_uniform_mesh(level[0], level[1], cfg.rect)


def run_study(cfg: ScenarioConfig) -> int:
    """Manufactured-solution refinement study with CSV/VTK/figure output."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    ms = ManufacturedSolution(cfg.nu, cfg.alpha, cfg.r)
    params = ProblemParams(cfg.nu, cfg.alpha, cfg.r, ms.forcing)
    spaces = SpaceConfig(cfg.m, cfg.k)
    sconf = _solver_config(cfg)
    reports = []
    print(f"# study: m={cfg.m} k={cfg.k} nu={cfg.nu} "
          f"alpha={cfg.alpha} r={cfg.r}")
    for idx, level in enumerate(cfg.levels):
        mesh = _build_mesh(cfg, level)
        label = f"{level[0]}x{level[1]}"
        try:
            sol, hist, solver = oseen_solve(mesh, spaces, params, sconf,
                                            dirichlet=ms.velocity)
        except (SolverError, NonConvergenceError) as exc:
            print(f"level {idx} ({label}): solver failed: {exc}",
                  file=sys.stderr)
            return EXIT_SOLVER
        rep = compute_errors(sol, ms.velocity, ms.velocity_gradient,
                             ms.pressure, iters=hist.iterations,
                             mesh_label=label)
        reports.append(rep)
        res, work = energy_identity_residual(solver, sol)
        export_fields(sol, os.path.join(cfg.out_dir, f"fields_{label}.vtk"))
        print(f"{label}: h={rep.h:.4e} dofs={rep.dofs} iters={rep.iters} "
              f"errL2u={rep.err_l2_u:.4e} errH1u={rep.err_h1_u:.4e} "
              f"errL2p={rep.err_l2_p:.4e} div={rep.div_inf:.2e} "
              f"jump={rep.jump_inf:.2e} energyRes={res:.2e}")
    csv_path = os.path.join(cfg.out_dir, "study.csv")
    export_table(reports, csv_path)
    report.plot_convergence(
        reports, os.path.join(cfg.out_dir, "convergence.png"),
        title=f"m={cfg.m}, k={cfg.k}")
    if len(reports) > 1:
        rates = convergence_rates([(r.h, r.err_l2_u) for r in reports])
        print("observed velocity L2 rates:",
              ", ".join(f"{r:.2f}" for r in rates if r is not None))

    # study-mode verification gates
    failures = []
    for rep in reports:
        if rep.div_inf > 1e-10 or rep.jump_inf > 1e-10:
            failures.append(f"{rep.mesh_label}: divergence check failed "
                            f"({rep.div_inf:.2e}, {rep.jump_inf:.2e})")
    for a, b in zip(reports[:-1], reports[1:]):
        if b.err_l2_u >= a.err_l2_u:
            failures.append(f"{b.mesh_label}: velocity error did not "
                            "decrease under refinement")
    if failures:
        for line in failures:
            print("CHECK FAILED:", line, file=sys.stderr)
        return EXIT_CHECK
    print(f"wrote {csv_path}")
    return EXIT_OK


def run_cavity(cfg: ScenarioConfig) -> int:
    """Lid-driven cavity solve with field export and iteration history."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    params = ProblemParams(cfg.nu, cfg.alpha, cfg.r, None)
    spaces = SpaceConfig(cfg.m, cfg.k)
    level = cfg.levels[0]
    mesh = _build_mesh(cfg, level)
    print(f"# cavity: {level[0]}x{level[1]} m={cfg.m} k={cfg.k} "
          f"nu={cfg.nu} alpha={cfg.alpha} r={cfg.r}")
    try:
        sol, hist, _ = oseen_solve(mesh, spaces, params, _solver_config(cfg),
                                   dirichlet=cavity_lid_velocity)
    except NonConvergenceError as exc:
        print(f"cavity solve did not converge: {exc}", file=sys.stderr)
        _write_history(exc.history, os.path.join(cfg.out_dir, "history.csv"))
        return EXIT_SOLVER
    except SolverError as exc:
        print(f"cavity solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    div, jump = check_divergence_free(sol)
    _write_history(hist, os.path.join(cfg.out_dir, "history.csv"))
    export_fields(sol, os.path.join(cfg.out_dir, "cavity.vtk"))
    report.plot_cavity(
        sol, os.path.join(cfg.out_dir, "cavity.png"),
        title=f"nu={cfg.nu}, alpha={cfg.alpha}, r={cfg.r}")
    print(f"converged in {hist.iterations} iterations; "
          f"div={div:.2e} jump={jump:.2e}")
    if div > 1e-10 or jump > 1e-10:
        print("CHECK FAILED: divergence-free verification", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _write_history(history, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "increment", "residual", "seconds"])
        for i, (inc, res, sec) in enumerate(
                zip(history.increments, history.residuals,
                    history.wall_times), start=1):
            w.writerow([i, f"{inc:.6e}", f"{res:.6e}", f"{sec:.4f}"])


def run_custom(cfg: ScenarioConfig) -> int:
    """Solve on a user mesh with homogeneous data; export the fields."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    mesh = _build_mesh(cfg, cfg.levels[0] if cfg.levels else (4, 4))
    print("# custom:", topology_report(mesh))
    params = ProblemParams(cfg.nu, cfg.alpha, cfg.r, None)
    try:
        sol, hist, _ = oseen_solve(mesh, SpaceConfig(cfg.m, cfg.k), params,
                                   _solver_config(cfg))
    except (SolverError, NonConvergenceError) as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    export_fields(sol, os.path.join(cfg.out_dir, "fields.vtk"))
    print(f"converged in {hist.iterations} iterations")
    return EXIT_OK


def _thread_limit(args):
    n = args.threads
    if n is None:
        env = os.environ.get("WG_BF_THREADS")
        if env:
            try:
                n = int(env)
            except ValueError as exc:
                raise ConfigError(
                    f"bad WG_BF_THREADS value {env!r}") from exc
    if n is None:
        return contextlib.nullcontext()
    if n < 1:
        raise ConfigError(f"need a positive thread count, got {n}")
    try:
        from threadpoolctl import threadpool_limits
        return threadpool_limits(limits=n)
    except ImportError:
        os.environ["OMP_NUM_THREADS"] = str(n)
        return contextlib.nullcontext()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        limiter = _thread_limit(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    with limiter:
        if args.selftest:
            _, ok = selftest.run_all(verbose_print=print)
            return EXIT_OK if ok else EXIT_CHECK
        try:
            cfg = merge_config(args)
        except (ConfigError, WgbfError) as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        try:
            if cfg.scenario == "manufactured":
                return run_study(cfg)
            if cfg.scenario == "cavity":
                return run_cavity(cfg)
            return run_custom(cfg)
        except ConfigError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except WgbfError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
