"""Command-line interface.

Usage::

    screenlab solve     --config run.ini [--out DIR]   # optimal mechanism -> solve.json
    screenlab sweep     --config run.ini               # alpha sweep -> sweep.csv
    screenlab alpha-hat --config run.ini               # regime switch point -> alpha_hat.json
    screenlab oracle    --config run.ini               # grid oracle (N <= 3) -> oracle.json
    screenlab simulate  --config run.ini               # Monte Carlo of the optimum -> simulate.json
    screenlab improve   --config run.ini               # stochastic improvement -> improve.json
    screenlab check     --config run.ini               # assumptions and invariants -> check.json

Exit codes: 0 success, 1 internal error, 2 refusal / infeasible / size
limit / failed check, 64 usage or configuration error.
"""

from __future__ import annotations

import json
import logging
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from ._numerics import ConvergenceError
from .config import ConfigError, RunConfig, load_config
from .dist import check_assumption1, check_assumption2
from .mechanism import Environment, LimitedLiabilityError, u1_star_variants
from .sim import SimConfig, deviation_search, quit_search, simulate, simulate_stochastic
from .solver import (
    BracketError,
    Regime,
    SizeError,
    SolverRefusal,
    brute_force,
    find_alpha_hat,
    foc_residuals,
    interior_at_thetabar,
    solve,
    sweep_alpha,
    sweep_to_csv,
)
from .stochastic import (
    InapplicableError,
    build_improvement,
    epsilon_bound,
    improvement_report,
    verify_stochastic,
)

__all__ = ["cli", "main", "EXIT_OK", "EXIT_INTERNAL", "EXIT_REFUSED", "EXIT_USAGE"]

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_REFUSED = 2
EXIT_USAGE = 64

REFUSALS = (SolverRefusal, SizeError, InapplicableError, BracketError, LimitedLiabilityError)

log = logging.getLogger("screenlab")


class CheckFailed(RuntimeError):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _write(out: Path, name: str, payload) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    if isinstance(payload, str):
        text = payload
    else:
        text = json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n"
    path.write_text(text, encoding="utf-8")
    return path


def _common(fn):
    fn = click.option(
        "--out",
        "out",
        type=click.Path(file_okay=False, path_type=Path),
        default=Path("."),
        show_default=True,
        help="Directory for output files.",
    )(fn)
    fn = click.option(
        "--config",
        "config_path",
        type=click.Path(dir_okay=False, path_type=Path),
        required=True,
        help="INI run configuration.",
    )(fn)
    return fn


def _threads(cfg: RunConfig) -> int | None:
    if os.environ.get("SCREENLAB_THREADS"):
        return None  # the simulator reads the variable itself
    return cfg.threads


def _env(cfg: RunConfig) -> Environment:
    d = cfg.dist()
    alpha = cfg.require_alpha()
    try:
        return Environment(d, cfg.N, alpha)
    except ValueError as exc:
        raise SolverRefusal(str(exc)) from exc


@click.group()
@click.version_option(__version__, prog_name="screenlab")
@click.option("-v", "--verbose", count=True, help="Increase log detail.")
def cli(verbose: int):
    """Optimal dynamic screening mechanisms with limited liability."""
    logging.basicConfig(
        level=logging.WARNING - 10 * min(verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )


@cli.command("solve")
@_common
def cmd_solve(config_path: Path, out: Path):
    """Solve for the optimal mechanism at one alpha."""
    cfg = load_config(config_path)
    rep = solve(_env(cfg), check_paranoid=cfg.paranoid)
    path = _write(out, "solve.json", rep.to_dict())
    click.echo(f"{rep.regime.value} V*={rep.V_star!r} -> {path}")


@cli.command("sweep")
@_common
def cmd_sweep(config_path: Path, out: Path):
    """Solve along an ascending alpha grid and write a CSV table."""
    cfg = load_config(config_path)
    d = cfg.dist()
    grid = cfg.require_grid()
    if grid[0] < d.hi:
        raise SolverRefusal(f"alpha grid starts at {grid[0]}, below the highest cost {d.hi}")
    rows = sweep_alpha(d, cfg.N, grid)
    path = _write(out, "sweep.csv", sweep_to_csv(rows, cfg.N))
    click.echo(f"{len(rows)} rows -> {path}")


@cli.command("alpha-hat")
@_common
def cmd_alpha_hat(config_path: Path, out: Path):
    """Locate the alpha where the optimum switches to always-working."""
    cfg = load_config(config_path)
    res = find_alpha_hat(cfg.dist(), cfg.N)
    _write(out, "alpha_hat.json", res.to_dict())
    click.echo(repr(res.alpha_hat))


@cli.command("oracle")
@_common
def cmd_oracle(config_path: Path, out: Path):
    """Brute-force grid search over every threshold profile (N <= 3)."""
    cfg = load_config(config_path)
    env = _env(cfg)
    profile, value, step = brute_force(env, grid_points=cfg.grid_points, refine_rounds=cfg.refine_rounds)
    payload = {
        "N": cfg.N,
        "alpha": env.alpha,
        "V": value,
        "final_step": step,
        "cutoffs": profile.to_mapping(),
    }
    path = _write(out, "oracle.json", payload)
    click.echo(f"V={value!r} -> {path}")


@cli.command("simulate")
@_common
def cmd_simulate(config_path: Path, out: Path):
    """Monte Carlo run of the optimal mechanism."""
    cfg = load_config(config_path)
    env = _env(cfg)
    rep = solve(env)
    sim_cfg = SimConfig(
        n_paths=cfg.n_paths,
        seed=cfg.seed,
        deviation_nodes=cfg.deviation_nodes,
        theta_grid=cfg.theta_grid,
        threads=_threads(cfg),
        dump_paths=cfg.dump_paths,
    )
    res = simulate(rep.mechanism, env, sim_cfg)
    payload = {"regime": rep.regime.value, "exact_principal_payoff": rep.V_star, **res.to_dict()}
    path = _write(out, "simulate.json", payload)
    if cfg.dump_paths:
        _write(out, "paths.csv", res.paths_csv())
    click.echo(f"principal {res.principal_mean!r} +/- {res.principal_stderr!r} (exact {rep.V_star!r}) -> {path}")


@cli.command("improve")
@_common
def cmd_improve(config_path: Path, out: Path):
    """Build the randomised first-period improvement and report its gain."""
    cfg = load_config(config_path)
    env = _env(cfg)
    rep = solve(env)
    if rep.regime != Regime.ConsecutiveMenu:
        raise InapplicableError("the optimum is always-working; no randomised improvement applies")
    bound = epsilon_bound(rep, env)
    eps = cfg.epsilon if cfg.epsilon is not None else (cfg.epsilon_fraction or 0.5) * bound
    sm = build_improvement(rep, env, eps)
    check = verify_stochastic(sm)
    report = improvement_report(sm, check)
    if cfg.has_simulation:
        sim = simulate_stochastic(sm, SimConfig(n_paths=cfg.n_paths, seed=cfg.seed, threads=_threads(cfg)))
        report["simulated_gain"] = sim.extra["gain"]
    path = _write(out, "improve.json", report)
    click.echo(f"delta={report['delta']!r} slack_min={report['slack_min']!r} -> {path}")


@cli.command("check")
@_common
def cmd_check(config_path: Path, out: Path):
    """Report the distributional assumptions and run the invariant suite."""
    cfg = load_config(config_path)
    d = cfg.dist()
    N = cfg.N
    report: dict = {"assumption1": check_assumption1(d)}
    if N >= 2:
        report["assumption2"] = check_assumption2(d, N).to_dict()
    report["interior_at_thetabar"] = interior_at_thetabar(d, N).to_dict()
    alpha = cfg.alpha if cfg.alpha is not None else d.hi
    env = Environment(d, N, alpha)
    rep = solve(env, check_paranoid=cfg.paranoid)
    mech = rep.mechanism
    sim_cfg = SimConfig(n_paths=1, seed=cfg.seed, deviation_nodes=cfg.deviation_nodes, theta_grid=cfg.theta_grid)
    dev = deviation_search(mech, env, sim_cfg)
    quit_ = quit_search(mech, env, sim_cfg)
    checks = {
        "interim_ir": rep.ir_min_slack >= -1e-9,
        "incentive_compatibility": dev.max_violation <= 1e-9,
        "limited_liability": bool(np.min(mech.payments) >= -1e-10),
        "quit_search_matches_ir": abs(quit_.min_utility - rep.ir_min_slack) <= 1e-9,
    }
    if rep.regime == Regime.ConsecutiveMenu:
        c = np.asarray(rep.menu.start_cutoffs)
        binding = float(np.sum(d.I(c[1:]))) if N > 1 else 0.0
        checks["binding_rent"] = abs(rep.u1_star - binding) <= 1e-12
        checks["foc_residual"] = float(np.max(np.abs(foc_residuals(c, d, N, alpha)))) <= 1e-10
        checks["cutoffs_above_lo"] = bool(np.all(c > d.lo + 1e-6))
    report.update(
        {
            "alpha": alpha,
            "regime": rep.regime.value,
            "V_star": rep.V_star,
            "u1_star_variants": u1_star_variants(mech.profile, d),
            "deviation_search": dev.to_dict(),
            "quit_search": quit_.to_dict(),
            "checks": checks,
            "ok": all(checks.values()),
        }
    )
    path = _write(out, "check.json", report)
    for name, ok in checks.items():
        click.echo(f"{'ok  ' if ok else 'FAIL'} {name}")
    if N >= 2:
        a2 = report["assumption2"]
        click.echo(
            f"assumption1={report['assumption1']} g_monotone={a2['a2_g_monotone']} "
            f"density_bound={a2['a2_density_bound']}"
        )
    click.echo(f"-> {path}")
    if not report["ok"]:
        raise CheckFailed("invariant check failed")


def main(argv=None) -> int:
    """Entry point with the documented exit codes."""
    try:
        cli.main(args=argv, prog_name="screenlab", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_INTERNAL
    except click.ClickException as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except ConfigError as exc:
        click.echo(f"usage error: {exc}", err=True)
        return EXIT_USAGE
    except REFUSALS as exc:
        click.echo(f"refused: {exc}", err=True)
        return EXIT_REFUSED
    except CheckFailed as exc:
        click.echo(str(exc), err=True)
        return EXIT_REFUSED
    except ConvergenceError as exc:
        click.echo(f"solver error: {exc}", err=True)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort reporting for the CLI
        log.debug("internal error", exc_info=True)
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_INTERNAL
    return EXIT_OK


def entry() -> None:
    sys.exit(main())
