"""Command-line interface: ``fqcov <subcommand> [options]``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 a check
failed while ``--assert`` was given.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import ConfigError, load_config
from .engine import TimeGrid, derive_seed, generate_path, write_path_csv
from .experiments import run

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ASSERT = 2


class _Cli(click.Group):
    """Maps usage and configuration errors to exit code 1."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except (click.UsageError, ConfigError) as exc:
            if isinstance(exc, click.UsageError):
                exc.show()
            else:
                click.echo(f"error: {exc}", err=True)
            rv = EXIT_INVALID
        except click.ClickException as exc:
            exc.show()
            rv = EXIT_INVALID
        except click.Abort:
            click.echo("aborted", err=True)
            rv = EXIT_INVALID
        rv = rv if isinstance(rv, int) else EXIT_OK
        if standalone_mode:
            sys.exit(rv)
        return rv


def common_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="YAML config file."),
        click.option("--seed", type=int, help="Seed base for replication seeds."),
        click.option("--paths", "n_paths", type=int, help="Number of Monte Carlo paths."),
        click.option("--hurst", "h", type=float, help="Hurst index H."),
        click.option("--steps", "n_steps", type=int, help="Grid steps on [0, t_max]."),
        click.option("--t-max", "t_max", type=float, help="Time horizon."),
        click.option("--out", "output_path", type=str, help="Output CSV path (JSON summary alongside)."),
        click.option("--workers", type=int, help="Worker processes."),
        click.option("--assert", "do_assert", is_flag=True, help="Exit 2 if any check fails."),
    ]
    for o in reversed(opts):
        fn = o(fn)
    return fn


def _execute(experiment, config_path, do_assert, **overrides):
    cfg = load_config(config_path, {"experiment": experiment, **overrides})
    result = run(cfg)
    click.echo(f"{experiment}: wrote {result.csv_path} and {result.json_path}")
    for c in result.checks:
        click.echo(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
    if do_assert and not result.passed:
        return EXIT_ASSERT
    return EXIT_OK


@click.group(cls=_Cli)
@click.version_option(package_name="artifact")
def main():
    """Quadratic covariation and local time experiments for rough fBm."""


@main.command()
@common_options
def simulate(config_path, do_assert, seed, n_paths, h, n_steps, t_max, output_path, workers):
    """Sample fBm paths and write each as a CSV file."""
    values = {}
    if config_path:
        import yaml

        values = yaml.safe_load(Path(config_path).read_text()) or {}
    seed = seed if seed is not None else int(values.get("seed", 0))
    n = n_paths if n_paths is not None else int(values.get("n_paths", 1))
    hv = h if h is not None else float(values.get("h", 0.3))
    steps = n_steps if n_steps is not None else int(values.get("n_steps", 4096))
    tm = t_max if t_max is not None else float(values.get("t_max", 1.0))
    out = Path(output_path or values.get("output_path", "results/path.csv"))
    problems = {}
    if not 0 < hv < 1:
        problems["h"] = "must lie in (0, 1)"
    if steps < 2:
        problems["n_steps"] = "must be at least 2"
    if n < 1:
        problems["n_paths"] = "must be positive"
    if not tm > 0:
        problems["t_max"] = "must be positive"
    if seed < 0:
        problems["seed"] = "must be non-negative"
    if problems:
        raise ConfigError(problems)
    grid = TimeGrid(tm, steps)
    for i in range(n):
        p = generate_path(grid, hv, derive_seed(seed, i))
        target = out if n == 1 else out.with_name(f"{out.stem}_{i:04d}{out.suffix or '.csv'}")
        write_path_csv(p, target)
        click.echo(f"path {i}: {target} ({p.method})")
    return EXIT_OK


@main.command()
@common_options
@click.option("--function", "function", help="Catalog function as JSON or alias (identity, square, cube).")
@click.option("--eps-multiples", help="Comma-separated multiples of dt, e.g. 32,16,8,4.")
def qcov(config_path, do_assert, function, eps_multiples, **kw):
    """Monte Carlo sweep of the quadratic covariation estimators."""
    return _execute("qcov_sweep", config_path, do_assert, function=function, eps_multiples=eps_multiples, **kw)


@main.command()
@common_options
@click.option("--levels", help="Comma-separated levels x.")
@click.option("--bandwidth", type=float, help="Window half-width (default 0.02 t_max^H).")
def localtime(config_path, do_assert, levels, bandwidth, **kw):
    """Level profile of the weighted local time with a bandwidth sweep."""
    return _execute("localtime_profile", config_path, do_assert, levels=levels, bandwidth=bandwidth, **kw)


@main.command("verify-inequalities")
@common_options
@click.option("--samples", type=int, help="Random tuples per inequality.")
@click.option("--ratio-samples", type=int, help="Samples for the constant ratio estimates.")
def verify_inequalities(config_path, do_assert, samples, ratio_samples, **kw):
    """Randomised check of the covariance inequalities."""
    return _execute("inequality_suite", config_path, do_assert, samples=samples, ratio_samples=ratio_samples, **kw)


@main.command()
@common_options
@click.option("--function", "function", help="Catalog function as JSON or alias.")
@click.option("--mollify", "mollify_n", help="Comma-separated mollifier indices n.")
def norm(config_path, do_assert, function, mollify_n, **kw):
    """Evaluate ||f||_H (or ||f||_H* for time-dependent f)."""
    return _execute("norm_eval", config_path, do_assert, function=function, mollify_n=mollify_n, **kw)


@main.command("ito-check")
@common_options
@click.option("--function", "function", help="F as JSON or alias; its derivative enters the covariation.")
@click.option("--eps-multiples", help="Comma-separated multiples of dt; the smallest is used.")
def ito_check(config_path, do_assert, function, eps_multiples, **kw):
    """Ito formula in expectation: E F(B_t) - F(0) against half the covariation."""
    return _execute("ito_check", config_path, do_assert, function=function, eps_multiples=eps_multiples, **kw)


@main.command("bouleau-yor")
@common_options
@click.option("--function", "function", help="Step function (or time-dependent f) as JSON.")
@click.option("--bandwidth", type=float)
def bouleau_yor(config_path, do_assert, function, bandwidth, **kw):
    """Covariation against minus the integral of f over local time."""
    return _execute("bouleau_yor", config_path, do_assert, function=function, bandwidth=bandwidth, **kw)


@main.command()
@common_options
@click.option("--function", "function", help="phi(x, s) as JSON or alias.")
@click.option("--levels", help="Comma-separated level grid.")
def occupation(config_path, do_assert, function, levels, **kw):
    """Occupation formula per path: time integral against space integral."""
    return _execute("occupation", config_path, do_assert, function=function, levels=levels, **kw)


@main.command()
@common_options
@click.option("--curve", help='Curve as JSON, e.g. {"kind": "constant", "params": {"c": 0}}.')
@click.option("--bandwidth", type=float)
@click.option("--levels", help="Comma-separated level grid.")
def curve(config_path, do_assert, curve, bandwidth, levels, **kw):
    """Local time along a curve a(s) as a running process."""
    return _execute("curve_localtime", config_path, do_assert, curve=curve, bandwidth=bandwidth, levels=levels, **kw)


if __name__ == "__main__":
    main()
