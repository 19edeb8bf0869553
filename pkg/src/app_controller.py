import functools
import json
import sys
from typing import Optional

import click

from src.app_module import get_app_service, get_experiment_config_service, get_experiment_job
from src.exceptions import BudgetExceededError, ConfigError, DpAdmmError


def handle_errors(command):
    """Maps the error hierarchy onto process exit codes: 2 config, 4 budget, 3 anything else."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ConfigError as e:
            click.echo(f"config error: {e}", err=True)
            sys.exit(e.exit_code)
        except BudgetExceededError as e:
            click.echo(f"privacy budget exceeded: {e}", err=True)
            sys.exit(e.exit_code)
        except DpAdmmError as e:
            click.echo(f"{type(e).__name__}: {e}", err=True)
            sys.exit(e.exit_code)
        except (OSError, ValueError, ArithmeticError) as e:
            click.echo(f"{type(e).__name__}: {e}", err=True)
            sys.exit(DpAdmmError.exit_code)

    return wrapper


def load_config(config: str, out: Optional[str], workers: Optional[int], seed_offset: int):
    service = get_experiment_config_service()
    cfg = service.parse_config(config)
    return service.with_overrides(cfg, output_dir=out, workers=workers, seed_offset=seed_offset)


def experiment_options(command):
    command = click.option(
        "--seed-offset", type=int, default=0, show_default=True, help="Shift every configured seed."
    )(command)
    command = click.option("--workers", type=int, default=None, help="Parallel sweep cells.")(
        command
    )
    command = click.option("--out", type=click.Path(file_okay=False), default=None)(command)
    command = click.option(
        "--config", "config", required=True, type=click.Path(), help="key = value experiment file."
    )(command)
    return command


@click.group()
def cli():
    """Differentially private multi-step ADMM experiments."""


@cli.command()
def info():
    """Print the application name and version."""
    click.echo(json.dumps(get_app_service().get_app_info()))


@cli.command()
@experiment_options
@click.option("--epsilon", type=float, default=None, help="Defaults to the first configured value.")
@click.option("--l", "l", type=int, default=None, help="Defaults to the first configured value.")
@click.option("--seed", type=int, default=None, help="Defaults to the first configured seed.")
@click.option("--checkpoint", type=click.Path(dir_okay=False), default=None)
@click.option("--resume", type=click.Path(dir_okay=False), default=None)
@click.option("--stop-at", type=int, default=None, help="Last outer iteration to execute.")
@handle_errors
def run(config, out, workers, seed_offset, epsilon, l, seed, checkpoint, resume, stop_at):
    """Run a single (epsilon, l, seed) cell."""
    cfg = load_config(config, out, workers, seed_offset)
    job = get_experiment_job()
    summary = job.run_cell(
        cfg,
        job.prepare(cfg),
        cfg.epsilon[0] if epsilon is None else epsilon,
        cfg.l[0] if l is None else l,
        cfg.seeds[0] if seed is None else seed + seed_offset,
        checkpoint=checkpoint,
        resume=resume,
        stop_at=stop_at,
    )
    click.echo(summary.run_csv)


@cli.command()
@experiment_options
@handle_errors
def sweep(config, out, workers, seed_offset):
    """Run the epsilon x l x seeds grid and write aggregate.csv."""
    cfg = load_config(config, out, workers, seed_offset)
    for path in get_experiment_job().run_sweep(cfg):
        click.echo(path)


@cli.command()
@experiment_options
@handle_errors
def oracle(config, out, workers, seed_offset):
    """Compute (or load from cache) the centralized optimum w*."""
    cfg = load_config(config, out, workers, seed_offset)
    optimum = get_experiment_job().oracle(cfg)
    click.echo(f"objective={optimum.objective_value:.17g} gradient_norm={optimum.gradient_norm:.3e}")


@cli.command()
@experiment_options
@handle_errors
def audit(config, out, workers, seed_offset):
    """Write the privacy report of every (epsilon, l) pair without running."""
    cfg = load_config(config, out, workers, seed_offset)
    for report in get_experiment_job().audit(cfg):
        click.echo(report.to_text())


@cli.command()
@click.option("--adult-path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Cache file to write.")
@handle_errors
def preprocess(adult_path, out):
    """Encode the raw Adult files into the d=/n= cache format."""
    dataset = get_experiment_job().preprocess(adult_path, out)
    click.echo(f"{out}: n={len(dataset)} d={dataset.dimension}")
