"""
Command-line entry points: simulate, sweep and sample
"""
from contextlib import ExitStack
from functools import wraps
import logging
from pathlib import Path
import sys
from typing import Optional

import click
from dotenv import load_dotenv

from wisdomsim import csv_output
from wisdomsim.config import Mode, RunConfig, parse_config
from wisdomsim.errors import ConfigError, Error
from wisdomsim.logging_setup import configure_logging
from wisdomsim.opinion_model import MAX_SEED, sample_initial_population, simulate as simulate_run
from wisdomsim.sweep_engine import error_contour, initial_metrics, run_sweep

logger = logging.getLogger(__name__)

PROG = "wisdomsim"
WORKERS_ENV = "WISDOMSIM_WORKERS"

config_option = click.option(
    "--config", "config_path", required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Run configuration (flat key = value file)",
)
out_option = click.option(
    "--out", "out_path", default=None, type=click.Path(dir_okay=False, path_type=Path),
    help="Output CSV (default: the config's output key, else stdout)",
)


def reports_errors(command):
    """Turn wisdomsim and I/O errors into a one-line diagnostic and exit code 1"""
    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (Error, OSError) as exc:
            click.echo(f"{PROG}: error: {exc}", err=True)
            raise click.exceptions.Exit(1)
    return wrapper


def load_config(path: Path, mode: Mode) -> RunConfig:
    config = parse_config(path.read_text(encoding="utf-8"))
    if config.mode is not mode:
        raise ConfigError(f"config is for '{config.mode.value}', command is '{mode.value}'", key="mode")
    return config


class DiagnosticGroup(click.Group):
    """Command group that reports usage errors as one `wisdomsim: error:` line"""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        if not standalone_mode:
            return super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        try:
            status = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.exceptions.NoArgsIsHelpError as exc:
            exc.show()
            sys.exit(exc.exit_code)
        except click.ClickException as exc:
            click.echo(f"{PROG}: error: {exc.format_message()}", err=True)
            sys.exit(exc.exit_code)
        except click.Abort:
            click.echo(f"{PROG}: error: aborted", err=True)
            sys.exit(1)
        sys.exit(status if isinstance(status, int) else 0)


@click.group(cls=DiagnosticGroup)
@click.option("-v", "--verbose", count=True, help="More log output (-v info, -vv debug)")
@click.version_option(package_name="wisdom-sim")
def main(verbose: int) -> None:
    """Social-influence opinion dynamics and wisdom-of-crowds metrics"""
    configure_logging(verbose)


@main.command()
@config_option
@click.option("--seed", type=click.IntRange(0, MAX_SEED), default=None, help="Override the population seed")
@out_option
@reports_errors
def simulate(config_path: Path, seed: Optional[int], out_path: Optional[Path]) -> None:
    """Run one simulation and write its metric time series"""
    config = load_config(config_path, Mode.SIMULATE)
    if seed is not None:
        config = config.with_seed(seed)
    record = simulate_run(config.population, config.params, config.truth, config.record_every)
    with csv_output.atomic_output(out_path or config.output_path) as sink:
        csv_output.emit_timeseries_csv(record, sink)


@main.command()
@config_option
@click.option("--workers", type=click.IntRange(min=1), default=None, envvar=WORKERS_ENV,
              show_envvar=True, help="Worker processes for the sweep")
@out_option
@click.option("--contour", "contour_path", default=None, type=click.Path(dir_okay=False, path_type=Path),
              help="Also write where the final error crosses its starting value")
@reports_errors
def sweep(config_path: Path, workers: Optional[int], out_path: Optional[Path],
          contour_path: Optional[Path]) -> None:
    """Run an (alpha, beta) grid and write the long-term metric table"""
    config = load_config(config_path, Mode.SWEEP)
    grid = config.sweep_grid()
    results = run_sweep(grid, workers=workers)
    # a failure before the commit leaves neither file behind
    with ExitStack() as stack:
        sink = stack.enter_context(csv_output.atomic_output(out_path or config.output_path))
        if contour_path is not None:
            level = initial_metrics(grid).collective_error
            contour_sink = stack.enter_context(csv_output.atomic_output(contour_path))
            csv_output.emit_contour_csv(error_contour(results, level), contour_sink)
        csv_output.emit_heatmap_csv(results, sink)


@main.command()
@config_option
@out_option
@reports_errors
def sample(config_path: Path, out_path: Optional[Path]) -> None:
    """Write the initial population drawn from the config"""
    config = load_config(config_path, Mode.SAMPLE)
    state = sample_initial_population(config.population)
    with csv_output.atomic_output(out_path or config.output_path) as sink:
        csv_output.emit_sample_csv(state, sink)


def run() -> None:
    """Console-script entry point; loads .env before parsing options"""
    load_dotenv()
    main(prog_name=PROG)
