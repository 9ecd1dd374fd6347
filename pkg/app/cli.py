"""
Command-line entry point: ``python -m app.cli <command> [options]``.

Every command resolves its options from flags, an optional ``--config`` file and an optional
``--preset``, runs the matching action and exits with the action's exit code.
"""
import json
import logging
import sys

import click

from app import settings
from app.actions.configurations import SweepAxis, SweepSide
from app.services.action_runner import execute_action


logger = logging.getLogger(__name__)


def common_options(func):
    func = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                        help="DKSE-CONFIG v1 key=value file.")(func)
    func = click.option("--seed", type=int, default=None, help="Seed for splitting, sampling and initialization.")(func)
    func = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(func)
    return func


def model_options(func):
    func = click.option("--preset", type=click.Choice(sorted(settings.PRESETS)), default=None,
                        help="Published hyper-parameter row.")(func)
    func = click.option("--dataset", type=click.Path(), default=None, help="Prepared split directory.")(func)
    func = click.option("--epochs", type=int, default=None)(func)
    return func


def run(action_id: str, config_path=None, **flags):
    result = execute_action(action_id, flags=flags, config_path=config_path)
    if not result.ok:
        click.echo(f"error: {result.message}", err=True)
        sys.exit(int(result.exit_code))
    summary = (result.result or {}).get("summary")
    click.echo(summary.rstrip("\n") if summary else json.dumps(result.result, default=str, sort_keys=True))


@click.group()
def cli():
    """Knowledge-graph enhanced recommender experiments."""


@cli.command()
@common_options
@click.option("--interactions", type=click.Path(), default=None, help="Ratings TSV: user, item, [rating], [timestamp].")
@click.option("--kg", type=click.Path(), default=None, help="KG TSV: head, relation, tail.")
@click.option("--alignment", type=click.Path(), default=None, help="Alignment TSV: item, entity.")
@click.option("--k-core", "k_core", type=int, default=None)
def prepare(config_path, **flags):
    """Filter, split and cache a dataset; prints its statistics."""
    run("prepare", config_path, **flags)


@cli.command()
@common_options
@model_options
def train(config_path, **flags):
    """Train and write the best checkpoint, the epoch log and the reports."""
    run("train", config_path, **flags)


@cli.command()
@common_options
@model_options
@click.option("--checkpoint", type=click.Path(dir_okay=False), default=None)
@click.option("--k-grid", "k_grid", default=None, help="Comma-separated K values, e.g. 1,5,10.")
def evaluate(config_path, **flags):
    """CTR and top-K metrics of a checkpoint on the test split."""
    run("evaluate", config_path, **flags)


@cli.command()
@common_options
@model_options
@click.option("--repeats", type=int, default=None, help="Runs per variant with seeds seed..seed+R-1.")
def ablate(config_path, **flags):
    """Full model, the four grouping modes and the five component ablations."""
    run("ablate", config_path, **flags)


@cli.command()
@common_options
@model_options
@click.option("--axis", type=click.Choice([axis.value for axis in SweepAxis]), default=None)
@click.option("--side", type=click.Choice([side.value for side in SweepSide]), default=None)
@click.option("--repeats", type=int, default=None)
def sweep(config_path, **flags):
    """AUC over one hyper-parameter grid."""
    run("sweep", config_path, **flags)


@cli.command()
@common_options
def synth(config_path, **flags):
    """Write planted-cluster ratings, KG and alignment TSVs."""
    run("synth", config_path, **flags)


@cli.command()
@common_options
@model_options
@click.option("--steps", type=int, default=None)
def bench(config_path, **flags):
    """Per-step training time over route counts and embedding sizes."""
    run("bench", config_path, **flags)


if __name__ == "__main__":
    cli()
