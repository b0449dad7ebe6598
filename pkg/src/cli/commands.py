"""
Command-line interface.

    credal generate  --n N --seed S --out data.jsonl
    credal calibrate --input data.jsonl --alpha 0.05 --out artifact.json
    credal predict   --artifact artifact.json --input test.jsonl --delta 0.05 --out predictions.jsonl
    credal evaluate  --input data.jsonl --epsilons 0.05,0.1 --seeds 20 --out results/
    credal plot      --artifact artifact.json --point-id s00001 --out region.svg

Exit codes: 0 success, 2 invalid input, 3 empty calibration data, 4 math failure.
"""

import functools
import logging
import sys
from typing import List, Optional

import click

from src.cli.interface import CredalInterface
from src.utils.config import load_settings
from src.utils.data_helpers import to_json
from src.utils.exceptions import CredalError
from src.utils.logger import configure_logging

logger = logging.getLogger(__name__)


def _parse_float_list(ctx, param, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        values = [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}")
    if not values:
        raise click.BadParameter("at least one value is required")
    for v in values:
        if not 0.0 < v < 1.0:
            raise click.BadParameter(f"{v} is not in (0, 1)")
    return values


def _parse_labels(ctx, param, value: Optional[str]) -> Optional[List[int]]:
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated label indices, got {value!r}")


def _emit(summary) -> None:
    click.echo(to_json(summary))


def handle_errors(command):
    """Map library errors to exit codes at the command boundary."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except CredalError as e:
            logger.error(f"{type(e).__name__}: {e}")
            click.echo(f"error: {e}", err=True)
            sys.exit(e.exit_code)
        except (click.exceptions.Exit, click.ClickException):
            raise
        except OSError as e:
            logger.error(f"I/O failure: {e}")
            click.echo(f"error: {e}", err=True)
            sys.exit(2)
        except Exception as e:
            logger.exception(f"Unexpected failure: {e}")
            click.echo(f"error: {e}", err=True)
            sys.exit(4)

    return wrapper


labels_option = click.option('--labels', callback=_parse_labels, default=None,
                             help='Comma-separated label subset to keep (0-based); vectors are renormalized.')


@click.group()
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
              help='Settings YAML (defaults to $CREDAL_CONFIG or config/settings.yaml).')
@click.option('--log-level', default=None, help='Overrides the configured log level.')
@click.option('--log-file', type=click.Path(dir_okay=False), default=None, help='Also log to this file.')
@click.pass_context
def cli(ctx, config_path, log_level, log_file):
    """Conformal credal regions, imprecise highest-density sets and uncertainty."""
    try:
        settings = load_settings(config_path)
    except CredalError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(e.exit_code)
    configure_logging(log_level or settings.logging.level, log_file or settings.logging.file)
    ctx.obj = CredalInterface(settings)


@cli.command()
@click.option('--input', 'input_path', required=True, type=click.Path(dir_okay=False))
@click.option('--alpha', type=click.FloatRange(0.0, 1.0, max_open=True), default=None,
              help='Miscoverage level in [0, 1); 0 gives the vacuous region.')
@click.option('--out', required=True, type=click.Path(dir_okay=False))
@click.option('--conformity', default=None, help='Conformity function id.')
@labels_option
@click.pass_obj
@handle_errors
def calibrate(interface: CredalInterface, input_path, alpha, out, conformity, labels):
    """Compute the conformal threshold and write a calibration artifact."""
    alpha = interface.settings.calibration.alpha if alpha is None else alpha
    _emit(interface.calibrate(input_path, alpha, out, labels=labels, conformity=conformity))


@cli.command()
@click.option('--artifact', 'artifact_path', required=True, type=click.Path(dir_okay=False))
@click.option('--input', 'input_path', required=True, type=click.Path(dir_okay=False))
@click.option('--delta', type=click.FloatRange(0.0, 1.0, max_open=True), default=None,
              help='Prediction-set level in [0, 1).')
@click.option('--resolution', type=click.IntRange(min=1), default=None,
              help='Lattice resolution for PRPS (default max(20, 600 // K)).')
@click.option('--out', required=True, type=click.Path(dir_okay=False))
@click.option('--no-uncertainty', is_flag=True, help='Skip the TU/AU/EU decomposition.')
@labels_option
@click.pass_obj
@handle_errors
def predict(interface: CredalInterface, artifact_path, input_path, delta, resolution, out, no_uncertainty, labels):
    """Credal regions, envelopes, IHDS and PRPS sets for every point of a dataset."""
    delta = interface.settings.prediction.delta if delta is None else delta
    _emit(interface.predict(artifact_path, input_path, delta, out, resolution=resolution, labels=labels,
                            with_uncertainty=not no_uncertainty))


@cli.command()
@click.option('--input', 'input_path', required=True, type=click.Path(dir_okay=False))
@click.option('--epsilons', callback=_parse_float_list, default=None,
              help='Comma-separated miscoverage levels in (0, 1).')
@click.option('--alpha-policy', type=click.Choice(['half', 'grid']), default='half',
              help='half: alpha = delta = epsilon / 2; grid: also sweep alpha over (0, epsilon).')
@click.option('--grid-steps', type=click.IntRange(min=2), default=None)
@click.option('--seeds', type=click.IntRange(min=1), default=None)
@click.option('--split-fraction', type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=None)
@click.option('--resolution', type=click.IntRange(min=1), default=None)
@click.option('--no-timing', is_flag=True, help='Leave runtime columns out of the outputs.')
@click.option('--out', required=True, type=click.Path(file_okay=False))
@labels_option
@click.pass_obj
@handle_errors
def evaluate(interface: CredalInterface, input_path, epsilons, alpha_policy, grid_steps, seeds, split_fraction,
             resolution, no_timing, out, labels):
    """Seeded split-calibrate-predict runs with coverage, efficiency and type-2 metrics."""
    evaluation = interface.settings.evaluation
    summary = interface.evaluate(input_path, epsilons or evaluation.epsilons, seeds or evaluation.seeds, out,
                                 alpha_policy=alpha_policy, grid_steps=grid_steps, resolution=resolution,
                                 labels=labels, split_fraction=split_fraction, timing=not no_timing)
    _emit(summary)


@cli.command()
@click.option('--artifact', 'artifact_path', required=True, type=click.Path(dir_okay=False))
@click.option('--point-id', required=True)
@click.option('--input', 'input_path', type=click.Path(dir_okay=False), default=None,
              help='Dataset holding the point (defaults to the calibration dataset).')
@click.option('--out', required=True, type=click.Path(dir_okay=False))
@labels_option
@click.pass_obj
@handle_errors
def plot(interface: CredalInterface, artifact_path, point_id, input_path, out, labels):
    """Ternary SVG of one point's credal region (K = 3)."""
    _emit(interface.plot(artifact_path, point_id, out, input_path=input_path, labels=labels))


@cli.command()
@click.option('--n', type=click.IntRange(min=1), default=None)
@click.option('--seed', type=int, default=None)
@click.option('--temperature', type=click.FloatRange(0.0, min_open=True), default=None)
@click.option('--out', required=True, type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def generate(interface: CredalInterface, n, seed, temperature, out):
    """Write a synthetic Gaussian-mixture dataset with exact plausibility vectors."""
    synthetic = interface.settings.synthetic
    _emit(interface.generate(n or synthetic.n, synthetic.seed if seed is None else seed, out, temperature))


if __name__ == '__main__':
    cli()
