"""Command-line interface for shotflat using Click."""

import csv
import functools
import logging
import sys
from pathlib import Path

import click
import yaml

from .__version__ import __version__
from .engine import (
    RunReport,
    predict_squeezing,
    run_budget,
    run_cmrr,
    run_dither_scan,
    run_dust_monitor,
    run_monte_carlo,
)
from .errors import ScenarioError, ShotflatError
from .scenario import list_scenarios, parse_scenario, resolve_scenario
from .utils import get_config_value, load_cascading_env

LOG_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG}

logger = logging.getLogger(__name__)


def _configure_logging(verbose: int, config: dict):
    level_name = get_config_value(config, 'LOG_LEVEL', None)
    if verbose:
        level = LOG_LEVELS[min(verbose, 2)]
    elif level_name:
        level = getattr(logging, str(level_name).upper(), logging.WARNING)
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s', force=True)


def run_options(func):
    """Options shared by every scenario command."""

    @click.argument('scenario')
    @click.option('-o', '--out', type=click.Path(path_type=Path), default=None,
                  help='Directory for CSV traces and report.yaml')
    @click.option('-s', '--seed', type=click.IntRange(min=0), default=None,
                  help='Seed (default: analysis.seed from the scenario)')
    @click.option('-f', '--format', 'fmt', type=click.Choice(['csv']), default='csv',
                  help='Output format (default: csv)')
    @click.option('-w', '--workers', type=click.IntRange(min=1), default=None,
                  help='Worker processes (default: 1)')
    @click.option('--lenient', is_flag=True, help='Warn about unknown keys instead of failing')
    @click.option('-v', '--verbose', count=True, help='Verbose output (-vv for debug)')
    @click.help_option('-h', '--help')
    @functools.wraps(func)
    def wrapper(scenario, out, seed, fmt, workers, lenient, verbose, **kwargs):
        try:
            path = resolve_scenario(scenario)
        except ScenarioError as e:
            click.echo(f"❌ {e}", err=True)
            sys.exit(1)
        env = load_cascading_env(path)
        _configure_logging(verbose, env)

        if out is None:
            env_out = get_config_value(env, 'OUT', None)
            out = Path(env_out) if env_out else None
        if seed is None:
            seed = get_config_value(env, 'SEED', -1)
        if workers is None:
            workers = get_config_value(env, 'WORKERS', 1)
        strict = not lenient and get_config_value(env, 'STRICT', True)

        try:
            config = parse_scenario(path, strict=strict)
            if seed >= 0:
                config = config.with_seed(seed)
            if verbose:
                click.echo(f"📂 Scenario: {path}")
                click.echo(f"🎲 Seed: {config.analysis.seed}")
            func(config=config, out=out, workers=max(int(workers), 1), verbose=verbose, **kwargs)
        except ScenarioError as e:
            click.echo(f"❌ {e}", err=True)
            sys.exit(1)
        except ShotflatError as e:
            click.echo(f"❌ {e}", err=True)
            sys.exit(2)
        except OSError as e:
            click.echo(f"❌ Cannot write results: {e}", err=True)
            sys.exit(2)
        except Exception as e:
            logger.debug("run failed", exc_info=True)
            click.echo(f"❌ Error: {e}", err=True)
            sys.exit(2)

    return wrapper


def _echo_scalars(scalars: dict):
    for key, value in scalars.items():
        click.echo(f"  - {key}: {value:.6g}")


def _emit(report: RunReport, out: Path):
    if report.traces:
        click.echo("📈 Traces:")
        for name, trace in report.traces.items():
            click.echo(f"  - {name}: {len(trace)} bins, {trace.frequencies[0]:g}-{trace.frequencies[-1]:g} Hz")
    if report.scalars:
        click.echo("📊 Results:")
        _echo_scalars(report.scalars)
    if out is not None:
        written = report.write(out)
        click.echo(f"💾 Wrote {len(written)} files to {out}")


def _write_yaml(data: dict, out: Path, name: str):
    out.mkdir(parents=True, exist_ok=True)
    target = out / name
    target.write_text(yaml.safe_dump(data, sort_keys=False), encoding='utf-8')
    click.echo(f"💾 Wrote {target}")


@click.group()
@click.version_option(version=__version__)
@click.help_option('-h', '--help')
def main():
    """Shotflat - balanced homodyne detection noise budgets and simulations.

    Scenarios are INI files or the name of a shipped scenario (fig3b, fig11, ...).
    """
    pass


@main.command('list')
@click.help_option('-h', '--help')
def list_command():
    """List the shipped scenarios."""
    for name in list_scenarios():
        click.echo(name)


@main.command()
@run_options
def budget(config, out, workers, verbose):
    """Analytic noise budget (stationary sources only).

    Examples:
      shotflat budget fig5
      shotflat budget my.scn --out results/
    """
    click.echo(f"🧮 Budget: {config.name}")
    _emit(run_budget(config), out)


@main.command()
@run_options
def simulate(config, out, workers, verbose):
    """Time-domain Monte-Carlo run, stitched like a spectrum analyzer.

    Examples:
      shotflat simulate fig3b --out fig3b/ --workers 4
      shotflat simulate fig10 --seed 7
    """
    click.echo(f"🎲 Simulating: {config.name}")
    _emit(run_monte_carlo(config, workers=workers), out)


@main.command()
@run_options
def cmrr(config, out, workers, verbose):
    """Common-mode rejection of the configured detector."""
    result = run_cmrr(config)
    click.echo(f"⚖️  CMRR: {config.name}")
    _echo_scalars(result)
    if out is not None:
        _write_yaml({k: float(v) for k, v in result.items()}, out, 'cmrr.yaml')


@main.command('dither-scan')
@run_options
@click.option('-c', '--cycles', required=True, help='Comma-separated dither amplitudes in fringe cycles')
def dither_scan(config, out, workers, verbose, cycles):
    """Residual low-frequency scatter power against dither amplitude.

    Examples:
      shotflat dither-scan fig10 --cycles 0.5,1,1.5,2
    """
    try:
        amplitudes = [float(c) for c in cycles.split(',') if c.strip()]
    except ValueError:
        raise ScenarioError(f"--cycles must be comma-separated numbers, got {cycles!r}")
    points = run_dither_scan(config, amplitudes)
    best = min(points, key=lambda p: p.residual_power)
    click.echo(f"〰️  Dither scan: {config.name} at {config.dither.frequency_hz:g} Hz")
    for point in points:
        marker = ' ⬅' if point is best else ''
        click.echo(f"  - {point.cycles:g} cycles: {point.residual_power:.4e} W^2{marker}")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        target = out / 'dither_scan.csv'
        with target.open('w', encoding='utf-8', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(['cycles', 'residual_power_w2'])
            for point in points:
                writer.writerow([repr(point.cycles), repr(point.residual_power)])
        click.echo(f"💾 Wrote {target}")


@main.command('squeeze-predict')
@run_options
def squeeze_predict(config, out, workers, verbose):
    """Squeezing and anti-squeezing expected from the OPO and loss budget."""
    prediction = predict_squeezing(config)
    click.echo(f"🔮 Prediction: {config.name}")
    _echo_scalars(prediction.as_dict())
    if out is not None:
        _write_yaml(prediction.as_dict(), out, 'squeeze.yaml')


@main.command('dust-monitor')
@run_options
def dust_monitor(config, out, workers, verbose):
    """Subtracted DC voltage while dust crosses the beams."""
    click.echo(f"🌫️  Dust monitor: {config.name}")
    _emit(run_dust_monitor(config), out)


if __name__ == '__main__':
    main()
