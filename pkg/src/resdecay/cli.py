import logging
import os
from dataclasses import dataclass
from functools import wraps
from os.path import dirname, exists, join
from typing import List, Optional, Sequence

import anyio
import asyncclick as click
import sentry_sdk
from dotenv import load_dotenv
from sentry_sdk.integrations.logging import LoggingIntegration
from tabulate import tabulate

from resdecay import __version__
from resdecay.config import GridConfig, LoggingConfig, ScenarioConfig, builtin_scenarios, resolve_scenario
from resdecay.enums import StateKind
from resdecay.exceptions import ConfigurationError, InvariantsFailedError, ResDecayError
from resdecay.poles import ModelParams, PoleTable
from resdecay.scenarios import ScenarioReport, run_scenario, validate_scenario
from resdecay.utils import write

DEFAULT_SCENARIO = 'fig1'

_logger = logging.getLogger('resdecay.cli')


@dataclass
class CLIContext:
    logging_config: LoggingConfig


def cli_wrapper(fn):
    @wraps(fn)
    async def wrapper(*args, **kwargs) -> None:
        try:
            with ResDecayError.wrap():
                await fn(*args, **kwargs)
        except KeyboardInterrupt:
            pass
        except ResDecayError as e:
            _logger.critical(e.__repr__())
            _logger.info(e.format())
            quit(1)

    return wrapper


def init_sentry(config: ScenarioConfig) -> None:
    if not config.sentry:
        return
    if config.sentry.debug:
        level, event_level, attach_stacktrace = logging.DEBUG, logging.WARNING, True
    else:
        level, event_level, attach_stacktrace = logging.INFO, logging.ERROR, False

    integrations = [
        LoggingIntegration(
            level=level,
            event_level=event_level,
        ),
    ]
    sentry_sdk.init(
        dsn=config.sentry.dsn,
        environment=config.sentry.environment,
        integrations=integrations,
        release=__version__,
        attach_stacktrace=attach_stacktrace,
    )


def parse_grid(value: Optional[str]) -> Optional[GridConfig]:
    """`t_min:t_max:points` in units of τ₁"""
    if value is None:
        return None
    try:
        t_min, t_max, points = value.split(':')
        return GridConfig(t_min=float(t_min), t_max=float(t_max), points=int(points))
    except ValueError as e:
        raise ConfigurationError(f'`--grid` must look like `t_min:t_max:points`, got `{value}`') from e


def override_options(fn):
    options = [
        click.option('--lambda', 'strength', type=float, default=None, help='Barrier strength λ'),
        click.option('--a', 'radius', type=float, default=None, help='Shell radius'),
        click.option('--poles', type=int, default=None, help='Number of proper poles'),
        click.option('--kind', type=click.Choice([k.value for k in StateKind]), default=None, help='Initial state kind'),
        click.option('--alpha', type=int, default=None, help='First box quantum number'),
        click.option('--beta', type=int, default=None, help='Second box quantum number'),
        click.option('--grid', type=str, default=None, help='Time grid `t_min:t_max:points` in units of τ₁'),
        click.option('--out', '-o', type=str, default=None, help='Output root, overrides RESDECAY_OUTPUT'),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def configure(reference: str, **overrides) -> ScenarioConfig:
    overrides['grid'] = parse_grid(overrides.pop('grid', None))
    overrides['output'] = overrides.pop('out', None)
    return resolve_scenario(reference).with_overrides(**overrides)


@click.group(help='Decay of two identical particles from a δ-shell potential', context_settings=dict(max_content_width=120))
@click.version_option(__version__)
@click.option('--env-file', '-e', type=str, multiple=True, help='Path to .env file', default=[])
@click.option('--logging-config', '-l', type=str, help='Path to logging YAML config', default='logging.yml')
@click.pass_context
@cli_wrapper
async def cli(ctx, env_file: List[str], logging_config: str):
    # NOTE: Config from cwd, fallback to builtin
    try:
        path = join(os.getcwd(), logging_config)
        _logging_config = LoggingConfig.load(path)
    except FileNotFoundError:
        path = join(dirname(__file__), 'configs', logging_config)
        _logging_config = LoggingConfig.load(path)
    _logging_config.apply()

    for env_path in env_file:
        env_path = join(os.getcwd(), env_path)
        if not exists(env_path):
            raise ConfigurationError(f'env file `{env_path}` does not exist')
        _logger.info('Applying env_file `%s`', env_path)
        load_dotenv(env_path, override=True)

    ctx.obj = CLIContext(logging_config=_logging_config)


async def run_scenarios(configs: Sequence[ScenarioConfig]) -> List[ScenarioReport]:
    """Scenarios run in worker threads; reports keep the order of `configs`"""
    reports: List[Optional[ScenarioReport]] = [None] * len(configs)

    async def _run(index: int) -> None:
        reports[index] = await anyio.to_thread.run_sync(run_scenario, configs[index])

    async with anyio.create_task_group() as tg:
        for index in range(len(configs)):
            tg.start_soon(_run, index)
    return [report for report in reports if report is not None]


@cli.command(help='Run scenarios, builtin names or YAML paths')
@click.argument('scenarios', type=str, nargs=-1)
@override_options
@click.pass_context
@cli_wrapper
async def run(ctx, scenarios: List[str], **overrides):
    configs = [configure(reference, **overrides) for reference in scenarios or [DEFAULT_SCENARIO]]
    for config in configs:
        if config.sentry:
            init_sentry(config)
            break

    reports = await run_scenarios(configs)
    for report in reports:
        click.echo(report.render())

    failed = [(f'{report.name}:{suite}', detail) for report in reports for suite, detail in report.failed]
    if failed:
        raise InvariantsFailedError(failed)


@cli.command(name='list', help='List builtin scenarios')
@click.pass_context
@cli_wrapper
async def list_(ctx):
    rows = []
    for name in builtin_scenarios():
        config = ScenarioConfig.load_builtin(name)
        state = config.state
        rows.append((name, config.model.strength, state.kind.value, state.alpha, state.beta or ''))
    click.echo(tabulate(rows, headers=['scenario', 'lambda', 'kind', 'alpha', 'beta']))


@cli.command(help='Dry-run configs: parse them and build pole and overlap tables')
@click.argument('paths', type=str, nargs=-1, required=True)
@click.pass_context
@cli_wrapper
async def validate(ctx, paths: List[str]):
    for path in paths:
        config = resolve_scenario(path)
        click.echo(f'{path}: OK')
        for line in validate_scenario(config):
            click.echo(f'  {line}')


@cli.command(help='Solve and print the pole table')
@click.option('--lambda', 'strength', type=float, default=6.0, help='Barrier strength λ')
@click.option('--a', 'radius', type=float, default=1.0, help='Shell radius')
@click.option('--poles', type=int, default=20, help='Number of proper poles')
@click.option('--out', '-o', type=str, default=None, help='Write the table as CSV to this path')
@click.pass_context
@cli_wrapper
async def poles(ctx, strength: float, radius: float, poles: int, out: Optional[str]):
    table = PoleTable.build(ModelParams(strength=strength, radius=radius, n_poles=poles))
    rows = [(p.index, f'{p.kappa:.12g}', f'{p.resonance_energy:.8g}', f'{p.width:.6g}', f'{p.lifetime:.6g}') for p in table.poles]
    click.echo(tabulate(rows, headers=['p', 'kappa', 'energy', 'width', 'lifetime']))
    if out:
        write(out, table.to_csv(), overwrite=True)
