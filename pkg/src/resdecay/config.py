import logging.config
import os
import re
from dataclasses import field, replace
from os import environ as env
from os.path import dirname, join
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import validator
from pydantic.dataclasses import dataclass
from ruamel.yaml import YAML

from resdecay.enums import ExponentialVariant, PropagatorForm, SlopeAxis, StateKind
from resdecay.exceptions import ConfigurationError, DomainError, InvalidStateError
from resdecay.observables import TimeGrid
from resdecay.poles import DEFAULT_POLES, ModelParams
from resdecay.two_particle import InitialStateSpec

ENV_VARIABLE_REGEX = r'\${([\w]*):-(.*)}'
OUTPUT_ENV_VARIABLE = 'RESDECAY_OUTPUT'
SCENARIOS_PATH = join(dirname(__file__), 'configs', 'scenarios')

_logger = logging.getLogger('resdecay.config')


@dataclass
class ModelConfig:
    """δ-shell model

    :param strength: Barrier strength λ ≥ 0
    :param radius: Shell radius a
    :param poles: Number of proper poles kept in expansions
    """

    strength: float = 6.0
    radius: float = 1.0
    poles: int = DEFAULT_POLES

    @validator('strength', allow_reuse=True)
    def valid_strength(cls, v):
        if v < 0:
            raise ConfigurationError(f'`model.strength` must be non-negative, got `{v}`')
        return v

    @validator('radius', allow_reuse=True)
    def valid_radius(cls, v):
        if v <= 0:
            raise ConfigurationError(f'`model.radius` must be positive, got `{v}`')
        return v

    @validator('poles', allow_reuse=True)
    def valid_poles(cls, v):
        if v < 1:
            raise ConfigurationError(f'`model.poles` must be positive, got `{v}`')
        return v

    @property
    def params(self) -> ModelParams:
        return ModelParams(strength=self.strength, radius=self.radius, n_poles=self.poles)


@dataclass
class StateConfig:
    kind: StateKind = StateKind.factorized_symmetric
    alpha: int = 6
    beta: Optional[int] = None

    def __post_init_post_parse__(self) -> None:
        try:
            self.spec
        except InvalidStateError as e:
            raise ConfigurationError(f'`state`: {e.msg}') from e

    @property
    def spec(self) -> InitialStateSpec:
        return InitialStateSpec(kind=self.kind, alpha=self.alpha, beta=self.beta)


@dataclass
class GridConfig:
    """Time grid in units of the system lifetime τ₁

    :param t_min: First point of the log-spaced grid
    :param t_max: Last point of the log-spaced grid
    :param points: Number of log-spaced points
    :param times: Explicit grid, overrides the three above
    """

    t_min: float = 1e-3
    t_max: float = 1e3
    points: int = 400
    times: Optional[List[float]] = None

    def __post_init_post_parse__(self) -> None:
        try:
            self.grid
        except DomainError as e:
            raise ConfigurationError(f'`grid`: {e.msg}') from e

    @property
    def grid(self) -> TimeGrid:
        times = tuple(self.times) if self.times is not None else None
        return TimeGrid(t_min=self.t_min, t_max=self.t_max, points=self.points, times=times)


@dataclass
class FitWindowConfig:
    """Slope fit window in units of τ₁"""

    t_lo: float
    t_hi: float
    axis: SlopeAxis = SlopeAxis.semilog
    quantity: str = 'S'

    @validator('quantity', allow_reuse=True)
    def valid_quantity(cls, v):
        if v not in ('S', 'P'):
            raise ConfigurationError(f'Fit quantity must be `S` or `P`, got `{v}`')
        return v

    def __post_init_post_parse__(self) -> None:
        if not 0 < self.t_lo < self.t_hi:
            raise ConfigurationError(f'Invalid fit window {self.t_lo}..{self.t_hi}')


@dataclass
class TrackingConfig:
    """Fixed interior point where |Ψ| is sampled at long times"""

    r1: float = 0.5
    r2: float = 0.25
    t_min: float = 1e2
    t_max: float = 1e4
    points: int = 40


@dataclass
class ChecksConfig:
    """Invariant suites and their tolerances

    :param probability_slack: Allowed excess of S and P over 1, the truncation defect of the pole sums
    :param sum_rule_tolerance: Allowed |Re Σ C² - 1|
    :param crossover_tolerance: Relative deviation of the asymptotic from the exact wave function
    :param crossover_t_max: Crossover scan ends here, units of τ₁
    """

    ordering: bool = True
    sum_rule: bool = True
    crossover: bool = True
    probability_slack: float = 5e-3
    sum_rule_tolerance: float = 2e-3
    crossover_tolerance: float = 0.01
    crossover_t_max: float = 1000.0


@dataclass
class SentryConfig:
    dsn: str
    environment: Optional[str] = None
    debug: bool = False


@dataclass
class ScenarioConfig:
    """Scenario config

    :param name: Scenario name, also the output subdirectory
    :param model: δ-shell parameters
    :param state: Initial state
    :param grid: Time grid
    :param forms: Propagator forms to emit a decay series for
    :param variants: Purely exponential variants computed alongside
    :param switch_time: Exact-to-asymptotic switch of the `auto` form, units of τ₁
    :param fits: `auto` or explicit slope windows
    :param tracking: Fixed interior point followed to long times
    :param output: Output root, `RESDECAY_OUTPUT` or `output` when unset
    :param checks: Invariant suites
    :param sentry: Sentry integration config
    """

    name: str
    model: ModelConfig = field(default_factory=ModelConfig)
    state: StateConfig = field(default_factory=StateConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    forms: List[PropagatorForm] = field(default_factory=lambda: [PropagatorForm.auto])
    variants: List[ExponentialVariant] = field(default_factory=list)
    switch_time: float = 10.0
    fits: Union[str, List[FitWindowConfig]] = 'auto'
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    output: Optional[str] = None
    checks: ChecksConfig = field(default_factory=ChecksConfig)
    sentry: Optional[SentryConfig] = None

    def __post_init_post_parse__(self) -> None:
        self._filenames: List[str] = []
        self._environment: Dict[str, str] = {}

    @validator('fits', allow_reuse=True)
    def valid_fits(cls, v):
        if isinstance(v, str) and v != 'auto':
            raise ConfigurationError(f'`fits` must be `auto` or a list of windows, got `{v}`')
        return v

    @validator('forms', allow_reuse=True)
    def valid_forms(cls, v):
        if not v:
            raise ConfigurationError('`forms` must not be empty')
        return v

    @validator('switch_time', allow_reuse=True)
    def valid_switch_time(cls, v):
        if v <= 0:
            raise ConfigurationError(f'`switch_time` must be positive, got `{v}`')
        return v

    @property
    def output_path(self) -> str:
        return join(self.output or env.get(OUTPUT_ENV_VARIABLE) or 'output', self.name)

    def verify_output(self) -> None:
        """Output root must be a writable directory or creatable under one"""
        path = os.path.abspath(self.output_path)
        while not os.path.exists(path):
            parent = dirname(path)
            if parent == path:
                break
            path = parent
        if not os.path.isdir(path) or not os.access(path, os.W_OK | os.X_OK):
            raise ConfigurationError(f'Output directory `{self.output_path}` is not writable, `{path}` blocks it')

    @property
    def fit_windows(self) -> Tuple[FitWindowConfig, ...]:
        if isinstance(self.fits, str):
            return ()
        return tuple(self.fits)

    def with_overrides(self, **overrides: Any) -> 'ScenarioConfig':
        """Copy with `model`/`state` fields and `grid`/`output` replaced; `None` values are ignored"""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        model = {k: overrides.pop(k) for k in ('strength', 'radius', 'poles') if k in overrides}
        state = {k: overrides.pop(k) for k in ('kind', 'alpha', 'beta') if k in overrides}
        try:
            return replace(
                self,
                model=replace(self.model, **model),
                state=replace(self.state, **state),
                **overrides,
            )
        except ConfigurationError:
            raise
        except Exception as e:
            raise ConfigurationError(str(e)) from e

    @classmethod
    def load(
        cls,
        filenames: List[str],
    ) -> 'ScenarioConfig':

        current_workdir = os.path.join(os.getcwd())

        json_config: Dict[str, Any] = {}
        config_environment: Dict[str, str] = {}
        for filename in filenames:
            filename = os.path.join(current_workdir, filename)

            _logger.info('Loading config from %s', filename)
            try:
                with open(filename) as file:
                    raw_config = file.read()
            except OSError as e:
                raise ConfigurationError(f'Can\'t read config file `{filename}`: {e.strerror}') from e

            _logger.debug('Substituting environment variables')
            for match in re.finditer(ENV_VARIABLE_REGEX, raw_config):
                variable, default_value = match.group(1), match.group(2)
                config_environment[variable] = default_value
                value = env.get(variable)
                if not default_value and not value:
                    raise ConfigurationError(f'Environment variable `{variable}` is not set')
                placeholder = '${' + variable + ':-' + default_value + '}'
                raw_config = raw_config.replace(placeholder, value or default_value)

            try:
                loaded = YAML(typ='base').load(raw_config)
            except Exception as e:
                raise ConfigurationError(f'`{filename}` is not a valid YAML file: {e}') from e
            json_config = {
                **json_config,
                **(loaded or {}),
            }

        try:
            config = cls(**json_config)
            config._environment = config_environment
            config._filenames = filenames
            config.verify_output()
        except ConfigurationError:
            raise
        except Exception as e:
            raise ConfigurationError(str(e)) from e
        return config

    @classmethod
    def load_builtin(cls, name: str) -> 'ScenarioConfig':
        if name not in builtin_scenarios():
            raise ConfigurationError(f'Scenario `{name}` not found, available: {", ".join(builtin_scenarios())}')
        return cls.load([join(SCENARIOS_PATH, f'{name}.yml')])


def builtin_scenarios() -> List[str]:
    return sorted(f[:-4] for f in os.listdir(SCENARIOS_PATH) if f.endswith('.yml'))


def resolve_scenario(reference: str) -> ScenarioConfig:
    """Built-in scenario name or path to a YAML file"""
    if os.path.isfile(reference):
        return ScenarioConfig.load([reference])
    return ScenarioConfig.load_builtin(reference)


@dataclass
class LoggingConfig:
    config: Dict[str, Any]

    @classmethod
    def load(
        cls,
        filename: str,
    ) -> 'LoggingConfig':

        current_workdir = os.path.join(os.getcwd())
        filename = os.path.join(current_workdir, filename)

        with open(filename) as file:
            return cls(config=YAML().load(file.read()))

    def apply(self):
        logging.config.dictConfig(self.config)
