import textwrap
import traceback
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

import sentry_sdk
from tabulate import tabulate

_tab = '\n\n' + ('_' * 80) + '\n\n'


def unindent(text: str) -> str:
    """Remove indentation from text"""
    return textwrap.dedent(text).strip()


def indent(text: str, indent: int = 2) -> str:
    """Add indentation to text"""
    return textwrap.indent(text, ' ' * indent)


@dataclass(frozen=True, repr=False)
class ResDecayError(Exception):
    """Unknown resdecay error"""

    def __repr__(self) -> str:
        return f'{self.__class__.__name__}: {self.__doc__}'

    def _help(self) -> str:
        return """
            Unexpected error occurred!

            Please file a bug report and attach the following:

              * scenario YAML config
              * reasonable amount of logs before the crash
        """

    def help(self) -> str:
        return unindent(self._help())

    def format(self) -> str:
        exc = f'\n\n{traceback.format_exc()}'.rstrip()
        return _tab.join([exc, self.help() + '\n'])

    @contextmanager
    def wrap(ctx: Optional[Any] = None) -> Iterator[None]:
        try:
            yield
        except ResDecayError:
            raise
        except Exception as e:
            sentry_sdk.capture_exception(e)
            raise ResDecayError from e


@dataclass(frozen=True, repr=False)
class ConfigurationError(ResDecayError):
    """Scenario YAML config is invalid"""

    msg: str

    def _help(self) -> str:
        return f"""
            {self.msg}

            Run `resdecay list` to see builtin scenarios and `resdecay validate <path>` to dry-run a config.
        """


@dataclass(frozen=True, repr=False)
class DomainError(ResDecayError):
    """Argument is outside of the domain of a function"""

    msg: str

    def _help(self) -> str:
        return f"""
            {self.msg}
        """


@dataclass(frozen=True, repr=False)
class SolverError(ResDecayError):
    """Complex pole search failed"""

    msg: str
    seed: Optional[complex] = None

    def _help(self) -> str:
        seed = f'\n\n            Seed: {self.seed}' if self.seed is not None else ''
        return f"""
            {self.msg}{seed}

            Try a smaller number of poles or a different potential strength.
        """


@dataclass(frozen=True, repr=False)
class DegenerateStateError(ResDecayError):
    """Resonant state can't be normalized"""

    index: int
    kappa: complex

    def _help(self) -> str:
        return f"""
            Normalization denominator of resonant state `{self.index}` vanishes.

              kappa: {self.kappa}
        """


@dataclass(frozen=True, repr=False)
class PoleProximityError(ResDecayError):
    """Outgoing Green's function evaluated at a pole"""

    k: complex
    denominator: complex

    def _help(self) -> str:
        return f"""
            Green's function denominator is too close to zero.

              k: {self.k}
              denominator: {self.denominator}
        """


@dataclass(frozen=True, repr=False)
class RepresentationError(ResDecayError):
    """Requested propagator representation is not valid for the pole table"""

    msg: str

    def _help(self) -> str:
        return f"""
            {self.msg}
        """


@dataclass(frozen=True, repr=False)
class InvalidStateError(ResDecayError):
    """Initial state specification is invalid"""

    msg: str

    def _help(self) -> str:
        return f"""
            {self.msg}
        """


@dataclass(frozen=True, repr=False)
class FitError(ResDecayError):
    """Slope fit can't be performed on the requested window"""

    msg: str
    window: Tuple[float, float]

    def _help(self) -> str:
        return f"""
            {self.msg}

              window: {self.window[0]:.6g} .. {self.window[1]:.6g}
        """


@dataclass(frozen=True, repr=False)
class DataIntegrityError(ResDecayError):
    """Computed decay series violates an invariant"""

    msg: str
    row: Dict[str, Any] = field(default_factory=dict)

    def _help(self) -> str:
        row_table = indent(tabulate(list(self.row.items()), tablefmt='plain'))
        return f"""
            {self.msg}

            Offending row:

            {row_table}
        """


@dataclass(frozen=True, repr=False)
class OracleAccuracyError(ResDecayError):
    """Reference oracle failed to reach its accuracy target"""

    oracle: str
    estimate: float
    target: float

    def _help(self) -> str:
        return f"""
            Oracle `{self.oracle}` error estimate {self.estimate:.3e} exceeds target {self.target:.3e}.
        """


@dataclass(frozen=True, repr=False)
class InstabilityError(ResDecayError):
    """Grid time stepping lost unitarity"""

    step: int
    drift: float

    def _help(self) -> str:
        return f"""
            Norm drift {self.drift:.3e} at step {self.step} exceeds the tolerance.

            Decrease the time step or refine the spatial grid.
        """


@dataclass(frozen=True, repr=False)
class InvariantsFailedError(ResDecayError):
    """One or more invariant suites failed"""

    failed: List[Tuple[str, str]]

    def _help(self) -> str:
        table = indent(tabulate(self.failed, headers=['suite', 'detail']))
        return f"""
            Invariant suites failed:

            {table}
        """
