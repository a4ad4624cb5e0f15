import logging
from logging import Logger
from os import makedirs
from os.path import dirname, exists
from typing import Callable, Iterable, List, Optional, Sequence

_logger = logging.getLogger('resdecay.utils')

# NOTE: repr of a float with 17 significant digits round-trips exactly
FLOAT_FORMAT = '{:.17g}'


class FormattedLogger(Logger):
    """Logger wrapper with additional formatting"""

    def __init__(self, name: str, fmt: Optional[str] = None) -> None:
        self.logger = logging.getLogger(name)
        self.fmt = fmt

    def __getattr__(self, name: str) -> Callable:
        if name == '_log':
            return self._log
        return getattr(self.logger, name)

    def _log(self, level, msg, args, exc_info=None, extra=None, stack_info=False, stacklevel=1):
        if self.fmt:
            msg = self.fmt.format(msg)
        self.logger._log(level, msg, args, exc_info, extra, stack_info, stacklevel)


def mkdir_p(path: str) -> None:
    """Create directory tree, ignore if already exists"""
    if path and not exists(path):
        _logger.info('Creating directory `%s`', path)
        makedirs(path)


def write(path: str, content: str, overwrite: bool = False) -> bool:
    """Write content to file, create directory tree if necessary"""
    mkdir_p(dirname(path))
    if exists(path) and not overwrite:
        return False
    _logger.info('Writing into file `%s`', path)
    with open(path, 'w') as file:
        file.write(content)
    return True


def format_value(value) -> str:
    """Fixed formatting for CSV cells: floats with 17 significant digits, everything else with `str`"""
    if isinstance(value, float):
        return FLOAT_FORMAT.format(value)
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence], meta: Optional[dict] = None) -> str:
    """Render rows as CSV with `#`-prefixed metadata lines; output is byte-identical for identical input"""
    lines: List[str] = []
    for key, value in (meta or {}).items():
        lines.append(f'# {key}: {value}')
    lines.append(','.join(header))
    for row in rows:
        lines.append(','.join(format_value(v) for v in row))
    return '\n'.join(lines) + '\n'
