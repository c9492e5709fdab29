"""
Configuration-file loading and logging setup.

Config files are dotenv-style documents (``LEARNING_RATE=0.01``), one key per
line, keys being the upper-cased dataclass field names. They are parsed with
python-dotenv without variable interpolation, so the process environment is
never read.
"""

import dataclasses
import logging
import os
from typing import Any, Dict, Mapping, Optional, Type, TypeVar, Union, get_args, get_origin

from dotenv import dotenv_values

from app.core.errors import ConfigError

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)

T = TypeVar('T')

_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off'}


def configure_logging(level: int = logging.INFO) -> None:
    """Route log records to the error stream so stdout stays machine-parseable."""
    logging.basicConfig(format=LOG_FORMAT, level=level, force=True)


def load_config_file(path: Optional[str]) -> Dict[str, str]:
    """
    Read a dotenv-style config file into a dict keyed by lower-case field name.

    Returns:
        Empty dict when no path is given.

    Examples:
        - LEARNING_RATE=0.05  ->  {'learning_rate': '0.05'}
        - EPOCHS=300          ->  {'epochs': '300'}
    """
    if not path:
        return {}
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")

    raw = dotenv_values(path, interpolate=False)
    values = {}
    for key, value in raw.items():
        if value is None:
            raise ConfigError(f"config key {key} has no value in {path}")
        values[key.strip().lower()] = value.strip()

    logger.debug(f"[CONFIG] loaded {len(values)} keys from {path}")
    return values


def coerce_value(name: str, text: str, kind: Any) -> Any:
    if get_origin(kind) is Union:
        # Optional[X]: an empty value or 'none' means "not set"
        if text == '' or text.lower() == 'none':
            return None
        kind = next(arg for arg in get_args(kind) if arg is not type(None))
    if kind in (bool, 'bool'):
        lowered = text.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"{name}: expected a boolean, got {text!r}")
    try:
        if kind in (int, 'int'):
            return int(text)
        if kind in (float, 'float'):
            return float(text)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r} as {getattr(kind, '__name__', kind)}")
    return text


def build_config(cls: Type[T], file_values: Mapping[str, str], overrides: Mapping[str, Any]) -> T:
    """
    Build a config dataclass with precedence defaults < file values < overrides.

    Overrides whose value is None are treated as "not given".
    """
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(file_values) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config keys for {cls.__name__}: {', '.join(sorted(unknown))}")

    kwargs = {}
    for name, text in file_values.items():
        kwargs[name] = coerce_value(name, text, fields[name].type)
    for name, value in overrides.items():
        if name in fields and value is not None:
            kwargs[name] = value
    return cls(**kwargs)


def split_config(file_values: Mapping[str, str], cls: Type[Any]) -> Dict[str, str]:
    """Return the subset of file values that belong to ``cls``."""
    names = {f.name for f in dataclasses.fields(cls)}
    return {k: v for k, v in file_values.items() if k in names}
