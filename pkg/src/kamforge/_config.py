import json
import math
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from ._divisors import DiophantineParams
from ._errors import ConfigError
from .testbed import CATALOG, ModelKind

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ScheduleConfig:
    """Schedule parameters; ``m`` defaults to the model's dimension."""

    rho: float = 0.5
    eta: float = 2.0
    m: int | None = None
    h0: float = 1.0
    s0: float = 0.05
    kcap: int = 256
    log_base: float = math.e


@dataclass(frozen=True)
class Tolerances:
    tol: float = 1e-12
    freq_tol: float = 1e-10
    guard: float = 1e-8


@dataclass(frozen=True)
class RunConfig:
    """
    One engine run.

    Parameters
    ----------
    model : str
        Name of a twist or parameter entry of the catalog.
    epsilon : float | None, optional
        Perturbation size, by default the entry's.
    target : float | list[float] | None, optional
        The prescribed frequency p or q, by default the entry's.
    box : tuple[list[float], list[float]] | None, optional
        Lower and upper corners of E or Lambda, by default the entry's.
    schedule : ScheduleConfig, optional
        Schedule parameters.
    tolerances : Tolerances, optional
        Stopping and guard tolerances.
    diophantine : DiophantineParams, optional
        Constants of the up-front Diophantine check.
    max_steps : int, optional
        Step budget, by default 40.
    translate : bool, optional
        ``False`` disables the translation step, by default True.
    seed : int, optional
        Seed of every random draw of the run, by default 0.
    out : str | None, optional
        Output directory, overridden by ``--out``.

    """

    model: str
    epsilon: float | None = None
    target: float | list[float] | None = None
    box: tuple[list[float], list[float]] | None = None
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    diophantine: DiophantineParams = field(default_factory=DiophantineParams)
    max_steps: int = 40
    translate: bool = True
    seed: int = 0
    out: str | None = None
    schema_version: int = SCHEMA_VERSION

    def to_record(self) -> dict[str, Any]:
        record = asdict(self)
        if self.box is not None:
            record["box"] = [list(self.box[0]), list(self.box[1])]
        return record

    def with_overrides(self, **changes: Any) -> "RunConfig":
        """Copy with top-level fields or dotted ``section.field`` keys replaced."""
        top: dict[str, Any] = {}
        nested: dict[str, dict[str, Any]] = {}
        for key, value in changes.items():
            section, _, name = key.partition(".")
            if name:
                nested.setdefault(section, {})[name] = value
            else:
                top[key] = value
        for section, values in nested.items():
            top[section] = replace(getattr(self, section), **values)
        config = replace(self, **top)
        _validate(config)
        return config


_SECTIONS: dict[str, type] = {
    "schedule": ScheduleConfig,
    "tolerances": Tolerances,
    "diophantine": DiophantineParams,
}


def _section(name: str, cls: type, value: Any) -> Any:
    if not isinstance(value, Mapping):
        raise ConfigError(f"field {name!r}: expected an object.")
    known = {f.name for f in fields(cls)}
    for key in value:
        if key not in known:
            raise ConfigError(f"field '{name}.{key}': unknown key.")
    try:
        return cls(**value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"field {name!r}: {e}") from e


def _positive(name: str, value: float | None) -> None:
    if value is not None and not (isinstance(value, int | float) and value > 0):
        raise ConfigError(f"field {name!r}: must be positive, got {value!r}.")


def _validate(config: RunConfig) -> None:
    if config.schema_version != SCHEMA_VERSION:
        raise ConfigError(
            f"field 'schema_version': unsupported version {config.schema_version!r}."
        )
    entry = CATALOG.get(config.model)
    if entry is None or entry.kind == ModelKind.FREQUENCY:
        runnable = sorted(k for k, e in CATALOG.items() if e.kind != ModelKind.FREQUENCY)
        raise ConfigError(f"field 'model': {config.model!r} is not one of {runnable}.")
    if config.epsilon is not None and not 0 <= config.epsilon < 1:
        raise ConfigError(f"field 'epsilon': must lie in [0, 1), got {config.epsilon!r}.")
    for key in ("tol", "freq_tol", "guard"):
        _positive(f"tolerances.{key}", getattr(config.tolerances, key))
    for key in ("h0", "s0", "kcap"):
        _positive(f"schedule.{key}", getattr(config.schedule, key))
    if not 0 < config.schedule.rho < 1:
        raise ConfigError(f"field 'schedule.rho': must lie in (0, 1), got {config.schedule.rho!r}.")
    if config.max_steps < 0:
        raise ConfigError(f"field 'max_steps': must be non-negative, got {config.max_steps!r}.")
    if config.box is not None and len(config.box) != 2:
        raise ConfigError("field 'box': expected [lower, upper].")


def parse_config(data: Mapping[str, Any]) -> RunConfig:
    """
    Validate a decoded configuration document.

    Raises
    ------
    ConfigError
        Naming the offending field.

    """
    if "schema_version" not in data:
        raise ConfigError("field 'schema_version': missing.")
    if "model" not in data:
        raise ConfigError("field 'model': missing.")
    known = {f.name for f in fields(RunConfig)}
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"field {key!r}: unknown key.")
        if key in _SECTIONS:
            kwargs[key] = _section(key, _SECTIONS[key], value)
        elif key == "box" and value is not None:
            kwargs[key] = (list(value[0]), list(value[1])) if len(value) == 2 else value
        else:
            kwargs[key] = value
    config = RunConfig(**kwargs)
    _validate(config)
    return config


def load_config(path: str | Path) -> RunConfig:
    """
    Load a JSON run configuration.

    Parameters
    ----------
    path : str | Path
        The document.

    Returns
    -------
    RunConfig
        The validated configuration.

    Raises
    ------
    ConfigError
        With the line and column of a syntax error or the name of an
        invalid field.

    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(data, Mapping):
        raise ConfigError("line 1 column 1: expected a JSON object.")
    return parse_config(data)
