"""Run configuration: INI sections mapped onto dataclasses.

Each section corresponds to one settings dataclass. Keys that are not
fields of that dataclass are rejected, values are coerced from the field's
declared type, and every run writes the fully resolved configuration next
to its outputs so it can be replayed.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from src.bonet.experiment import BonetExperimentConfig, BonetExperimentError
from src.bonet.losses import LossConfigError
from src.faset.experiment import ExperimentConfigError, FasetExperimentConfig
from src.gan import CriticError, GanDemoConfig
from src.synthesis import SynthConfig, SynthesisError

logger = logging.getLogger(__name__)

SNAPSHOT_NAME = "config.resolved.ini"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class ConfigError(Exception):
    """Raised for unreadable, unknown or invalid configuration values."""

    pass


@dataclass
class RunSettings:
    out: str = "runs"
    jobs: int = 1
    log_level: str = "INFO"

    def validate(self) -> None:
        errors = []
        if self.jobs < 1:
            errors.append(f"jobs must be at least 1, got {self.jobs}")
        if self.log_level.upper() not in LOG_LEVELS:
            errors.append(
                f"log_level must be one of {LOG_LEVELS}, got {self.log_level!r}"
            )
        if errors:
            raise ConfigError("; ".join(errors))


@dataclass
class LabConfig:
    run: RunSettings = field(default_factory=RunSettings)
    synth: SynthConfig = field(default_factory=SynthConfig)
    faset: FasetExperimentConfig = field(default_factory=FasetExperimentConfig)
    bonet: BonetExperimentConfig = field(default_factory=BonetExperimentConfig)
    gan: GanDemoConfig = field(default_factory=GanDemoConfig)

    def sections(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    def validate(self) -> None:
        """Validate every section, reporting all problems in one ConfigError."""
        errors = []
        for name, section in self.sections().items():
            try:
                section.validate()
            except (
                ConfigError,
                SynthesisError,
                ExperimentConfigError,
                BonetExperimentError,
                LossConfigError,
                CriticError,
            ) as e:
                errors.append(f"[{name}] {e}")
        if errors:
            raise ConfigError("; ".join(errors))


def _coerce(raw: str, type_name: str, key: str) -> Any:
    text = raw.strip()
    try:
        if type_name == "bool":
            lowered = text.lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if type_name == "int":
            return int(text)
        if type_name == "float":
            return float(text)
        if type_name == "str":
            return text
        if type_name.startswith("tuple[int"):
            return tuple(int(part) for part in text.split(",") if part.strip())
        if type_name.startswith("tuple[str"):
            return tuple(part.strip() for part in text.split(",") if part.strip())
    except ValueError as e:
        raise ConfigError(f"{key}: cannot read {text!r} as {type_name}") from e
    raise ConfigError(f"{key}: unsupported field type {type_name}")


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _apply(
    config: LabConfig, section: str, key: str, raw: str, errors: list[str]
) -> None:
    sections = config.sections()
    if section not in sections:
        errors.append(f"unknown section [{section}]")
        return
    target = sections[section]
    types = {f.name: str(f.type) for f in dataclasses.fields(target) if f.init}
    if key not in types:
        errors.append(f"unknown key {section}.{key}")
        return
    try:
        setattr(target, key, _coerce(raw, types[key], f"{section}.{key}"))
    except ConfigError as e:
        errors.append(str(e))


def parse_override(text: str) -> tuple[str, str, str]:
    """Split ``section.key=value``."""
    if "=" not in text:
        raise ConfigError(f"override must look like section.key=value, got {text!r}")
    name, value = text.split("=", 1)
    if "." not in name:
        raise ConfigError(f"override key must be section.key, got {name!r}")
    section, key = name.strip().split(".", 1)
    return section, key.strip(), value


def load_config(path: Path | None = None, overrides: Iterable[str] = ()) -> LabConfig:
    """Read an INI file (optional), apply overrides and validate.

    Raises:
        ConfigError: For a missing file, unknown sections or keys, bad values
            or failed validation
    """
    overrides = list(overrides)
    config = LabConfig()
    errors: list[str] = []
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # type: ignore[assignment]
        try:
            with open(path, encoding="utf-8") as handle:
                parser.read_file(handle)
        except (OSError, configparser.Error) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        for section in parser.sections():
            for key, raw in parser.items(section):
                _apply(config, section, key, raw, errors)
    for text in overrides:
        section, key, raw = parse_override(text)
        _apply(config, section, key, raw, errors)
    if errors:
        raise ConfigError("; ".join(errors))
    config.validate()
    logger.debug(
        f"Loaded config from {path or 'defaults'} with {len(overrides)} overrides"
    )
    return config


def to_ini(config: LabConfig) -> str:
    """Serialize every field of every section in declaration order."""
    buffer = io.StringIO()
    for name, section in config.sections().items():
        buffer.write(f"[{name}]\n")
        for f in dataclasses.fields(section):
            if f.init:
                buffer.write(f"{f.name} = {_format(getattr(section, f.name))}\n")
        buffer.write("\n")
    return buffer.getvalue()
