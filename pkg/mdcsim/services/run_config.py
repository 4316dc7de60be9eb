from __future__ import annotations

import tomllib
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Optional

from pydantic import ValidationError

from mdcsim.core.exceptions import ConfigError
from mdcsim.schemas.run_config import RunConfig
from mdcsim.services.common import BaseDocumentService


def _read_toml(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        return tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e


def load_run_config(path: Optional[Path | str] = None, **overrides: Any) -> RunConfig:
    """TOML file (optional) plus flag overrides; None-valued overrides are ignored.

    A relative map path is resolved against the config file's directory.
    """
    raw: Dict[str, Any] = {}
    source = "<defaults>"
    if path is not None:
        path = Path(path)
        source = str(path)
        raw = _read_toml(path)
        map_path = raw.get("map", {}).get("path") if isinstance(raw.get("map"), dict) else None
        if map_path is not None and not Path(map_path).is_absolute():
            raw["map"]["path"] = str((path.parent / map_path).resolve())

    raw.update({key: value for key, value in overrides.items() if value is not None})
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"{source}: {BaseDocumentService.describe_validation_error(e)}") from e

    if config.map.path is not None and not Path(config.map.path).exists():
        raise ConfigError(f"{source}: map.path {config.map.path} does not exist")
    return config


def config_echo(config: RunConfig) -> Dict[str, Any]:
    # jobs only changes wall-clock time, never the artifacts
    return config.model_dump(mode="json", exclude={"jobs"})
