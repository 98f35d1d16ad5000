"""Service configuration: one JSON file plus HANDBOOK_* environment
overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigInvalid


@dataclass
class Config:
    listen: str = "127.0.0.1"
    port: int = 8080
    data_dir: str = "./data"
    session_ttl: float = 3600.0
    admin_login: str = "admin"
    admin_credential: str | None = None
    ui_dir: str | None = None

    @property
    def journal_path(self) -> Path:
        return Path(self.data_dir) / "journal.jsonl"

    @property
    def credentials_path(self) -> Path:
        return Path(self.data_dir) / "credentials.json"


_ENV_PREFIX = "HANDBOOK_"

_COERCERS = {
    "port": int,
    "session_ttl": float,
}


def load_config(path: str | Path | None = None) -> Config:
    values: dict = {}
    if path is not None:
        try:
            raw = Path(path).read_text("utf-8")
        except OSError as exc:
            raise ConfigInvalid(f"cannot read config file {path}: {exc}")
        try:
            values = json.loads(raw)
        except ValueError as exc:
            raise ConfigInvalid(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(values, dict):
            raise ConfigInvalid(f"config file {path} must hold a JSON object")

    known = {f.name for f in fields(Config)}
    for key in values:
        if key not in known:
            raise ConfigInvalid(f"unknown config key {key!r}")

    for name in known:
        env = os.environ.get(_ENV_PREFIX + name.upper())
        if env is not None:
            values[name] = env

    for name, coerce in _COERCERS.items():
        if name in values and not isinstance(values[name], (int, float)):
            try:
                values[name] = coerce(values[name])
            except (TypeError, ValueError):
                raise ConfigInvalid(f"config key {name!r}: expected a number, got {values[name]!r}")

    for name in ("listen", "data_dir", "admin_login"):
        if name in values and (not isinstance(values[name], str) or not values[name]):
            raise ConfigInvalid(f"config key {name!r}: expected a non-empty string")

    return Config(**values)
