"""Operator configuration: file, environment, then flag overrides.

Precedence (lowest to highest): built-in defaults, config file values,
``TXCAP_*`` environment variables, command-line flags. Unknown file keys
are rejected outright.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import DomainError

ENV_PREFIX = "TXCAP_"


@dataclass
class Config:
    scenario: Optional[str] = None   # network scenario JSON; default ships in-package
    genesis: Optional[str] = None    # standalone genesis JSON (overrides scenario's)
    host: str = "127.0.0.1"
    port: int = 8440
    ttl_blocks: int = 64
    txsea_mode: str = "sender-aware"  # or "strict-52"
    preload_cases: bool = True
    ui_dir: Optional[str] = None

    @classmethod
    def field_names(cls) -> set[str]:
        return {f.name for f in fields(cls)}


def _coerce(name: str, raw: str):
    if name == "port" or name == "ttl_blocks":
        return int(raw)
    if name == "preload_cases":
        return raw.lower() in ("1", "true", "yes", "on")
    return raw


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> Config:
    cfg = Config()
    if path:
        doc = json.loads(Path(path).read_text())
        unknown = set(doc) - Config.field_names()
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        for key, value in doc.items():
            setattr(cfg, key, value)
    for name in Config.field_names():
        raw = os.environ.get(ENV_PREFIX + name.upper())
        if raw is not None:
            setattr(cfg, name, _coerce(name, raw))
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(cfg, key, value)
    if cfg.txsea_mode not in ("sender-aware", "strict-52"):
        raise DomainError(f"txsea_mode must be sender-aware or strict-52, "
                          f"got {cfg.txsea_mode!r}")
    return cfg
