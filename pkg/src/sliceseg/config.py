"""Engine and service configuration, resolved from env vars and overrides.

Every key has an ``SLICESEG_*`` environment variable and a matching CLI
flag; explicit overrides win over the environment, which wins over
defaults.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .predictor.cache import DEFAULT_BUDGET

DEFAULT_UPLOAD_LIMIT = 2 * 1024 ** 3


def _env(name: str, cast, default):
    raw = os.environ.get(f"SLICESEG_{name}")
    if raw is None:
        return default
    return cast(raw)


@dataclass
class EngineConfig:
    data_root: Path = field(default_factory=lambda: Path("sliceseg-data"))
    cache_root: Path | None = None
    cache_budget: int = DEFAULT_BUDGET
    bridge_command: str | None = None
    tolerance_fraction: float = 0.1
    max_region_fraction: float = 1.0
    upload_limit: int = DEFAULT_UPLOAD_LIMIT

    def __post_init__(self):
        self.data_root = Path(self.data_root)
        if self.cache_root is None:
            self.cache_root = self.data_root / "cache"
        self.cache_root = Path(self.cache_root)

    @classmethod
    def from_env(cls, **overrides) -> "EngineConfig":
        values = {
            "data_root": _env("DATA_ROOT", Path, Path("sliceseg-data")),
            "cache_root": _env("CACHE_ROOT", Path, None),
            "cache_budget": _env("CACHE_BUDGET", int, DEFAULT_BUDGET),
            "bridge_command": _env("BRIDGE_COMMAND", str, None),
            "tolerance_fraction": _env("TOLERANCE_FRACTION", float, 0.1),
            "max_region_fraction": _env("MAX_REGION_FRACTION", float, 1.0),
            "upload_limit": _env("UPLOAD_LIMIT", int, DEFAULT_UPLOAD_LIMIT),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class ServiceConfig(EngineConfig):
    host: str = "127.0.0.1"
    port: int = 8000
    ui_root: Path | None = None

    @classmethod
    def from_env(cls, **overrides) -> "ServiceConfig":
        values = {
            "data_root": _env("DATA_ROOT", Path, Path("sliceseg-data")),
            "cache_root": _env("CACHE_ROOT", Path, None),
            "cache_budget": _env("CACHE_BUDGET", int, DEFAULT_BUDGET),
            "bridge_command": _env("BRIDGE_COMMAND", str, None),
            "tolerance_fraction": _env("TOLERANCE_FRACTION", float, 0.1),
            "max_region_fraction": _env("MAX_REGION_FRACTION", float, 1.0),
            "upload_limit": _env("UPLOAD_LIMIT", int, DEFAULT_UPLOAD_LIMIT),
            "host": _env("HOST", str, "127.0.0.1"),
            "port": _env("PORT", int, 8000),
            "ui_root": _env("UI_ROOT", Path, None),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)
