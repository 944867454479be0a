"""Shared utility functions for mate_reid."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Hashable

import numpy as np

from mate_reid.errors import ConfigError

# Every seeded draw in the repo comes from PCG64 streams derived from
# SeedSequence(entropy=seed, spawn_key=key). Stream keys are stable names,
# so the draws of one stream never depend on how many others were used.
PRNG_ALGORITHM = "PCG64"


def get_logger(name: str) -> logging.Logger:
    """Get a logger for the given name.

    Args:
        name: Logger name (typically __name__)

    Returns:
        A configured logger instance
    """
    return logging.getLogger(name)


def _key_part(part: Hashable) -> int:
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream key parts must be non-negative, got {part}")
        return int(part)
    # Strings are folded into a stable 32-bit value (hash() is salted per process).
    value = 2166136261
    for byte in str(part).encode("utf-8"):
        value = ((value ^ byte) * 16777619) & 0xFFFFFFFF
    return value


def rng_stream(seed: int, *key: Hashable) -> np.random.Generator:
    """Return an independent generator for the named stream under ``seed``."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key_part(k) for k in key))
    return np.random.Generator(np.random.PCG64(sequence))


def read_json(path: str | Path) -> dict[str, Any]:
    """Read a JSON object from disk, raising ConfigError with the path on failure."""
    try:
        with Path(path).open("r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object at top level")
    return data


def write_json(path: str | Path, payload: Any) -> Path:
    """Write ``payload`` as indented JSON, creating parent directories."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return target
