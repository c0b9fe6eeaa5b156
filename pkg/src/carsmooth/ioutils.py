"""Deterministic result files.

Every CSV this package writes starts with a comment line carrying the sha256
of the generating configuration and the master seed, so a rerun can be checked
byte-for-byte.  Floats are written with repr-style shortest round-trip text.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Iterable, Mapping


def config_sha256(config: Mapping[str, Any]) -> str:
    """Stable hash of a JSON-serializable configuration mapping."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(
    path: str | os.PathLike,
    fieldnames: list[str],
    rows: Iterable[Mapping[str, Any]],
    config: Mapping[str, Any],
    seed: int,
    force: bool = False,
) -> None:
    """Write rows with a provenance header; refuse to clobber unless force."""
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists (pass force/--force to overwrite)")
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_sha256={config_sha256(config)} seed={seed}", ",".join(fieldnames)]
    for row in rows:
        lines.append(",".join(_fmt(row[name]) for name in fieldnames))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path: str | os.PathLike) -> tuple[dict, list[dict]]:
    """Read a provenance-stamped CSV back into (header-meta, rows of strings)."""
    text = Path(path).read_text().splitlines()
    meta = {}
    if text and text[0].startswith("#"):
        for token in text[0][1:].split():
            if "=" in token:
                k, v = token.split("=", 1)
                meta[k] = v
        text = text[1:]
    fieldnames = text[0].split(",")
    rows = [dict(zip(fieldnames, line.split(","))) for line in text[1:] if line]
    return meta, rows
