"""Flat ``key = value`` text files: recipes in, backbone specs out.

One pair per line, ``#`` comments, blank lines ignored.  The same shape
the scoring side parses, so exported specs stay hand-editable and
diffable.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_kv(path) -> dict[str, str]:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def write_kv(path, items) -> Path:
    path = Path(path)
    path.write_text("".join(f"{k} = {v}\n" for k, v in items), encoding="utf-8")
    return path
