"""Flat key/value text files.

Backbone specs, run configs, and export recipes all share one trivial
format: one ``key = value`` pair per line, ``#`` comments, blank lines
ignored.  Values are kept as strings; callers convert.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ParseError


def parse_kv(text: str) -> dict[str, str]:
    """Parse key/value lines, rejecting malformed lines and duplicate keys."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError("empty key", line=lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", line=lineno)
        out[key] = value
    return out


def read_kv(path) -> dict[str, str]:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def format_kv(items) -> str:
    """Render pairs (a dict or an iterable of 2-tuples) as config text."""
    if hasattr(items, "items"):
        items = items.items()
    return "".join(f"{key} = {value}\n" for key, value in items)


def write_kv(path, items) -> Path:
    path = Path(path)
    path.write_text(format_kv(items), encoding="utf-8")
    return path
