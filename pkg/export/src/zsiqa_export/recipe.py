"""Export recipes: what to export, from which weights, into which directory.

A recipe is a flat key/value file.  ``checkpoint`` may point at a local
file or directory to work offline; ``checkpoint_digest`` pins its sha256
so re-exports are reproducible byte-for-byte from the same weights.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from .errors import CheckpointError, ConfigError
from .kvfile import read_kv

RECIPE_KEYS = {
    "model_id",
    "output_dir",
    "tap_rule",
    "include_cls",
    "checkpoint",
    "checkpoint_digest",
    "name",
}

_BOOL = {"true": True, "1": True, "yes": True,
         "false": False, "0": False, "no": False}


@dataclass
class ExportRecipe:
    model_id: str
    output_dir: Path
    tap_rule: str | None = None  # default: the model's own rule
    include_cls: bool = False
    checkpoint: str | None = None  # override the published reference
    checkpoint_digest: str | None = None  # sha256 pin, needs a local checkpoint
    name: str | None = None  # spec/graph base name; default model_id

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if not self.model_id:
            raise ConfigError("recipe needs a model_id")
        if self.checkpoint_digest and not self.checkpoint:
            raise ConfigError("checkpoint_digest needs an explicit local checkpoint")

    @property
    def base_name(self) -> str:
        return self.name if self.name else self.model_id


def _parse_bool(value: str, key: str) -> bool:
    try:
        return _BOOL[value.strip().lower()]
    except KeyError:
        raise ConfigError(f"{key} must be a boolean, got {value!r}") from None


def load_recipe(path) -> ExportRecipe:
    """Parse a recipe file; relative paths resolve against the file's directory."""
    path = Path(path)
    kv = read_kv(path)
    unknown = set(kv) - RECIPE_KEYS
    if unknown:
        raise ConfigError(f"recipe {path} has unknown keys: {', '.join(sorted(unknown))}")
    missing = [k for k in ("model_id", "output_dir") if k not in kv]
    if missing:
        raise ConfigError(f"recipe {path} is missing keys: {', '.join(missing)}")

    base = path.parent
    output_dir = base / kv["output_dir"]
    checkpoint = kv.get("checkpoint")
    if checkpoint is not None:
        candidate = base / checkpoint
        if candidate.exists():  # local override; otherwise a hub reference
            checkpoint = str(candidate)
    include_cls = _parse_bool(kv["include_cls"], "include_cls") if "include_cls" in kv else False
    return ExportRecipe(
        model_id=kv["model_id"],
        output_dir=output_dir,
        tap_rule=kv.get("tap_rule"),
        include_cls=include_cls,
        checkpoint=checkpoint,
        checkpoint_digest=kv.get("checkpoint_digest"),
        name=kv.get("name"),
    )


def checkpoint_digest(path) -> str:
    """sha256 of a checkpoint file, or of a directory's files in sorted order."""
    p = Path(path)
    h = hashlib.sha256()
    if p.is_dir():
        for f in sorted(p.rglob("*")):
            if f.is_file():
                h.update(f.relative_to(p).as_posix().encode())
                h.update(f.read_bytes())
    elif p.is_file():
        h.update(p.read_bytes())
    else:
        raise CheckpointError(f"checkpoint path not found: {p}")
    return h.hexdigest()


def verify_digest(recipe: ExportRecipe):
    """Check the recipe's digest pin against the local checkpoint, if pinned."""
    if not recipe.checkpoint_digest:
        return
    actual = checkpoint_digest(recipe.checkpoint)
    if actual != recipe.checkpoint_digest.lower():
        raise CheckpointError(
            f"checkpoint digest mismatch for {recipe.checkpoint}: "
            f"recipe pins {recipe.checkpoint_digest}, found {actual}"
        )
