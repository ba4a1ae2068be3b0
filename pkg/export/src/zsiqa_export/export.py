"""Trace a wrapped tower into a portable graph and emit its spec file.

The graph is a TorchScript archive whose forward maps a normalized
(1, 3, 224, 224) batch to a dict of named tensors; the spec file records
geometry, normalization, and tap names in the flat key/value form the
scoring side parses.  Every export ends with a parity check: a fixed
probe image must produce the same activations from the source model and
the saved graph, else the emitted files are removed and the export
fails.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .errors import ConfigError, ExportError
from .kvfile import write_kv
from .models import (
    EMBEDDING_TAP,
    TAP_PER_BLOCK,
    TAP_PER_STAGE,
    LoadedModel,
    model_entry,
)
from .recipe import ExportRecipe, verify_digest

INPUT_SIZE = 224
TILE_STRIDE = 200
PARITY_TOLERANCE = 1e-4
GRAPH_FORMAT = "torchscript-2"


@dataclass
class ExportResult:
    spec_path: Path
    graph_path: Path
    tap_points: tuple
    parity: float  # max abs activation diff, source vs saved graph


def probe_image(size: int = INPUT_SIZE) -> np.ndarray:
    """Deterministic RGB ramp-plus-checker pattern, float32 (3, size, size) in [0, 1]."""
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    r = xx / (size - 1)
    g = yy / (size - 1)
    b = ((xx // 16 + yy // 16) % 2).astype(np.float64)
    return np.stack([r, g, b]).astype(np.float32)


def _normalized_probe(mean, std) -> torch.Tensor:
    img = probe_image()
    mean = np.asarray(mean, dtype=np.float32).reshape(3, 1, 1)
    std = np.asarray(std, dtype=np.float32).reshape(3, 1, 1)
    return torch.from_numpy((img - mean) / std).unsqueeze(0)


def _trace(module: torch.nn.Module, model_id: str) -> torch.jit.ScriptModule:
    example = torch.zeros(1, 3, INPUT_SIZE, INPUT_SIZE)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # tracer warns about size checks baked in
            with torch.no_grad():
                return torch.jit.trace(module, example, strict=False)
    except Exception as exc:
        raise ExportError(f"tracing {model_id} failed: {exc}") from exc


def _parity(loaded: LoadedModel, graph_path: Path, tap_points) -> float:
    probe = _normalized_probe(loaded.mean, loaded.std)
    graph = torch.jit.load(str(graph_path), map_location="cpu")
    graph.eval()
    with torch.no_grad():
        want = loaded.module(probe)
        got = graph(probe)
    expected = set(tap_points) | {EMBEDDING_TAP}
    if not expected <= set(got):
        missing = ", ".join(sorted(expected - set(got)))
        raise ExportError(f"saved graph does not expose tap(s): {missing}")
    return max(float((want[k] - got[k]).abs().max()) for k in expected)


def _write_spec(path, name, graph_name, loaded: LoadedModel) -> Path:
    return write_kv(path, [
        ("name", name),
        ("graph_path", graph_name),
        ("input_size", INPUT_SIZE),
        ("tile_stride", TILE_STRIDE),
        ("mean", ",".join(repr(float(v)) for v in loaded.mean)),
        ("std", ",".join(repr(float(v)) for v in loaded.std)),
        ("tap_points", ",".join(loaded.tap_names)),
        ("embedding_tap", EMBEDDING_TAP),
        ("graph_format", GRAPH_FORMAT),
    ])


def export(recipe: ExportRecipe) -> ExportResult:
    """Export one backbone per the recipe; returns the emitted file paths."""
    entry = model_entry(recipe.model_id)
    rule = recipe.tap_rule if recipe.tap_rule else entry.tap_rule
    if rule not in (TAP_PER_BLOCK, TAP_PER_STAGE):
        raise ConfigError(f"unknown tap_rule {rule!r}")
    if rule != entry.tap_rule:
        raise ConfigError(f"{recipe.model_id} supports only tap_rule {entry.tap_rule}")
    if recipe.include_cls and not entry.has_cls:
        raise ConfigError(f"{recipe.model_id} has no class token; include_cls does not apply")
    verify_digest(recipe)

    loaded = entry.load_model(recipe.checkpoint, recipe.include_cls)
    traced = _trace(loaded.module, recipe.model_id)

    out_dir = Path(recipe.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graph_name = f"{recipe.base_name}.pt"
    graph_path = out_dir / graph_name
    torch.jit.save(traced, str(graph_path))
    spec_path = _write_spec(out_dir / f"{recipe.base_name}.spec",
                            recipe.base_name, graph_name, loaded)

    try:
        parity = _parity(loaded, graph_path, loaded.tap_names)
    except ExportError:
        graph_path.unlink(missing_ok=True)
        spec_path.unlink(missing_ok=True)
        raise
    if parity > PARITY_TOLERANCE:
        graph_path.unlink(missing_ok=True)
        spec_path.unlink(missing_ok=True)
        raise ExportError(
            f"parity check failed for {recipe.model_id}: max abs diff "
            f"{parity:.3e} exceeds {PARITY_TOLERANCE:.0e}"
        )
    return ExportResult(spec_path=spec_path, graph_path=graph_path,
                        tap_points=loaded.tap_names, parity=parity)
