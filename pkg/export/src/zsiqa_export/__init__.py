"""Backbone export tool: pretrained vision towers to portable scoring graphs."""

from .errors import CheckpointError, ConfigError, ExportError, ExportToolError
from .export import (
    GRAPH_FORMAT,
    INPUT_SIZE,
    PARITY_TOLERANCE,
    TILE_STRIDE,
    ExportResult,
    export,
    probe_image,
)
from .models import (
    EMBEDDING_TAP,
    TAP_PER_BLOCK,
    TAP_PER_STAGE,
    model_entry,
    supported_models,
)
from .recipe import ExportRecipe, checkpoint_digest, load_recipe, verify_digest

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "ConfigError",
    "EMBEDDING_TAP",
    "ExportError",
    "ExportRecipe",
    "ExportResult",
    "ExportToolError",
    "GRAPH_FORMAT",
    "INPUT_SIZE",
    "PARITY_TOLERANCE",
    "TAP_PER_BLOCK",
    "TAP_PER_STAGE",
    "TILE_STRIDE",
    "checkpoint_digest",
    "export",
    "load_recipe",
    "model_entry",
    "probe_image",
    "supported_models",
    "verify_digest",
]
