"""Error vocabulary for the export tool.

Deliberately independent of the scoring library: the two packages talk
through files (backbone spec + graph), never through imports.
"""


class ExportToolError(Exception):
    """Base class for everything the tool raises on purpose."""


class ConfigError(ExportToolError):
    """Bad recipe or flags: unknown model, wrong tap rule, malformed file."""


class CheckpointError(ExportToolError):
    """Checkpoint precondition failed: unreachable weights, digest mismatch,
    or the package needed to build the architecture is not installed."""


class ExportError(ExportToolError):
    """The export itself failed: trace error or parity above tolerance."""
