"""Command-line entry point: export the backbone described by a recipe file.

Exit codes: 0 success, 2 recipe/flag errors, 3 checkpoint or file-system
errors, 4 export failures (trace or parity).
"""

from __future__ import annotations

import argparse
import sys

from .errors import CheckpointError, ConfigError, ExportToolError
from .export import export
from .models import supported_models
from .recipe import load_recipe

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_EXPORT = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zsiqa-export",
        description="Export a pretrained vision tower to a portable scoring backbone "
                    f"(supported: {', '.join(supported_models())}).",
    )
    parser.add_argument("recipe", help="flat key/value recipe file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        recipe = load_recipe(args.recipe)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        result = export(recipe)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ExportToolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXPORT
    print(f"graph={result.graph_path}")
    print(f"spec={result.spec_path}")
    print(f"taps={len(result.tap_points)}")
    print(f"parity={result.parity:.3e}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
