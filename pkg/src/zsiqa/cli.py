"""Command-line front end: score, evaluate, adapt, gen-toy.

Exit codes: 0 success, 2 bad flags or run-config file, 3 I/O problems
(missing/corrupt files), 4 shape or configuration errors raised while
scoring.  Successful runs write nothing to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .backbone import load_backbone, load_spec, toy_backbone
from .errors import ConfigError, DecodeError, ParseError, ZsiqaError
from .harness import emit_report, evaluate, format_summary, load_run_config
from .manifest import adapt_pipal, adapt_tid2013
from .measures import MeasureConfig, MeasureKind
from .pipeline import Mode, ScoreRequest, score_pair

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_RUNTIME = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zsiqa",
        description="Full-reference image quality scoring from pretrained-backbone activations.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_score = sub.add_parser("score", help="score one distorted/reference image pair")
    p_score.add_argument("--ref", required=True, help="reference image path")
    p_score.add_argument("--dist", required=True, help="distorted image path")
    p_score.add_argument("--backbone", required=True, help="backbone spec file")
    p_score.add_argument("--mode", required=True, choices=[m.value for m in Mode])
    p_score.add_argument("--measure", required=True,
                         choices=[k.value for k in MeasureKind])
    p_score.add_argument("--euclid-weight", type=float, default=1.0,
                         help="weight of the Euclidean term added to skld/jsd/wsd (default 1.0)")
    p_score.add_argument("--json", action="store_true",
                         help="emit a JSON object with per-layer and per-tile breakdowns")
    p_score.set_defaults(func=cmd_score)

    p_eval = sub.add_parser("evaluate", help="score a manifest and report correlations")
    p_eval.add_argument("--config", required=True, help="run-config file (flat key=value)")
    p_eval.add_argument("--workers", type=int, default=None,
                        help="thread count override (falls back to ZSIQA_WORKERS, then the config)")
    p_eval.set_defaults(func=cmd_evaluate)

    p_adapt = sub.add_parser("adapt", help="convert a dataset tree to the canonical manifest")
    p_adapt.add_argument("--dataset", required=True, choices=["tid2013", "pipal"])
    p_adapt.add_argument("--root", required=True, help="dataset root directory")
    p_adapt.add_argument("--out", required=True, help="manifest path to write")
    p_adapt.set_defaults(func=cmd_adapt)

    p_toy = sub.add_parser("gen-toy", help="generate the deterministic toy backbone")
    p_toy.add_argument("--seed", type=int, required=True)
    p_toy.add_argument("--out", required=True, help="directory for the graph and spec files")
    p_toy.set_defaults(func=cmd_gen_toy)

    return parser


def cmd_score(args) -> int:
    measure = MeasureConfig(kind=MeasureKind.from_token(args.measure),
                            euclid_weight=args.euclid_weight)
    session = load_backbone(load_spec(args.backbone))
    request = ScoreRequest(reference=args.ref, distorted=args.dist,
                           mode=Mode.from_token(args.mode), measure=measure)
    score = score_pair(session, request)
    if args.json:
        payload = {
            "score": score.value,
            "mode": args.mode,
            "measure": args.measure,
            "per_layer": {name: value for name, value in score.per_layer},
            "per_tile": [
                {"row": int(r), "col": int(c), "score": value}
                for (r, c), value in score.per_tile
            ],
        }
        print(json.dumps(payload, indent=2))
    else:
        print(f"score={score.value:.6f}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        cfg = load_run_config(args.config)
    except (ParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    workers = args.workers
    if workers is None and os.environ.get("ZSIQA_WORKERS"):
        try:
            workers = int(os.environ["ZSIQA_WORKERS"])
        except ValueError:
            print(f"error: ZSIQA_WORKERS must be an integer, "
                  f"got {os.environ['ZSIQA_WORKERS']!r}", file=sys.stderr)
            return EXIT_USAGE
    if workers is not None:
        cfg = dataclasses.replace(cfg, workers=workers)

    reports = evaluate(cfg)
    fmt = "json" if Path(cfg.output).suffix.lower() == ".json" else "csv"
    emit_report(reports, cfg.output, fmt=fmt)
    print(format_summary(reports))
    print(f"report written to {cfg.output}")
    return EXIT_OK


def cmd_adapt(args) -> int:
    adapter = adapt_tid2013 if args.dataset == "tid2013" else adapt_pipal
    manifest = adapter(args.root, args.out)
    print(f"wrote {len(manifest.samples)} pairs to {args.out}")
    return EXIT_OK


def cmd_gen_toy(args) -> int:
    spec = toy_backbone(args.seed, args.out)
    print(f"graph={spec.graph_path}")
    print(f"spec={Path(args.out) / f'toy-{args.seed}.spec'}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ZsiqaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
