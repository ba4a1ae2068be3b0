"""Dataset evaluation: perturbation sweeps, correlations, report emission.

Distances are inversely related to quality, so scores are negated (for
higher-better MOS) before correlating.  PLCC is computed on raw negated
scores by default; the 4-parameter logistic mapping sits behind the
``logistic_fit`` flag and falls back to raw PLCC with a warning when the
fit does not converge.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backbone import load_backbone, load_spec
from .config import read_kv
from .errors import ConfigError, DegenerateInputError, FitError, ParseError
from .measures import MeasureConfig, MeasureKind
from .pipeline import (
    Mode,
    Perturbation,
    PerturbationKind,
    ScoreRequest,
    score_batch,
)
from .manifest import load_manifest

log = logging.getLogger("zsiqa")

REPORT_COLUMNS = ("dataset", "backbone", "mode", "measure", "perturbation",
                  "n", "plcc", "srcc", "krcc", "errors")

RUN_CONFIG_KEYS = {
    "manifest", "backbone_spec", "mode", "kind", "epsilon", "euclid_weight",
    "perturbations", "logistic_fit", "workers", "output",
    "translation_fraction", "dilation_factor", "rotation_degrees",
}

_AMOUNT_KEYS = {
    PerturbationKind.TRANSLATION: "translation_fraction",
    PerturbationKind.DILATION: "dilation_factor",
    PerturbationKind.ROTATION: "rotation_degrees",
}


@dataclass
class RunConfig:
    manifest: Path
    backbone_spec: Path
    mode: Mode
    measure: MeasureConfig
    perturbations: tuple
    output: Path
    logistic_fit: bool = False
    workers: int = 1

    def __post_init__(self):
        if not self.perturbations:
            raise ConfigError("perturbations must be nonempty")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


def _parse_bool(value: str, key: str) -> bool:
    token = value.strip().lower()
    if token in ("true", "1", "yes", "on"):
        return True
    if token in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {value!r}")


def load_run_config(path) -> RunConfig:
    """Read a flat key/value run-config file; paths resolve against its directory."""
    path = Path(path)
    kv = read_kv(path)
    unknown = set(kv) - RUN_CONFIG_KEYS
    if unknown:
        raise ParseError(f"unknown run-config keys: {', '.join(sorted(unknown))}")
    missing = [k for k in ("manifest", "backbone_spec", "mode", "kind", "output") if k not in kv]
    if missing:
        raise ParseError(f"run config is missing keys: {', '.join(missing)}")

    def resolve(p: str) -> Path:
        p = Path(p)
        return p if p.is_absolute() else path.parent / p

    try:
        measure = MeasureConfig(
            kind=MeasureKind.from_token(kv["kind"]),
            epsilon=float(kv.get("epsilon", "1e-10")),
            euclid_weight=float(kv.get("euclid_weight", "1.0")),
        )
        workers = int(kv.get("workers", "1"))
    except ValueError as exc:
        raise ConfigError(f"bad numeric value in run config: {exc}") from None

    pert_text = kv.get("perturbations", PerturbationKind.ORIGINAL.value)
    tokens = [t.strip() for t in pert_text.split(",") if t.strip()]
    if not tokens:
        raise ConfigError("perturbations must be nonempty")
    perturbations = []
    for token in tokens:
        kind = PerturbationKind.from_token(token)
        amount = None
        if kind in _AMOUNT_KEYS and _AMOUNT_KEYS[kind] in kv:
            try:
                amount = float(kv[_AMOUNT_KEYS[kind]])
            except ValueError:
                raise ConfigError(f"bad {_AMOUNT_KEYS[kind]} value {kv[_AMOUNT_KEYS[kind]]!r}") from None
        perturbations.append(Perturbation(kind=kind, amount=amount))
    if len({p.kind for p in perturbations}) != len(perturbations):
        raise ConfigError("perturbations contains repeated kinds")

    return RunConfig(
        manifest=resolve(kv["manifest"]),
        backbone_spec=resolve(kv["backbone_spec"]),
        mode=Mode.from_token(kv["mode"]),
        measure=measure,
        perturbations=tuple(perturbations),
        logistic_fit=_parse_bool(kv.get("logistic_fit", "false"), "logistic_fit"),
        workers=workers,
        output=resolve(kv["output"]),
    )


@dataclass
class CorrelationReport:
    """Correlations for one (dataset, backbone, mode, measure, perturbation) cell."""

    dataset: str
    backbone: str
    mode: str
    measure: str
    perturbation: str
    n: int
    plcc: float
    srcc: float
    krcc: float
    errors: int = 0

    @property
    def cell_id(self) -> tuple:
        return (self.dataset, self.backbone, self.mode, self.measure, self.perturbation)


def evaluate(cfg: RunConfig) -> list:
    """Run the full sweep: one CorrelationReport per requested perturbation."""
    from .stats import kendall_tau_b, pearson, spearman, fit_logistic4

    manifest = load_manifest(cfg.manifest)
    spec = load_spec(cfg.backbone_spec)
    session = load_backbone(spec)
    dataset = manifest.dataset or Path(cfg.manifest).stem

    reports = []
    for perturbation in cfg.perturbations:
        requests = []
        for sample in manifest.samples:
            ref, dist = manifest.resolved(sample)
            requests.append(ScoreRequest(
                reference=ref,
                distorted=dist,
                mode=cfg.mode,
                measure=cfg.measure,
                perturbation=None if perturbation.kind is PerturbationKind.ORIGINAL
                else perturbation,
            ))
        items = score_batch(session, requests, workers=cfg.workers)

        scores, mos = [], []
        error_count = 0
        for item, sample in zip(items, manifest.samples):
            if item.ok:
                scores.append(item.score.value)
                mos.append(sample.mos)
            else:
                error_count += 1
                log.warning("pair (%s, %s) failed: %s", sample.ref_path, sample.dist_path, item.error)
        if len(scores) < 3:
            raise DegenerateInputError(
                f"only {len(scores)} scorable pairs for perturbation "
                f"{perturbation.kind.value}; need at least 3"
            )
        scores = np.asarray(scores, dtype=np.float64)
        mos = np.asarray(mos, dtype=np.float64)
        # Lower distance = better quality; align sign with the MOS convention.
        signed = -scores if manifest.mos_convention == "higher_better" else scores

        plcc_input = signed
        if cfg.logistic_fit:
            try:
                plcc_input = fit_logistic4(signed, mos)
            except FitError as exc:
                log.warning("logistic fit failed (%s); falling back to raw PLCC", exc)
        reports.append(CorrelationReport(
            dataset=dataset,
            backbone=spec.name,
            mode=cfg.mode.value,
            measure=cfg.measure.kind.value,
            perturbation=perturbation.kind.value,
            n=int(scores.size),
            plcc=pearson(plcc_input, mos),
            srcc=spearman(signed, mos),
            krcc=kendall_tau_b(signed, mos),
            errors=error_count,
        ))
    return reports


def emit_report(reports, path, fmt: str = "csv") -> Path:
    """Write reports as CSV or JSON; rows sorted by cell id, bytes deterministic."""
    reports = sorted(reports, key=lambda r: r.cell_id)
    if not reports:
        raise ConfigError("emit_report requires at least one report")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown report format {fmt!r} (expected csv or json)")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [",".join(REPORT_COLUMNS)]
        for r in reports:
            lines.append(",".join([
                r.dataset, r.backbone, r.mode, r.measure, r.perturbation,
                str(r.n), repr(r.plcc), repr(r.srcc), repr(r.krcc), str(r.errors),
            ]))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        payload = [
            {
                "dataset": r.dataset, "backbone": r.backbone, "mode": r.mode,
                "measure": r.measure, "perturbation": r.perturbation,
                "n": r.n, "plcc": r.plcc, "srcc": r.srcc, "krcc": r.krcc,
                "errors": r.errors,
            }
            for r in reports
        ]
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def reports_from_json(text: str) -> list:
    """Rebuild CorrelationReports from emit_report's JSON output."""
    return [CorrelationReport(**entry) for entry in json.loads(text)]


def format_summary(reports) -> str:
    """Human-readable table of reports for terminal output."""
    header = f"{'dataset':<12} {'backbone':<14} {'mode':<6} {'meas':<5} {'perturb':<12} " \
             f"{'n':>6} {'plcc':>8} {'srcc':>8} {'krcc':>8} {'err':>4}"
    rows = [header, "-" * len(header)]
    for r in sorted(reports, key=lambda r: r.cell_id):
        rows.append(
            f"{r.dataset:<12} {r.backbone:<14} {r.mode:<6} {r.measure:<5} {r.perturbation:<12} "
            f"{r.n:>6d} {r.plcc:>8.4f} {r.srcc:>8.4f} {r.krcc:>8.4f} {r.errors:>4d}"
        )
    return "\n".join(rows)
