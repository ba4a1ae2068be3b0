"""Canonical evaluation manifests and dataset adapters.

A manifest is a small CSV: header ``ref_path,dist_path,mos``, one record
per line, paths relative to the manifest's directory.  Comment lines
start with ``#``; two directives are honored:

    # dataset: <name>
    # mos_convention: higher_better|lower_better

Adapters convert the TID2013 and PIPAL distribution layouts into this
format so the harness only ever ingests one schema.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import AdapterError, DuplicateError, ParseError

MANIFEST_HEADER = "ref_path,dist_path,mos"
MOS_CONVENTIONS = ("higher_better", "lower_better")


@dataclass(frozen=True)
class EvalSample:
    """One (reference, distorted, subjective score) record."""

    ref_path: str
    dist_path: str
    mos: float


@dataclass
class Manifest:
    samples: list
    root: Path
    mos_convention: str = "higher_better"
    dataset: str = None

    def resolved(self, sample: EvalSample) -> tuple:
        return self.root / sample.ref_path, self.root / sample.dist_path


def load_manifest(path) -> Manifest:
    """Parse a manifest file, rejecting malformed rows and duplicate pairs."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    samples = []
    seen = set()
    mos_convention = "higher_better"
    dataset = None
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            key, _, value = body.partition(":")
            key, value = key.strip(), value.strip()
            if key == "mos_convention" and value:
                if value not in MOS_CONVENTIONS:
                    raise ParseError(f"unknown mos_convention {value!r}", line=lineno)
                mos_convention = value
            elif key == "dataset" and value:
                dataset = value
            continue
        if not header_seen:
            if line != MANIFEST_HEADER:
                raise ParseError(f"expected header {MANIFEST_HEADER!r}, got {line!r}", line=lineno)
            header_seen = True
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise ParseError(f"expected 3 comma-separated fields, got {len(fields)}", line=lineno)
        ref_path, dist_path, mos_text = (f.strip() for f in fields)
        if not ref_path or not dist_path:
            raise ParseError("empty path field", line=lineno)
        try:
            mos = float(mos_text)
        except ValueError:
            raise ParseError(f"non-numeric mos {mos_text!r}", line=lineno) from None
        if not math.isfinite(mos):
            raise ParseError(f"non-finite mos {mos_text!r}", line=lineno)
        key = (ref_path, dist_path)
        if key in seen:
            raise DuplicateError(f"duplicate pair at line {lineno}: {ref_path} / {dist_path}")
        seen.add(key)
        samples.append(EvalSample(ref_path=ref_path, dist_path=dist_path, mos=mos))
    if not header_seen:
        raise ParseError(f"manifest {path} has no header row")
    return Manifest(samples=samples, root=path.parent,
                    mos_convention=mos_convention, dataset=dataset)


def write_manifest(path, samples, dataset=None, mos_convention="higher_better") -> Path:
    """Emit a canonical manifest (deterministic bytes for identical inputs)."""
    if mos_convention not in MOS_CONVENTIONS:
        raise ParseError(f"unknown mos_convention {mos_convention!r}")
    path = Path(path)
    lines = []
    if dataset:
        lines.append(f"# dataset: {dataset}")
    lines.append(f"# mos_convention: {mos_convention}")
    lines.append(MANIFEST_HEADER)
    for s in samples:
        lines.append(f"{s.ref_path},{s.dist_path},{s.mos!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


_TID_NAME = re.compile(r"^[iI](\d{2})_\d{2}_[1-5]\.(bmp|BMP)$")


def _find_case_variant(directory: Path, filename: str):
    """Locate filename in directory tolerating case differences in the name."""
    candidate = directory / filename
    if candidate.is_file():
        return candidate
    if directory.is_dir():
        lowered = filename.lower()
        for entry in sorted(os.listdir(directory)):
            if entry.lower() == lowered:
                return directory / entry
    return None


def adapt_tid2013(root, out_path) -> Manifest:
    """Convert a TID2013 tree into a canonical manifest.

    Expects ``mos_with_names.txt`` (one "<mos> <distorted-name>" per line)
    plus reference_images/ and distorted_images/.  Each iRR_DD_L.bmp maps
    to reference IRR.BMP; the full dataset yields 3000 records.
    """
    root = Path(root)
    listing = root / "mos_with_names.txt"
    if not listing.is_file():
        raise FileNotFoundError(f"mos listing not found: {listing}")
    out_path = Path(out_path)
    out_dir = out_path.parent
    samples = []
    for lineno, raw in enumerate(listing.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected '<mos> <filename>', got {line!r}", line=lineno)
        try:
            mos = float(parts[0])
        except ValueError:
            raise ParseError(f"non-numeric mos {parts[0]!r}", line=lineno) from None
        name = parts[1]
        match = _TID_NAME.match(name)
        if match is None:
            raise AdapterError(f"distorted filename {name!r} does not match iRR_DD_L.bmp")
        ref_file = _find_case_variant(root / "reference_images", f"I{match.group(1)}.BMP")
        if ref_file is None:
            raise AdapterError(f"no reference image I{match.group(1)}.BMP for {name!r}")
        dist_file = root / "distorted_images" / name
        if not dist_file.is_file():
            raise AdapterError(f"distorted image not found: {dist_file}")
        samples.append(EvalSample(
            ref_path=os.path.relpath(ref_file, out_dir),
            dist_path=os.path.relpath(dist_file, out_dir),
            mos=mos,
        ))
    write_manifest(out_path, samples, dataset="tid2013")
    # reading back what we wrote re-runs the strict parser as a self-check
    return load_manifest(out_path)


_IMAGE_EXTS = (".bmp", ".png", ".jpg", ".jpeg")


def _index_images(root: Path) -> dict:
    index = {}
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.suffix.lower() in _IMAGE_EXTS:
            index.setdefault(p.name, p)
    return index


def adapt_pipal(root, out_path) -> Manifest:
    """Convert a PIPAL training tree into a canonical manifest.

    Label files (one per reference, "distorted_name,score" lines) are
    discovered anywhere under root; every labeled image must resolve by
    filename, and each label file's stem names its reference image.  The
    public training set yields 23200 records.
    """
    root = Path(root)
    labels = sorted(root.rglob("*.txt"))
    if not labels:
        raise FileNotFoundError(f"no label files (*.txt) found under {root}")
    images = _index_images(root)
    out_path = Path(out_path)
    out_dir = out_path.parent
    samples = []
    for label_file in labels:
        ref_name = None
        for ext in _IMAGE_EXTS:
            candidate = images.get(label_file.stem + ext) or images.get(label_file.stem + ext.upper())
            if candidate is not None:
                ref_name = candidate
                break
        if ref_name is None:
            raise AdapterError(f"no reference image for label file {label_file.name!r}")
        for lineno, raw in enumerate(label_file.read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            name, _, score_text = line.partition(",")
            name, score_text = name.strip(), score_text.strip()
            if not name or not score_text:
                raise ParseError(f"{label_file.name}: expected 'name,score', got {line!r}", line=lineno)
            try:
                score = float(score_text)
            except ValueError:
                raise ParseError(f"{label_file.name}: non-numeric score {score_text!r}", line=lineno) from None
            dist = images.get(name)
            if dist is None:
                raise AdapterError(f"{label_file.name} references missing image {name!r}")
            samples.append(EvalSample(
                ref_path=os.path.relpath(ref_name, out_dir),
                dist_path=os.path.relpath(dist, out_dir),
                mos=score,
            ))
    write_manifest(out_path, samples, dataset="pipal")
    return load_manifest(out_path)
