"""End-to-end pair scoring.

Both images are tiled on the same grid, every tile runs through the
backbone, and per-layer distances are averaged uniformly over layers and
then over tiles.  `feats` mode compares intermediate activations; `emb`
mode compares the embedding vectors (l2 or cosine only).  Lower scores
mean more similar.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backbone import BackboneSession
from .errors import ConfigError, ShapeError, ZsiqaError
from .geometry import dilate, preprocess, rotate, tile, translate
from .image import RgbImage, read_image
from .measures import DISTRIBUTION_KINDS, MeasureConfig, layer_distance


class Mode(enum.Enum):
    FEATS = "feats"
    EMB = "emb"

    @classmethod
    def from_token(cls, token: str) -> "Mode":
        try:
            return cls(token.strip().lower())
        except ValueError:
            raise ConfigError(f"unknown mode {token!r} (expected feats or emb)") from None


class PerturbationKind(enum.Enum):
    ORIGINAL = "original"
    TRANSLATION = "translation"
    DILATION = "dilation"
    ROTATION = "rotation"

    @classmethod
    def from_token(cls, token: str) -> "PerturbationKind":
        try:
            return cls(token.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ConfigError(f"unknown perturbation {token!r} (expected one of: {valid})") from None


# Protocol defaults: 1% right shift, 1% dilation, 1 degree clockwise.
DEFAULT_AMOUNTS = {
    PerturbationKind.TRANSLATION: 0.01,
    PerturbationKind.DILATION: 1.01,
    PerturbationKind.ROTATION: 1.0,
}


@dataclass(frozen=True)
class Perturbation:
    """One geometric perturbation applied to the distorted image only."""

    kind: PerturbationKind
    amount: float = None  # None picks the protocol default for the kind

    @property
    def resolved_amount(self) -> float:
        if self.kind is PerturbationKind.ORIGINAL:
            return 0.0
        return self.amount if self.amount is not None else DEFAULT_AMOUNTS[self.kind]

    def apply(self, img: RgbImage) -> RgbImage:
        if self.kind is PerturbationKind.ORIGINAL:
            return img
        if self.kind is PerturbationKind.TRANSLATION:
            return translate(img, self.resolved_amount)
        if self.kind is PerturbationKind.DILATION:
            return dilate(img, self.resolved_amount)
        return rotate(img, self.resolved_amount)


@dataclass
class ScoreRequest:
    """One (reference, distorted) scoring job.

    Images may be in-memory RgbImages or file paths; paths are decoded
    inside the scoring worker so a bad file fails only its own item.
    """

    reference: object  # RgbImage | str | Path
    distorted: object
    mode: Mode
    measure: MeasureConfig
    perturbation: Perturbation = None


@dataclass
class PairScore:
    """Aggregate score plus its per-layer and per-tile decomposition."""

    value: float
    per_layer: list  # (layer_name, mean distance across tiles)
    per_tile: list  # ((row, col), mean distance across layers)


@dataclass
class BatchItem:
    """score_batch slot: exactly one of score or error is set."""

    score: PairScore = None
    error: str = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _resolve(img) -> RgbImage:
    if isinstance(img, RgbImage):
        return img
    return read_image(Path(img))


def score_pair(session: BackboneSession, req: ScoreRequest) -> PairScore:
    """Score one pair; deterministic for fixed inputs and session."""
    if req.mode is Mode.EMB and req.measure.kind in DISTRIBUTION_KINDS:
        raise ConfigError(
            f"emb mode supports l2 and cos only, not {req.measure.kind.value}"
        )
    reference = _resolve(req.reference)
    distorted = _resolve(req.distorted)
    if (reference.width, reference.height) != (distorted.width, distorted.height):
        raise ShapeError(
            f"dimension mismatch: reference {reference.width}x{reference.height} "
            f"vs distorted {distorted.width}x{distorted.height}"
        )
    if req.perturbation is not None and req.perturbation.kind is not PerturbationKind.ORIGINAL:
        distorted = req.perturbation.apply(distorted)

    spec = session.spec
    ref_tiles = tile(preprocess(reference, spec.mean, spec.std), spec.input_size, spec.tile_stride)
    dist_tiles = tile(preprocess(distorted, spec.mean, spec.std), spec.input_size, spec.tile_stride)

    tile_scores = []
    if req.mode is Mode.FEATS:
        layer_names = list(spec.tap_points)
        layer_sums = np.zeros(len(layer_names), dtype=np.float64)
        for rt, dt in zip(ref_tiles.tiles, dist_tiles.tiles):
            ref_stack = session.forward_features(rt)
            dist_stack = session.forward_features(dt)
            values = [
                layer_distance(a, b, req.measure)
                for (_, a), (_, b) in zip(ref_stack.layers, dist_stack.layers)
            ]
            layer_sums += values
            tile_scores.append(float(np.mean(values)))
    else:
        layer_names = [spec.embedding_tap]
        layer_sums = np.zeros(1, dtype=np.float64)
        for rt, dt in zip(ref_tiles.tiles, dist_tiles.tiles):
            value = layer_distance(
                session.forward_embedding(rt), session.forward_embedding(dt), req.measure
            )
            layer_sums[0] += value
            tile_scores.append(value)

    n_tiles = len(tile_scores)
    per_layer = [(name, float(s / n_tiles)) for name, s in zip(layer_names, layer_sums)]
    per_tile = list(zip(ref_tiles.origins, tile_scores))
    return PairScore(value=float(np.mean(tile_scores)), per_layer=per_layer, per_tile=per_tile)


def score_batch(session: BackboneSession, requests, workers: int = 1) -> list:
    """Score many pairs on a bounded thread pool.

    Output order matches input order and is identical for any worker
    count.  Per-item failures (bad file, shape mismatch, ...) land in the
    item's error slot without aborting the rest.
    """
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    requests = list(requests)
    if not requests:
        return []

    def run(req) -> BatchItem:
        try:
            return BatchItem(score=score_pair(session, req))
        except (ZsiqaError, OSError) as exc:
            return BatchItem(error=f"{type(exc).__name__}: {exc}")

    if workers == 1:
        return [run(req) for req in requests]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, requests))
