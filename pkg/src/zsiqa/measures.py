"""Distances between activation tensors.

Five measures: RMS-scaled l2, cosine distance, and three per-channel
distribution measures (symmetric KL, Jensen-Shannon, 1-D Wasserstein)
that are combined with a weighted Euclidean term.  Distribution measures
treat each conv channel's spatial map, or each token-feature dimension's
values across tokens, as one empirical distribution.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateInputError, ShapeError


class MeasureKind(enum.Enum):
    L2 = "l2"
    COSINE = "cos"
    SKLD = "skld"
    JSD = "jsd"
    WSD = "wsd"

    @classmethod
    def from_token(cls, token: str) -> "MeasureKind":
        try:
            return cls(token.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ConfigError(f"unknown measure {token!r} (expected one of: {valid})") from None


DISTRIBUTION_KINDS = frozenset({MeasureKind.SKLD, MeasureKind.JSD, MeasureKind.WSD})


@dataclass(frozen=True)
class MeasureConfig:
    kind: MeasureKind
    epsilon: float = 1e-10
    euclid_weight: float = 1.0  # weight of the added Euclidean term (distribution kinds only)

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.euclid_weight < 0:
            raise ConfigError(f"euclid_weight must be >= 0, got {self.euclid_weight}")


def _check_same_shape(x: np.ndarray, y: np.ndarray):
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")


def l2_distance(x, y) -> float:
    """RMS-scaled Euclidean distance ||x - y|| / sqrt(N)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_shape(x, y)
    d = x.ravel() - y.ravel()
    return float(np.sqrt(np.dot(d, d) / d.size))

def cosine_distance(x, y) -> float:
    """1 - <x, y> / (||x|| ||y||), in [0, 2]."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise DegenerateInputError("cosine distance is undefined for zero vectors")
    return float(np.clip(1.0 - np.dot(x, y) / (nx * ny), 0.0, 2.0))


def to_distribution(v, epsilon: float = 1e-10) -> np.ndarray:
    """Shift-normalize a 1-D vector into a probability vector.

    w = v - min(v) + epsilon, then w / sum(w).  The epsilon keeps every
    weight strictly positive; adding a constant to v leaves the result
    unchanged up to rounding.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size < 1:
        raise ShapeError("to_distribution requires at least one element")
    w = v - v.min() + epsilon
    return w / w.sum()


def _kl(p: np.ndarray, q: np.ndarray, epsilon: float) -> float:
    return float(np.sum(p * np.log((p + epsilon) / (q + epsilon))))


def skld(p, q, epsilon: float = 1e-10) -> float:
    """Symmetric KL divergence KL(p||q) + KL(q||p), natural log."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    _check_same_shape(p, q)
    return _kl(p, q, epsilon) + _kl(q, p, epsilon)


def jsd(p, q, epsilon: float = 1e-10) -> float:
    """Jensen-Shannon divergence, natural log; range [0, ln 2]."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    _check_same_shape(p, q)
    m = 0.5 * (p + q)
    return 0.5 * _kl(p, m, epsilon) + 0.5 * _kl(q, m, epsilon)


def wsd_1d(u, v) -> float:
    """1-Wasserstein distance between equal-weight empirical distributions."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    _check_same_shape(u, v)
    if u.size < 1:
        raise ShapeError("wsd_1d requires at least one element")
    return float(np.mean(np.abs(np.sort(u) - np.sort(v))))


def _channel_matrix(t: np.ndarray) -> np.ndarray:
    """View a tensor as (channels, samples) distributions.

    Conv activations (C, h, w) give one spatial distribution per channel;
    token activations (tokens, dim) give one distribution per feature
    dimension across tokens; 1-D input is a single channel.
    """
    if t.ndim == 1:
        return t[None, :]
    if t.ndim == 2:
        return np.ascontiguousarray(t.T)
    if t.ndim == 3:
        return t.reshape(t.shape[0], -1)
    raise ShapeError(f"expected a 1-D, 2-D, or 3-D tensor, got shape {t.shape}")


def _rows_to_distributions(rows: np.ndarray, epsilon: float) -> np.ndarray:
    w = rows - rows.min(axis=1, keepdims=True) + epsilon
    return w / w.sum(axis=1, keepdims=True)


def _divergence(x: np.ndarray, y: np.ndarray, cfg: MeasureConfig) -> float:
    xc = _channel_matrix(x)
    yc = _channel_matrix(y)
    eps = cfg.epsilon
    if cfg.kind is MeasureKind.WSD:
        per_channel = np.mean(np.abs(np.sort(xc, axis=1) - np.sort(yc, axis=1)), axis=1)
    else:
        p = _rows_to_distributions(xc, eps)
        q = _rows_to_distributions(yc, eps)
        if cfg.kind is MeasureKind.SKLD:
            per_channel = np.sum(p * np.log((p + eps) / (q + eps)), axis=1)
            per_channel = per_channel + np.sum(q * np.log((q + eps) / (p + eps)), axis=1)
        else:
            m = 0.5 * (p + q)
            per_channel = 0.5 * np.sum(p * np.log((p + eps) / (m + eps)), axis=1)
            per_channel = per_channel + 0.5 * np.sum(q * np.log((q + eps) / (m + eps)), axis=1)
    return float(np.mean(per_channel))


def layer_distance(x, y, cfg: MeasureConfig) -> float:
    """Distance between two equally shaped activation tensors.

    L2 and cosine flatten the tensors.  Distribution kinds average the
    per-channel divergence and add euclid_weight * l2_distance(x, y).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_shape(x, y)
    if cfg.kind is MeasureKind.L2:
        return l2_distance(x, y)
    if cfg.kind is MeasureKind.COSINE:
        return cosine_distance(x, y)
    value = _divergence(x, y, cfg)
    if cfg.euclid_weight > 0:
        value += cfg.euclid_weight * l2_distance(x, y)
    return value
