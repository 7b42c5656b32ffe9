"""Logit combination rules and per-sample uncertainty scoring.

A duo is scored by summing temperature-weighted member logits and reading
predictions and uncertainties off the combined distribution. All
probability work happens in float64 regardless of the float32 storage
format. Ties in an argmax resolve to the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Iterable, Literal, Union

import numpy as np

from .bundles import BundlePair, LogitBundle

Measure = Literal["softmax_response", "entropy"]

MEASURES = ("softmax_response", "entropy")


@dataclass(frozen=True)
class DuoWeights:
    """Non-negative member temperatures; at least one must be positive."""

    t_large: float
    t_small: float

    def __post_init__(self) -> None:
        ok = self.t_large >= 0 and self.t_small >= 0
        if not ok or not np.isfinite(self.t_large) or not np.isfinite(self.t_small):
            raise ValueError(
                f"weights must be finite and non-negative, got "
                f"({self.t_large}, {self.t_small})")
        if self.t_large + self.t_small <= 0:
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class WeightedDuo:
    """Combine with explicit temperatures."""

    weights: DuoWeights
    tag: ClassVar[str] = "weighted"


@dataclass(frozen=True)
class UnweightedDuo:
    """Equal-weight combination, identical to WeightedDuo(0.5, 0.5)."""

    tag: ClassVar[str] = "unweighted"


@dataclass(frozen=True)
class UQOnlyDuo:
    """Predict from the large member alone; read uncertainty from the duo.

    Class predictions are the large member's argmax, so accuracy matches
    the unscaled single model exactly. Uncertainty comes from the combined
    distribution: one minus its probability at the predicted class under
    the softmax-response measure, or its normalized entropy.
    """

    weights: DuoWeights
    tag: ClassVar[str] = "uq_only"


@dataclass(frozen=True)
class SingleScaled:
    """A single model with multiplicatively scaled logits.

    The scale is the reciprocal of a division-style temperature; scale 1
    is the raw model.
    """

    scale: float = 1.0
    tag: ClassVar[str] = "single"

    def __post_init__(self) -> None:
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise ValueError(f"scale must be finite and positive, got {self.scale}")


AggregationMode = Union[WeightedDuo, UnweightedDuo, UQOnlyDuo, SingleScaled]


@dataclass(frozen=True)
class ScoredPredictions:
    """Per-sample outcome of scoring: argmax class, confidence in [0, 1],
    uncertainty (1 - confidence), and correctness against the labels."""

    pred: np.ndarray
    confidence: np.ndarray
    uncertainty: np.ndarray
    correct: np.ndarray

    def __len__(self) -> int:
        return int(self.pred.shape[0])


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    """Overflow-safe softmax, promoted to float64."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def combine_logits(pair: BundlePair, weights: DuoWeights) -> np.ndarray:
    """Temperature-weighted sum of the pair's logits, in float64."""
    a = pair.large.logits.astype(np.float64)
    b = pair.small.logits.astype(np.float64)
    return weights.t_large * a + weights.t_small * b


def ensemble_average(members: Iterable[LogitBundle]) -> np.ndarray:
    """Plain logit mean over any number of aligned members."""
    bundles = list(members)
    if not bundles:
        raise ValueError("ensemble requires at least one member")
    first = bundles[0]
    for m in bundles[1:]:
        if m.logits.shape != first.logits.shape:
            raise ValueError(
                f"member logit shapes differ: {m.logits.shape} vs "
                f"{first.logits.shape}")
        if not np.array_equal(m.labels, first.labels):
            raise ValueError("member label vectors differ")
    stack = np.stack([m.logits.astype(np.float64) for m in bundles])
    return stack.mean(axis=0)


def _normalized_entropy(probs: np.ndarray) -> np.ndarray:
    # 0 * log 0 = 0; softmax output can underflow to exact zero.
    terms = np.where(probs > 0, probs * np.log(np.where(probs > 0, probs, 1.0)), 0.0)
    return -terms.sum(axis=1) / np.log(probs.shape[1])


def _uncertainty(probs: np.ndarray, pred: np.ndarray, measure: str) -> np.ndarray:
    if measure == "softmax_response":
        return 1.0 - probs[np.arange(probs.shape[0]), pred]
    if measure == "entropy":
        return _normalized_entropy(probs)
    raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")


def score(z: np.ndarray, labels: np.ndarray,
          measure: Measure = "softmax_response") -> ScoredPredictions:
    """Score a logit matrix against labels.

    Softmax-response uncertainty is 1 - max_k softmax(z)_k and lives in
    [0, 1 - 1/K]; entropy uncertainty is normalized by ln K into [0, 1].
    Confidence is always 1 - uncertainty.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError(f"logits must be 2-D, got shape {z.shape}")
    labels = np.asarray(labels)
    if labels.shape != (z.shape[0],):
        raise ValueError(
            f"labels shape {labels.shape} does not match logits {z.shape}")
    pred = np.argmax(z, axis=1)
    probs = softmax(z)
    unc = _uncertainty(probs, pred, measure)
    return ScoredPredictions(
        pred=pred,
        confidence=1.0 - unc,
        uncertainty=unc,
        correct=pred == labels.astype(np.int64),
    )


def mode_logits(pair: BundlePair, mode: AggregationMode) -> np.ndarray:
    """The float64 logit matrix a mode's distribution is computed from."""
    match mode:
        case SingleScaled(scale=s):
            return s * pair.large.logits.astype(np.float64)
        case UnweightedDuo():
            return combine_logits(pair, DuoWeights(0.5, 0.5))
        case WeightedDuo(weights=w) | UQOnlyDuo(weights=w):
            return combine_logits(pair, w)
    raise TypeError(f"unknown aggregation mode: {mode!r}")


def score_duo(pair: BundlePair, mode: AggregationMode,
              measure: Measure = "softmax_response") -> ScoredPredictions:
    """Score a bundle pair under an aggregation mode.

    WeightedDuo(t, 0) reduces exactly to SingleScaled(t), and
    UnweightedDuo is exactly WeightedDuo(0.5, 0.5).
    """
    labels = pair.large.labels
    if isinstance(mode, UQOnlyDuo):
        probs = softmax(mode_logits(pair, mode))
        pred = np.argmax(pair.large.logits.astype(np.float64), axis=1)
        unc = _uncertainty(probs, pred, measure)
        return ScoredPredictions(
            pred=pred,
            confidence=1.0 - unc,
            uncertainty=unc,
            correct=pred == labels.astype(np.int64),
        )
    return score(mode_logits(pair, mode), labels, measure)
