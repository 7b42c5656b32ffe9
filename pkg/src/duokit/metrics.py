"""Accuracy, calibration, and selective-classification metrics.

Everything here consumes either raw float64 logits or ScoredPredictions
and is deterministic: sorts are stable, reductions use numpy's fixed
pairwise summation, and no randomness is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .aggregate import (AggregationMode, Measure, ScoredPredictions,
                        SingleScaled, mode_logits, score, score_duo, softmax)
from .bundles import BundlePair, LogitBundle, flops_balance
from .tune import nll

SCHEMA_VERSION = 1

DEFAULT_SAC_TARGETS = (0.98,)


@dataclass(frozen=True)
class CalibrationReport:
    """ECE over equal-width confidence bins.

    Each bin is (lo, hi, count, mean_confidence, empirical_accuracy) with
    right-closed intervals; confidence 0 falls into the first bin. Empty
    bins carry NaN statistics and contribute nothing to the ECE.
    """

    ece: float
    bins: list[tuple[float, float, int, float, float]]


@dataclass(frozen=True)
class RiskCoverageCurve:
    """Prefix risks after sorting by uncertainty, ascending and stable.

    coverage[i] = (i+1)/N and risk[i] is the error rate among the i+1
    most certain samples. aurc is the unweighted mean of risk over all
    prefixes. sac maps each target accuracy to the largest coverage whose
    prefix accuracy still meets it, or 0.0 if none does.
    """

    coverage: np.ndarray
    risk: np.ndarray
    aurc: float
    sac: Mapping[float, float]


@dataclass(frozen=True)
class MetricRow:
    """One evaluated configuration, flat enough for a CSV row."""

    dataset: str
    split: str
    large_model: str
    small_model: str
    balance: float
    mode: str
    measure: str
    accuracy: float
    macro_f1: float
    nll: float
    brier: float
    ece: float
    auroc: float
    aurc: float
    sac: Mapping[float, float]

    def to_record(self) -> dict:
        """Flatten to serializable key/value pairs in stable column order."""
        rec = {
            "dataset": self.dataset,
            "split": self.split,
            "large_model": self.large_model,
            "small_model": self.small_model,
            "balance": self.balance,
            "mode": self.mode,
            "measure": self.measure,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "nll": self.nll,
            "brier": self.brier,
            "ece": self.ece,
            "auroc": self.auroc,
            "aurc": self.aurc,
        }
        for target in sorted(self.sac):
            rec[sac_key(target)] = self.sac[target]
        rec["schema_version"] = SCHEMA_VERSION
        return rec


def sac_key(target: float) -> str:
    return f"sac_{target * 100:g}"


def accuracy(scored: ScoredPredictions) -> float:
    return float(np.mean(scored.correct))


def macro_f1(pred: np.ndarray, labels: np.ndarray, num_classes: int) -> float:
    """Mean per-class F1 over the classes that appear in the labels.

    A class with support but no predicted positives scores F1 = 0;
    classes absent from the labels are excluded from the mean.
    """
    pred = np.asarray(pred, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    support = np.bincount(labels, minlength=num_classes)
    if not support.any():
        raise ValueError("macro F1 undefined: no class has support")
    tp = np.bincount(labels[pred == labels], minlength=num_classes)
    predicted = np.bincount(pred, minlength=num_classes)
    # 2TP / (2TP + FP + FN) = 2TP / (predicted + support)
    denom = predicted + support
    f1 = np.zeros(num_classes, dtype=np.float64)
    np.divide(2.0 * tp, denom, out=f1, where=denom > 0)
    return float(f1[support > 0].mean())


def brier(z: np.ndarray, labels: np.ndarray) -> float:
    """Mean squared distance between softmax(z) and the one-hot labels."""
    probs = softmax(z)
    labels = np.asarray(labels, dtype=np.int64)
    sq = np.square(probs).sum(axis=1)
    true_p = probs[np.arange(probs.shape[0]), labels]
    return float(np.mean(sq - 2.0 * true_p + 1.0))


def ece(scored: ScoredPredictions, num_bins: int = 15) -> CalibrationReport:
    """Expected calibration error over equal-width confidence bins."""
    if num_bins < 1:
        raise ValueError(f"num_bins must be >= 1, got {num_bins}")
    conf = np.asarray(scored.confidence, dtype=np.float64)
    correct = np.asarray(scored.correct, dtype=np.float64)
    n = conf.shape[0]
    if n == 0:
        raise ValueError("ECE undefined on empty input")
    edges = np.linspace(0.0, 1.0, num_bins + 1)
    # Right-closed bins (lo, hi]; confidence exactly 0 joins the first bin.
    idx = np.clip(np.searchsorted(edges, conf, side="left") - 1, 0, num_bins - 1)
    bins: list[tuple[float, float, int, float, float]] = []
    total = 0.0
    for b in range(num_bins):
        mask = idx == b
        count = int(mask.sum())
        if count:
            mean_conf = float(conf[mask].mean())
            emp_acc = float(correct[mask].mean())
            total += (count / n) * abs(mean_conf - emp_acc)
        else:
            mean_conf = float("nan")
            emp_acc = float("nan")
        bins.append((float(edges[b]), float(edges[b + 1]), count, mean_conf, emp_acc))
    return CalibrationReport(ece=total, bins=bins)


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their group's average rank."""
    order = np.argsort(x, kind="stable")
    sx = x[order]
    boundary = np.empty(sx.shape[0], dtype=bool)
    boundary[0] = True
    np.not_equal(sx[1:], sx[:-1], out=boundary[1:])
    group = np.cumsum(boundary) - 1
    counts = np.bincount(group)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    avg = starts + (counts + 1) / 2.0
    ranks = np.empty(x.shape[0], dtype=np.float64)
    ranks[order] = avg[group]
    return ranks


def auroc_correctness(scored: ScoredPredictions) -> float:
    """Probability that an incorrect sample is more uncertain than a
    correct one, ties counting half. Rank-based, O(N log N)."""
    correct = np.asarray(scored.correct, dtype=bool)
    n_incorrect = int((~correct).sum())
    n_correct = int(correct.sum())
    if n_incorrect == 0 or n_correct == 0:
        raise ValueError(
            "correctness AUROC undefined: need at least one correct and one "
            "incorrect sample")
    ranks = _average_ranks(np.asarray(scored.uncertainty, dtype=np.float64))
    rank_sum = float(ranks[~correct].sum())
    u = rank_sum - n_incorrect * (n_incorrect + 1) / 2.0
    return float(u / (n_incorrect * n_correct))


def risk_coverage(scored: ScoredPredictions,
                  sac_targets: Sequence[float] = DEFAULT_SAC_TARGETS,
                  ) -> RiskCoverageCurve:
    """Risk-coverage curve from sorting by uncertainty, ascending.

    Ties keep input order (stable sort), so the curve is deterministic.
    """
    n = len(scored)
    if n == 0:
        raise ValueError("risk-coverage undefined on empty input")
    order = np.argsort(scored.uncertainty, kind="stable")
    correct_sorted = np.asarray(scored.correct, dtype=np.float64)[order]
    counts = np.arange(1, n + 1, dtype=np.float64)
    errors = np.cumsum(1.0 - correct_sorted)
    risk = errors / counts
    prefix_acc = (counts - errors) / counts
    coverage = counts / n
    sac = {}
    for target in sac_targets:
        hit = np.flatnonzero(prefix_acc >= target)
        sac[float(target)] = float(coverage[hit[-1]]) if hit.size else 0.0
    return RiskCoverageCurve(
        coverage=coverage, risk=risk, aurc=float(risk.mean()), sac=sac)


def sac(curve: RiskCoverageCurve, target: float) -> float:
    """Largest coverage whose prefix accuracy meets the target, else 0."""
    acc = 1.0 - curve.risk
    hit = np.flatnonzero(acc >= target)
    return float(curve.coverage[hit[-1]]) if hit.size else 0.0


def evaluate(data: BundlePair | LogitBundle, mode: AggregationMode,
             measure: Measure = "softmax_response",
             sac_targets: Sequence[float] = DEFAULT_SAC_TARGETS) -> MetricRow:
    """Full metric row for one mode on test-split data.

    Duo modes take a BundlePair; a bare LogitBundle is only meaningful in
    SingleScaled mode. The probabilistic metrics (nll, brier, ece) for
    the uq_only mode are computed from the combined distribution, the
    same object its uncertainty is read from.
    """
    if isinstance(data, BundlePair):
        meta = data.large.meta
        if meta.split != "test":
            raise ValueError(
                f"evaluate requires test-split data, got split {meta.split!r}")
        z = mode_logits(data, mode)
        scored = score_duo(data, mode, measure)
        labels = data.large.labels
        small_name = "" if isinstance(mode, SingleScaled) else data.small.meta.model_name
        balance = 0.0 if isinstance(mode, SingleScaled) else flops_balance(data)
    else:
        meta = data.meta
        if meta.split != "test":
            raise ValueError(
                f"evaluate requires test-split data, got split {meta.split!r}")
        if not isinstance(mode, SingleScaled):
            raise ValueError(
                f"a bare bundle only supports single mode, got {mode.tag!r}")
        z = mode.scale * data.logits.astype(np.float64)
        scored = score(z, data.labels, measure)
        labels = data.labels
        small_name = ""
        balance = 0.0
    curve = risk_coverage(scored, sac_targets)
    return MetricRow(
        dataset=meta.dataset,
        split=meta.split,
        large_model=meta.model_name,
        small_model=small_name,
        balance=float(balance),
        mode=mode.tag,
        measure=measure,
        accuracy=accuracy(scored),
        macro_f1=macro_f1(scored.pred, labels, meta.num_classes),
        nll=nll(z, labels),
        brier=brier(z, labels),
        ece=ece(scored).ece,
        auroc=auroc_correctness(scored),
        aurc=curve.aurc,
        sac=curve.sac,
    )
