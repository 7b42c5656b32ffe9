"""Logit-space toolkit for pairing a large classifier with a cheap
sidekick: temperature-weighted aggregation, NLL-based temperature
fitting, calibration and selective-classification metrics, an on-disk
logit bundle format, and a synthetic classifier-pair simulator."""

from .aggregate import (AggregationMode, DuoWeights, Measure, ScoredPredictions,
                        SingleScaled, UnweightedDuo, UQOnlyDuo, WeightedDuo,
                        combine_logits, ensemble_average, mode_logits, score,
                        score_duo, softmax)
from .bundles import (BundleFormatError, BundlePair, LogitBundle, ModelMeta,
                      flops_balance, load_bundle, save_bundle)
from .metrics import (CalibrationReport, MetricRow, RiskCoverageCurve, accuracy,
                      auroc_correctness, brier, ece, evaluate, macro_f1,
                      risk_coverage, sac)
from .simulate import SimSpec, describe, generate
from .tune import (TuneResult, fit_duo_temperatures, fit_single_temperature,
                   nll, nll_gradient)

__version__ = "0.1.0"

__all__ = [
    "AggregationMode", "BundleFormatError", "BundlePair", "CalibrationReport",
    "DuoWeights", "LogitBundle", "Measure", "MetricRow", "ModelMeta",
    "RiskCoverageCurve", "ScoredPredictions", "SimSpec", "SingleScaled",
    "TuneResult", "UnweightedDuo", "UQOnlyDuo", "WeightedDuo", "accuracy",
    "auroc_correctness", "brier", "combine_logits", "describe", "ece",
    "ensemble_average", "evaluate", "fit_duo_temperatures",
    "fit_single_temperature", "flops_balance", "generate", "load_bundle",
    "macro_f1", "mode_logits", "nll", "nll_gradient", "risk_coverage", "sac",
    "save_bundle", "score", "score_duo", "softmax",
]
