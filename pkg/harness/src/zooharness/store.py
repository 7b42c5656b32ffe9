"""Writer for logit bundle directories.

A bundle is meta.json plus two flat binary payloads: logits.f32
(little-endian float32, row-major, shape (N, K)) and labels.u32
(little-endian uint32, shape (N,)). The layout is the interchange
format the duo toolkit consumes; this module owns the producing side
and never imports the consumer. meta.json may carry extra provenance
keys beyond the required ones, which readers are expected to ignore.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import HarnessError

FORMAT_VERSION = 1
META_FILE = "meta.json"
LOGITS_FILE = "logits.f32"
LABELS_FILE = "labels.u32"
VALID_SPLITS = ("val", "test")


def write_bundle(path, *, model_name: str, dataset: str, split: str,
                 logits: np.ndarray, labels: np.ndarray, flops: float,
                 params: int, extra: dict | None = None) -> Path:
    """Write one model's logits for one split; returns the directory."""
    logits = np.ascontiguousarray(logits, dtype=np.float32)
    labels_arr = np.asarray(labels)
    if labels_arr.dtype.kind not in "ui" or (labels_arr < 0).any():
        raise HarnessError("labels must be non-negative integers")
    labels = np.ascontiguousarray(labels_arr, dtype=np.uint32)
    if logits.ndim != 2:
        raise HarnessError(f"logits must be 2-D, got shape {logits.shape}")
    n, k = logits.shape
    if n < 1 or k < 2:
        raise HarnessError(f"need at least 1 sample and 2 classes, got {logits.shape}")
    if labels.shape != (n,):
        raise HarnessError(
            f"labels shape {labels.shape} does not match {n} logit rows")
    if not np.isfinite(logits).all():
        bad = int(np.flatnonzero(~np.isfinite(logits.ravel()))[0])
        raise HarnessError(f"non-finite logit at flat index {bad}")
    if (labels >= k).any():
        bad = int(np.flatnonzero(labels >= k)[0])
        raise HarnessError(
            f"label {int(labels[bad])} at index {bad} out of range for "
            f"{k} classes")
    if split not in VALID_SPLITS:
        raise HarnessError(f"split must be one of {VALID_SPLITS}, got {split!r}")
    if not (np.isfinite(flops) and flops >= 0):
        raise HarnessError(f"flops must be finite and >= 0, got {flops}")
    if params < 0:
        raise HarnessError(f"params must be >= 0, got {params}")

    meta = {
        "format_version": FORMAT_VERSION,
        "model_name": model_name,
        "dataset": dataset,
        "split": split,
        "num_samples": n,
        "num_classes": k,
        "flops": float(flops),
        "params": int(params),
    }
    for key, value in (extra or {}).items():
        if key in meta:
            raise HarnessError(f"extra meta key {key!r} shadows a required key")
        meta[key] = value

    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / META_FILE).write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n")
    (path / LOGITS_FILE).write_bytes(logits.astype("<f4").tobytes())
    (path / LABELS_FILE).write_bytes(labels.astype("<u4").tobytes())
    return path


def read_bundle(path) -> tuple[dict, np.ndarray, np.ndarray]:
    """Read back (meta, logits, labels) for round-trip checks."""
    path = Path(path)
    meta = json.loads((path / META_FILE).read_text())
    n, k = meta["num_samples"], meta["num_classes"]
    logits = np.frombuffer((path / LOGITS_FILE).read_bytes(),
                           dtype="<f4").reshape(n, k)
    labels = np.frombuffer((path / LABELS_FILE).read_bytes(), dtype="<u4")
    return meta, logits.astype(np.float32), labels.astype(np.uint32)
