"""On-disk logit bundle format: loading, validation, and cost bookkeeping.

A bundle is a directory holding the outputs of one model over one dataset
split:

    meta.json    header (model name, dataset, split, sizes, flops, params)
    logits.f32   row-major N x K matrix, little-endian IEEE-754 float32
    labels.u32   length-N class indices, little-endian uint32

The format is deliberately dumb: fixed-width binary next to a tiny JSON
header, writable from any language, and bit-exact under a save/load round
trip. Validation is total: every malformed input is rejected with a
structured error, and payload defects (truncation, non-finite values,
out-of-range labels) are reported with the byte offset of the offending
value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1

META_FILE = "meta.json"
LOGITS_FILE = "logits.f32"
LABELS_FILE = "labels.u32"

VALID_SPLITS = ("val", "test")

_META_FIELDS = {
    "model_name": str,
    "dataset": str,
    "split": str,
    "num_classes": int,
    "num_samples": int,
    "flops": (int, float),
    "params": int,
}


class BundleFormatError(ValueError):
    """A bundle directory, header, or payload failed validation."""

    def __init__(self, message: str, *, path: str | Path | None = None,
                 offset: int | None = None):
        if path is not None:
            message = f"{path}: {message}"
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.path = None if path is None else str(path)
        self.offset = offset


@dataclass(frozen=True)
class ModelMeta:
    """Header describing one model's outputs on one dataset split.

    ``flops`` is the cost of a single forward pass as reported by the
    producer; it is recorded verbatim and never recomputed here.
    """

    model_name: str
    dataset: str
    split: str
    num_classes: int
    num_samples: int
    flops: float
    params: int

    def __post_init__(self) -> None:
        if self.split not in VALID_SPLITS:
            raise BundleFormatError(
                f"split must be one of {list(VALID_SPLITS)}, got {self.split!r}")
        if self.num_classes < 2:
            raise BundleFormatError(
                f"num_classes must be >= 2, got {self.num_classes}")
        if self.num_samples < 1:
            raise BundleFormatError(
                f"num_samples must be >= 1, got {self.num_samples}")
        if not np.isfinite(self.flops) or self.flops < 0:
            raise BundleFormatError(
                f"flops must be finite and non-negative, got {self.flops!r}")
        if self.params < 0:
            raise BundleFormatError(f"params must be >= 0, got {self.params}")


@dataclass(frozen=True)
class LogitBundle:
    """In-memory bundle: header plus logit matrix and label vector.

    Arrays are canonicalized to the storage dtypes (float32 logits,
    uint32 labels) and marked read-only, so a loaded bundle can be shared
    across threads without copying.
    """

    meta: ModelMeta
    logits: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        n, k = self.meta.num_samples, self.meta.num_classes
        logits = np.ascontiguousarray(self.logits, dtype=np.float32)
        if logits.shape != (n, k):
            raise BundleFormatError(
                f"logits shape {tuple(np.shape(self.logits))} does not match "
                f"header ({n}, {k})")
        raw_labels = np.asarray(self.labels)
        if not np.issubdtype(raw_labels.dtype, np.integer):
            raise BundleFormatError(
                f"labels must be integers, got dtype {raw_labels.dtype}")
        labels = np.ascontiguousarray(raw_labels, dtype=np.uint32)
        if labels.shape != (n,):
            raise BundleFormatError(
                f"labels shape {tuple(raw_labels.shape)} does not match header ({n},)")
        bad = np.flatnonzero(~np.isfinite(logits))
        if bad.size:
            i = int(bad[0])
            raise BundleFormatError(
                f"non-finite logit at row {i // k}, class {i % k}",
                offset=4 * i)
        bad = np.flatnonzero(labels >= k)
        if bad.size:
            i = int(bad[0])
            raise BundleFormatError(
                f"label out of range at index {i}: {int(labels[i])} >= {k}",
                offset=4 * i)
        logits.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "labels", labels)


@dataclass(frozen=True)
class BundlePair:
    """A large/small bundle pair over the same split of the same dataset."""

    large: LogitBundle
    small: LogitBundle

    def __post_init__(self) -> None:
        lm, sm = self.large.meta, self.small.meta
        if lm.dataset != sm.dataset:
            raise BundleFormatError(
                f"dataset mismatch: {lm.dataset!r} vs {sm.dataset!r}")
        if lm.split != sm.split:
            raise BundleFormatError(f"split mismatch: {lm.split!r} vs {sm.split!r}")
        if lm.num_classes != sm.num_classes:
            raise BundleFormatError(
                f"class count mismatch: {lm.num_classes} vs {sm.num_classes}")
        if lm.num_samples != sm.num_samples:
            raise BundleFormatError(
                f"sample count mismatch: {lm.num_samples} vs {sm.num_samples}")
        if not np.array_equal(self.large.labels, self.small.labels):
            raise BundleFormatError("label vectors differ between members")
        if lm.flops < sm.flops:
            raise BundleFormatError(
                f"large member reports fewer FLOPs than small "
                f"({lm.flops} < {sm.flops})")


def load_bundle(path: str | Path) -> LogitBundle:
    """Load and fully validate a bundle directory."""
    root = Path(path)
    meta_path = root / META_FILE
    if not meta_path.is_file():
        raise BundleFormatError("missing file", path=meta_path)
    try:
        raw = json.loads(meta_path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BundleFormatError(f"invalid JSON: {exc}", path=meta_path) from exc
    if not isinstance(raw, dict):
        raise BundleFormatError("header must be a JSON object", path=meta_path)
    version = raw.get("format_version")
    if version != FORMAT_VERSION:
        raise BundleFormatError(
            f"unsupported version: {version!r} (expected {FORMAT_VERSION})",
            path=meta_path)
    fields = {}
    for name, types in _META_FIELDS.items():
        if name not in raw:
            raise BundleFormatError(f"header missing key {name!r}", path=meta_path)
        value = raw[name]
        if isinstance(value, bool) or not isinstance(value, types):
            raise BundleFormatError(
                f"header key {name!r} has invalid type {type(value).__name__}",
                path=meta_path)
        fields[name] = value
    try:
        meta = ModelMeta(**fields)
    except BundleFormatError as exc:
        raise BundleFormatError(f"invalid header: {exc}", path=meta_path) from exc

    n, k = meta.num_samples, meta.num_classes
    logits_path = root / LOGITS_FILE
    if not logits_path.is_file():
        raise BundleFormatError("missing file", path=logits_path)
    blob = logits_path.read_bytes()
    expected = 4 * n * k
    if len(blob) != expected:
        raise BundleFormatError(
            f"payload size mismatch: expected {expected} bytes for "
            f"{n}x{k} float32, found {len(blob)}", path=logits_path)
    logits = np.frombuffer(blob, dtype="<f4").reshape(n, k)

    labels_path = root / LABELS_FILE
    if not labels_path.is_file():
        raise BundleFormatError("missing file", path=labels_path)
    blob = labels_path.read_bytes()
    if len(blob) != 4 * n:
        raise BundleFormatError(
            f"payload size mismatch: expected {4 * n} bytes for {n} uint32, "
            f"found {len(blob)}", path=labels_path)
    labels = np.frombuffer(blob, dtype="<u4")

    bad = np.flatnonzero(~np.isfinite(logits))
    if bad.size:
        i = int(bad[0])
        raise BundleFormatError(
            f"non-finite logit at row {i // k}, class {i % k}",
            path=logits_path, offset=4 * i)
    bad = np.flatnonzero(labels >= k)
    if bad.size:
        i = int(bad[0])
        raise BundleFormatError(
            f"label out of range at index {i}: {int(labels[i])} >= {k}",
            path=labels_path, offset=4 * i)
    return LogitBundle(meta=meta, logits=logits, labels=labels)


def save_bundle(bundle: LogitBundle, path: str | Path) -> None:
    """Write a bundle directory; the result reloads bit-identically."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    meta = bundle.meta
    header = {
        "model_name": meta.model_name,
        "dataset": meta.dataset,
        "split": meta.split,
        "num_classes": meta.num_classes,
        "num_samples": meta.num_samples,
        "flops": float(meta.flops),
        "params": meta.params,
        "format_version": FORMAT_VERSION,
    }
    (root / META_FILE).write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    (root / LOGITS_FILE).write_bytes(
        np.ascontiguousarray(bundle.logits, dtype="<f4").tobytes())
    (root / LABELS_FILE).write_bytes(
        np.ascontiguousarray(bundle.labels, dtype="<u4").tobytes())


def flops_balance(pair: BundlePair) -> float:
    """Compute-cost ratio small/large from recorded forward-pass FLOPs.

    Scale-invariant in the FLOPs unit. The large member must report a
    positive cost; a free small member (0 FLOPs) is allowed and gives 0.
    """
    large = pair.large.meta.flops
    if large <= 0:
        raise ValueError(
            "flops balance undefined: large member reports non-positive FLOPs")
    return pair.small.meta.flops / large
