"""Job descriptions for logit dumps.

A job names a zoo model, an image folder, and an output bundle
directory, plus enough knobs to pin the run down exactly (weights,
seed, which subset of the folder). Jobs are plain JSON on disk.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .errors import HarnessError

VALID_SPLITS = ("val", "test")


@dataclasses.dataclass(frozen=True)
class HarnessJob:
    model: str
    data_root: str
    dataset: str
    split: str
    out: str
    batch_size: int = 32
    device: str = "cpu"
    pretrained: bool = False
    seed: int = 0
    # optional subset selection; at most one of the two
    files: tuple[str, ...] | None = None
    index_range: tuple[int, int] | None = None
    # profile overrides; published profile is used when unset
    flops: float | None = None
    params: int | None = None

    def __post_init__(self):
        if not self.model:
            raise HarnessError("job: model name must be non-empty")
        if self.split not in VALID_SPLITS:
            raise HarnessError(
                f"job: split must be one of {VALID_SPLITS}, got {self.split!r}")
        if self.batch_size < 1:
            raise HarnessError(
                f"job: batch_size must be >= 1, got {self.batch_size}")
        if self.files is not None and self.index_range is not None:
            raise HarnessError("job: give files or index_range, not both")
        if self.files is not None:
            object.__setattr__(self, "files", tuple(self.files))
        if self.index_range is not None:
            lo, hi = self.index_range
            object.__setattr__(self, "index_range", (int(lo), int(hi)))
        if self.flops is not None and not self.flops > 0:
            raise HarnessError(f"job: flops override must be > 0, got {self.flops}")
        if self.params is not None and not self.params > 0:
            raise HarnessError(
                f"job: params override must be > 0, got {self.params}")


_JOB_FIELDS = {f.name for f in dataclasses.fields(HarnessJob)}


def job_from_json(path) -> HarnessJob:
    """Load a job file, rejecting unknown keys so typos fail loudly."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise HarnessError(f"{path}: cannot read job file: {exc}")
    except json.JSONDecodeError as exc:
        raise HarnessError(f"{path}: invalid JSON: {exc}")
    if not isinstance(raw, dict):
        raise HarnessError(f"{path}: job file must hold a JSON object")
    unknown = sorted(set(raw) - _JOB_FIELDS)
    if unknown:
        raise HarnessError(f"{path}: unknown job keys: {', '.join(unknown)}")
    missing = [k for k in ("model", "data_root", "dataset", "split", "out")
               if k not in raw]
    if missing:
        raise HarnessError(f"{path}: missing job keys: {', '.join(missing)}")
    return HarnessJob(**raw)
