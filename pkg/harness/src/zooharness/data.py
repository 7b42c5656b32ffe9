"""Image folder listing and loading in a fixed, documented order.

The listing walks class directories in sorted name order and files in
sorted name order within each class, so the i-th logit row always
corresponds to the i-th listed image. Class indices follow the sorted
directory order. Decode problems abort loudly; nothing is skipped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .errors import HarnessError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".webp")

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImageListing:
    classes: tuple[str, ...]
    files: tuple[Path, ...]   # absolute paths, listed order
    labels: np.ndarray        # uint32, one per file

    def __len__(self):
        return len(self.files)


def _full_listing(root: Path) -> tuple[tuple[str, ...], list[tuple[Path, int]]]:
    classes = tuple(sorted(d.name for d in root.iterdir() if d.is_dir()))
    if not classes:
        raise HarnessError(f"{root}: no class directories")
    samples = []
    for idx, name in enumerate(classes):
        for file in sorted((root / name).iterdir()):
            if file.suffix.lower() in IMAGE_SUFFIXES:
                samples.append((file, idx))
    if not samples:
        raise HarnessError(f"{root}: no images under any class directory")
    return classes, samples


def list_images(root, files=None, index_range=None) -> ImageListing:
    """Resolve the listed order for a dataset root.

    `files` restricts to explicit class-relative paths in the given
    order; `index_range` takes the half-open [lo, hi) slice of the full
    listing. At most one of the two may be set.
    """
    root = Path(root)
    if not root.is_dir():
        raise HarnessError(f"{root}: not a directory")
    if files is not None and index_range is not None:
        raise HarnessError("give either files or index_range, not both")
    classes, samples = _full_listing(root)
    if files is not None:
        class_index = {name: i for i, name in enumerate(classes)}
        picked = []
        for rel in files:
            rel_path = Path(rel)
            if len(rel_path.parts) < 2 or rel_path.parts[0] not in class_index:
                raise HarnessError(
                    f"{rel}: not under a known class directory of {root}")
            full = root / rel_path
            if not full.is_file():
                raise HarnessError(f"{full}: no such image")
            picked.append((full, class_index[rel_path.parts[0]]))
        samples = picked
    elif index_range is not None:
        lo, hi = index_range
        if not (0 <= lo < hi <= len(samples)):
            raise HarnessError(
                f"index_range {index_range} out of bounds for "
                f"{len(samples)} listed images")
        samples = samples[lo:hi]
    if not samples:
        raise HarnessError("empty selection")
    paths = tuple(p for p, _ in samples)
    labels = np.array([i for _, i in samples], dtype=np.uint32)
    return ImageListing(classes=classes, files=paths, labels=labels)


def load_batch(paths, transform) -> torch.Tensor:
    """Decode and transform a batch of images; abort on the first failure."""
    tensors = []
    for path in paths:
        try:
            with Image.open(path) as img:
                tensors.append(transform(img.convert("RGB")))
        except HarnessError:
            raise
        except Exception as exc:
            log.error("cannot decode %s: %s", path, exc)
            raise HarnessError(f"{path}: cannot decode image: {exc}")
    return torch.stack(tensors)
