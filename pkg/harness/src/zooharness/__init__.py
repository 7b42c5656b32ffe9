"""Zoo harness: dump image-classifier logit bundles from torchvision
models and build greedy weight soups over checkpoint pools.

The bundle directory format written here (meta.json + logits.f32 +
labels.u32) is the hand-off surface to downstream consumers; nothing
in this package imports them.
"""

from .data import ImageListing, list_images
from .errors import HarnessError
from .inference import dump_logits
from .jobs import HarnessJob, job_from_json
from .soup import greedy_soup, soup_to_bundle
from .store import read_bundle, write_bundle

__all__ = [
    "HarnessError",
    "HarnessJob",
    "ImageListing",
    "dump_logits",
    "greedy_soup",
    "job_from_json",
    "list_images",
    "read_bundle",
    "soup_to_bundle",
    "write_bundle",
]
