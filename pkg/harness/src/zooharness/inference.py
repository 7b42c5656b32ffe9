"""Batched inference: run a job's model over its image folder and
write the resulting logit bundle.

The bundle is only written after every batch has succeeded, so a
decode or forward failure leaves no partial output behind.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import torch

from .data import list_images, load_batch
from .errors import HarnessError
from .jobs import HarnessJob
from .store import write_bundle
from .zoo import build_model, published_profile, published_transform

log = logging.getLogger(__name__)


def _check_device(device: str):
    if device == "cpu":
        return
    if device.startswith("cuda") and not torch.cuda.is_available():
        raise HarnessError(f"device {device!r} requested but cuda is unavailable")


def dump_logits(job: HarnessJob, model: torch.nn.Module | None = None) -> Path:
    """Execute one dump job; returns the written bundle directory.

    A prebuilt model can be injected (the soup path does this); the
    published transform for job.model is applied either way, so the
    injected model must share that architecture's input contract.
    """
    flops, params = published_profile(job.model)
    if job.flops is not None:
        flops = job.flops
    if job.params is not None:
        params = job.params
    transform, transform_meta = published_transform(job.model)

    listing = list_images(job.data_root, files=job.files,
                          index_range=job.index_range)
    _check_device(job.device)
    if model is None:
        model = build_model(job.model, pretrained=job.pretrained, seed=job.seed)
    model = model.to(job.device)
    model.eval()

    rows = []
    with torch.no_grad():
        for start in range(0, len(listing), job.batch_size):
            paths = listing.files[start:start + job.batch_size]
            batch = load_batch(paths, transform).to(job.device)
            out = model(batch)
            if out.ndim != 2:
                raise HarnessError(
                    f"{job.model}: expected 2-D logits, got shape {tuple(out.shape)}")
            rows.append(out.cpu().to(torch.float32).numpy())
            log.info("ran batch %d..%d of %d", start, start + len(paths),
                     len(listing))
    logits = np.concatenate(rows, axis=0)

    if job.files is not None:
        split_definition = {"kind": "files", "count": len(job.files),
                            "disjointness": "caller-asserted"}
    elif job.index_range is not None:
        split_definition = {"kind": "range",
                            "lo": job.index_range[0], "hi": job.index_range[1],
                            "disjointness": "caller-asserted"}
    else:
        split_definition = {"kind": "all", "disjointness": "caller-asserted"}
    extra = {
        "source": "torchvision",
        "weights": "pretrained" if job.pretrained else f"seeded-{job.seed}",
        "transform": transform_meta,
        "classes": list(listing.classes),
        "split_definition": split_definition,
    }
    return write_bundle(
        job.out,
        model_name=job.model,
        dataset=job.dataset,
        split=job.split,
        logits=logits,
        labels=listing.labels,
        flops=flops,
        params=params,
        extra=extra,
    )
