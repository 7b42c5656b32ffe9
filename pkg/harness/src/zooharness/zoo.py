"""Model, transform, and profile resolution against the torchvision zoo.

Each classification model's default weights enum carries its published
inference transform and profile (GFLOPs, parameter count) as local
metadata, so everything here except an actual pretrained-weight
download works offline.
"""

from __future__ import annotations

import torch
from torchvision import models as tvm

from .errors import HarnessError


def _weights_enum(name: str):
    try:
        return tvm.get_model_weights(name).DEFAULT
    except ValueError:
        known = ", ".join(tvm.list_models(module=tvm)[:8])
        raise HarnessError(
            f"unknown zoo model {name!r} (known models include {known}, ...)")


def published_profile(name: str) -> tuple[float, int]:
    """(flops, params) from the zoo's published profile for a model."""
    meta = _weights_enum(name).meta
    if "_ops" not in meta or "num_params" not in meta:
        raise HarnessError(f"{name}: no published flops/params profile")
    return float(meta["_ops"]) * 1e9, int(meta["num_params"])


def published_transform(name: str):
    """The model's published inference preprocessing, plus a provenance dict."""
    preset = _weights_enum(name).transforms()
    provenance = {
        "crop_size": list(preset.crop_size),
        "resize_size": list(preset.resize_size),
        "mean": list(preset.mean),
        "std": list(preset.std),
        "interpolation": str(preset.interpolation),
    }
    return preset, provenance


def build_model(name: str, *, pretrained: bool, seed: int) -> torch.nn.Module:
    """Instantiate the named model in eval mode.

    pretrained=True loads the default published weights (needs network
    access to the weight host); otherwise parameters are freshly
    initialized from the given seed, which keeps the whole pipeline
    runnable offline and byte-reproducible.
    """
    _weights_enum(name)  # surface unknown-model errors consistently
    if pretrained:
        try:
            model = tvm.get_model(name, weights=tvm.get_model_weights(name).DEFAULT)
        except Exception as exc:
            raise HarnessError(
                f"{name}: pretrained weights not retrievable: {exc}")
    else:
        torch.manual_seed(seed)
        model = tvm.get_model(name, weights=None)
    model.eval()
    return model
