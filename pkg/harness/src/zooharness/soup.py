"""Greedy weight averaging over a pool of fine-tuned checkpoints.

Candidates are tried best-first; one joins the soup only if the
uniform average including it does not score worse than the soup so
far. The recipe follows the usual greedy-soup construction.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable

import torch

from .errors import HarnessError
from .inference import dump_logits
from .jobs import HarnessJob
from .zoo import build_model

StateDict = dict


def _check_same_architecture(candidates):
    ref = candidates[0][0]
    ref_keys = set(ref)
    for i, (sd, _) in enumerate(candidates[1:], start=1):
        if set(sd) != ref_keys:
            raise HarnessError(
                f"soup candidate {i}: state dict keys differ from candidate 0")
        for key in ref_keys:
            if sd[key].shape != ref[key].shape:
                raise HarnessError(
                    f"soup candidate {i}: shape mismatch at {key!r} "
                    f"({tuple(sd[key].shape)} vs {tuple(ref[key].shape)})")


def _average(ingredients: list[StateDict]) -> StateDict:
    out = {}
    first = ingredients[0]
    for key, ref in first.items():
        if ref.is_floating_point():
            stacked = torch.stack([sd[key].to(torch.float64)
                                   for sd in ingredients])
            out[key] = stacked.mean(dim=0).to(ref.dtype)
        else:
            # integer buffers (e.g. batchnorm step counters) cannot be
            # meaningfully averaged; keep the best ingredient's copy
            out[key] = ref.clone()
    return out


def greedy_soup(candidates: list[tuple[StateDict, float]],
                evaluator: Callable[[StateDict], float]) -> StateDict:
    """Average checkpoints greedily, guided by the evaluator score.

    candidates are (state_dict, validation_score) pairs with higher
    scores better. The evaluator scores a tentative averaged state
    dict on the same scale.
    """
    if not candidates:
        raise HarnessError("soup: no candidates given")
    _check_same_architecture(candidates)
    ordered = sorted(candidates, key=lambda pair: pair[1], reverse=True)
    ingredients = [ordered[0][0]]
    soup = _average(ingredients)
    score = evaluator(soup)
    for sd, _ in ordered[1:]:
        tentative = _average(ingredients + [sd])
        tentative_score = evaluator(tentative)
        if tentative_score >= score:
            ingredients.append(sd)
            soup = tentative
            score = tentative_score
    return soup


def soup_to_bundle(soup: StateDict, job: HarnessJob) -> Path:
    """Load a souped state dict into the job's architecture and dump it."""
    model = build_model(job.model, pretrained=False, seed=job.seed)
    try:
        model.load_state_dict(soup)
    except RuntimeError as exc:
        raise HarnessError(
            f"soup does not fit architecture {job.model!r}: {exc}")
    model.eval()
    return dump_logits(job, model=model)
