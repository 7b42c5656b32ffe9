"""Temperature fitting by validation negative log likelihood.

The duo objective nll(t_large * A + t_small * B) is a log-sum-exp
composed with a map linear in (t_large, t_small), hence convex on the
non-negative orthant, so a small projected Newton iteration with an
analytic gradient and Hessian finds the global minimum. The same
machinery fits a single multiplicative scale. Fitting only accepts
validation-split bundles; test data never reaches the optimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregate import DuoWeights
from .bundles import BundlePair, LogitBundle, ModelMeta

MAX_ITERATIONS = 500
OBJECTIVE_TOL = 1e-10
GRADIENT_TOL = 1e-8


@dataclass(frozen=True)
class TuneResult:
    weights: DuoWeights
    val_nll: float
    iterations: int
    converged: bool


def nll(z: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log likelihood of softmax(z) at the labels, in nats."""
    z = np.asarray(z, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    m = z.max(axis=1)
    lse = m + np.log(np.exp(z - m[:, None]).sum(axis=1))
    return float(np.mean(lse - z[np.arange(z.shape[0]), labels]))


def _design(pair: BundlePair) -> np.ndarray:
    return np.stack(
        [pair.large.logits.astype(np.float64),
         pair.small.logits.astype(np.float64)], axis=2)


def _objective(design: np.ndarray, labels: np.ndarray,
               t: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """NLL with gradient and Hessian at weights t, where z = design @ t.

    With p = softmax(z) and rows d of the design, grad_j is the mean of
    (p - onehot(y)) . d_j and hess_jk the mean of the softmax covariance
    quadratic form d_j' (diag(p) - p p') d_k.
    """
    n = design.shape[0]
    z = design @ t
    m = z.max(axis=1)
    ez = np.exp(z - m[:, None])
    sez = ez.sum(axis=1)
    p = ez / sez[:, None]
    rows = np.arange(n)
    value = float(np.mean(np.log(sez) + m - z[rows, labels]))
    u = np.einsum("nk,nkm->nm", p, design)
    grad = (u - design[rows, labels, :]).mean(axis=0)
    hess = (np.einsum("nk,nki,nkj->ij", p, design, design) - u.T @ u) / n
    return value, grad, hess


def _projected_newton(design: np.ndarray, labels: np.ndarray,
                      t0: np.ndarray) -> tuple[np.ndarray, float, int, bool, list[float]]:
    """Minimize the convex NLL over t >= 0 from t0.

    Damped Newton on the free coordinates (those not pinned at the
    boundary with an outward gradient), with projected backtracking so
    the objective never increases. Stops when the projected gradient norm
    drops below GRADIENT_TOL or an accepted step improves by less than
    OBJECTIVE_TOL.
    """
    t = np.array(t0, dtype=np.float64)
    value, grad, hess = _objective(design, labels, t)
    history = [value]
    iterations = 0
    converged = False
    for _ in range(MAX_ITERATIONS):
        free = ~((t <= 0.0) & (grad > 0.0))
        pgrad = np.where(free, grad, 0.0)
        if np.linalg.norm(pgrad) < GRADIENT_TOL:
            converged = True
            break
        step = np.zeros_like(t)
        idx = np.flatnonzero(free)
        hf = hess[np.ix_(idx, idx)]
        gf = grad[idx]
        damp = 1e-12 * max(1.0, float(np.trace(hf)))
        try:
            d = np.linalg.solve(hf + damp * np.eye(idx.size), -gf)
        except np.linalg.LinAlgError:
            d = -gf
        if not np.all(np.isfinite(d)) or float(d @ gf) >= 0.0:
            d = -gf
        step[idx] = d

        alpha = 1.0
        accepted = None
        for _bt in range(60):
            cand = np.maximum(t + alpha * step, 0.0)
            cand_value, cand_grad, cand_hess = _objective(design, labels, cand)
            if cand_value <= value:
                accepted = (cand, cand_value, cand_grad, cand_hess)
                break
            alpha *= 0.5
        if accepted is None:
            converged = True  # no descent left at float resolution
            break
        iterations += 1
        improvement = value - accepted[1]
        t, value, grad, hess = accepted
        history.append(value)
        if improvement < OBJECTIVE_TOL:
            converged = True
            break
    return t, value, iterations, converged, history


def _require_val(meta: ModelMeta) -> None:
    if meta.split != "val":
        raise ValueError(
            f"temperature fitting requires validation-split bundles, got "
            f"split {meta.split!r}")


def nll_gradient(pair: BundlePair, weights: DuoWeights) -> tuple[float, float]:
    """Analytic gradient of the duo NLL with respect to both weights."""
    design = _design(pair)
    labels = pair.large.labels.astype(np.int64)
    t = np.array([weights.t_large, weights.t_small], dtype=np.float64)
    _, grad, _ = _objective(design, labels, t)
    return float(grad[0]), float(grad[1])


def fit_duo_temperatures(pair_val: BundlePair) -> TuneResult:
    """Fit (t_large, t_small) minimizing validation NLL from (1, 1).

    The achieved NLL never exceeds the best single-scaled NLL of either
    member, since both live on the boundary of the search space. A much
    weaker small member drives t_small toward 0, reverting the duo to
    its large member.
    """
    _require_val(pair_val.large.meta)
    design = _design(pair_val)
    labels = pair_val.large.labels.astype(np.int64)
    t, value, iterations, converged, _ = _projected_newton(
        design, labels, np.array([1.0, 1.0]))
    return TuneResult(
        weights=DuoWeights(float(t[0]), float(t[1])),
        val_nll=value,
        iterations=iterations,
        converged=converged,
    )


def fit_single_temperature(bundle_val: LogitBundle) -> tuple[float, float]:
    """Fit a multiplicative scale for one model; returns (scale, val_nll).

    The scale multiplies logits directly, so an overconfident model gets
    a scale below 1. This is the reciprocal of the division-style
    temperature convention.
    """
    _require_val(bundle_val.meta)
    design = bundle_val.logits.astype(np.float64)[:, :, None]
    labels = bundle_val.labels.astype(np.int64)
    t, value, _, _, _ = _projected_newton(design, labels, np.array([1.0]))
    return float(t[0]), value
