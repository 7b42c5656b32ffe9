"""Synthetic classifier-pair simulator with controllable asymmetry.

Each sample draws a true label uniformly, then each member gets an
intended argmax class: the true label if the member's correctness event
fires, otherwise a uniformly random wrong class. Correctness events use
the shared-uniform mixture copula: per sample one shared uniform u, one
coin, and per member its own uniform v. With probability
``error_correlation`` the coin routes both members to u, otherwise each
member judges its own v against its target accuracy. Correlation 1 with
equal accuracies therefore makes the members' correctness events
identical samplewise; correlation 0 makes them independent.

Member logits are ``inflation * (noise * standard_normal(K) + margin at
the intended class)``. With margin well above the noise scale the
realized argmax almost always equals the intended one, so empirical
accuracy concentrates at the target as N grows, while the noise keeps a
margin-proximity signal for uncertainty work.

Randomness comes from numpy's PCG64 via ``np.random.default_rng(seed)``,
a documented, seedable generator whose integer output does not depend on
the platform. Draw order is fixed: for the val block then the test
block, draw labels, u, coin, v_large, v_small, wrong-class offsets for
both members, then the two noise matrices. Identical specs give
bit-identical bundles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundles import BundlePair, LogitBundle, ModelMeta

_NOMINAL_LARGE_PARAMS = 1_000_000


@dataclass(frozen=True)
class SimSpec:
    """Full description of one synthetic run; everything else derives
    from these fields deterministically."""

    num_classes: int
    n_val: int
    n_test: int
    acc_large: float
    acc_small: float
    error_correlation: float = 0.3
    margin: float = 6.0
    noise: float = 1.0
    inflation_large: float = 1.0
    inflation_small: float = 1.0
    balance: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        k = self.num_classes
        if not isinstance(k, int) or k < 2:
            raise ValueError(f"num_classes must be an integer >= 2, got {k!r}")
        if self.n_val < 1 or self.n_test < 1:
            raise ValueError(
                f"n_val and n_test must be positive, got ({self.n_val}, {self.n_test})")
        chance = 1.0 / k
        for name, acc in (("acc_large", self.acc_large), ("acc_small", self.acc_small)):
            if not chance < acc < 1.0:
                raise ValueError(
                    f"{name} must lie strictly between chance (1/{k}) and 1, got {acc}")
        if self.acc_large < self.acc_small:
            raise ValueError(
                f"acc_large must be >= acc_small, got "
                f"{self.acc_large} < {self.acc_small}")
        if not 0.0 <= self.error_correlation <= 1.0:
            raise ValueError(
                f"error_correlation must be in [0, 1], got {self.error_correlation}")
        if not self.margin > 0:
            raise ValueError(f"margin must be positive, got {self.margin}")
        if not self.noise > 0:
            raise ValueError(f"noise must be positive, got {self.noise}")
        if not self.inflation_large > 0 or not self.inflation_small > 0:
            raise ValueError(
                f"confidence inflation must be positive, got "
                f"({self.inflation_large}, {self.inflation_small})")
        if not 0.0 < self.balance <= 1.0:
            raise ValueError(
                f"balance must lie in (0, 1]: the small member needs positive "
                f"FLOPs metadata no larger than the large member's, got {self.balance}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit integer, got {self.seed!r}")


def _member_logits(rng_noise: np.ndarray, intended: np.ndarray,
                   spec: SimSpec, inflation: float) -> np.ndarray:
    z = spec.noise * rng_noise
    z[np.arange(z.shape[0]), intended] += spec.margin
    z *= inflation
    return z


def _split_arrays(rng: np.random.Generator, n: int, spec: SimSpec):
    k = spec.num_classes
    labels = rng.integers(0, k, size=n)
    u = rng.random(n)
    coin = rng.random(n)
    v_large = rng.random(n)
    v_small = rng.random(n)
    wrong_large = rng.integers(0, k - 1, size=n)
    wrong_small = rng.integers(0, k - 1, size=n)
    noise_large = rng.standard_normal((n, k))
    noise_small = rng.standard_normal((n, k))

    shared = coin < spec.error_correlation
    out = {}
    for member, v, wrong, noise, acc, inflation in (
            ("large", v_large, wrong_large, noise_large,
             spec.acc_large, spec.inflation_large),
            ("small", v_small, wrong_small, noise_small,
             spec.acc_small, spec.inflation_small)):
        draw = np.where(shared, u, v)
        correct = draw < acc
        wrong_class = wrong + (wrong >= labels)
        intended = np.where(correct, labels, wrong_class)
        out[member] = _member_logits(noise, intended, spec, inflation)
    return labels, out["large"], out["small"]


def _meta(spec: SimSpec, member: str, split: str, n: int) -> ModelMeta:
    large = member == "large"
    return ModelMeta(
        model_name=f"sim-{member}",
        dataset=f"synthetic-k{spec.num_classes}-seed{spec.seed}",
        split=split,
        num_classes=spec.num_classes,
        num_samples=n,
        flops=1.0 if large else spec.balance,
        params=_NOMINAL_LARGE_PARAMS if large
        else int(round(spec.balance * _NOMINAL_LARGE_PARAMS)),
    )


def generate(spec: SimSpec) -> tuple[BundlePair, BundlePair]:
    """Generate (val, test) bundle pairs; disjoint draws, one stream."""
    rng = np.random.default_rng(spec.seed)
    pairs = []
    for split, n in (("val", spec.n_val), ("test", spec.n_test)):
        labels, z_large, z_small = _split_arrays(rng, n, spec)
        pairs.append(BundlePair(
            large=LogitBundle(_meta(spec, "large", split, n), z_large, labels),
            small=LogitBundle(_meta(spec, "small", split, n), z_small, labels),
        ))
    return pairs[0], pairs[1]


def describe(spec: SimSpec) -> str:
    """Human-readable summary of a spec, including the FLOPs metadata the
    generated bundles will carry."""
    return "\n".join([
        f"synthetic pair, {spec.num_classes} classes, "
        f"{spec.n_val} val / {spec.n_test} test samples",
        f"target accuracy: large {spec.acc_large}, small {spec.acc_small}",
        f"error correlation: {spec.error_correlation}",
        f"margin {spec.margin}, noise {spec.noise}, "
        f"inflation large {spec.inflation_large} / small {spec.inflation_small}",
        f"flops metadata: large 1.0, small {spec.balance} (balance {spec.balance})",
        f"seed: {spec.seed}",
    ])
