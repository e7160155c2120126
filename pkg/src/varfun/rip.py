"""Empirical restricted-isometry diagnostics for weighted sample batches.

A batch satisfies the restricted isometry property with constant delta on a
class A when the weighted empirical norm of every unit element stays within
``[1 - delta, 1 + delta]`` of one.  For linear spaces this is a spectral
quantity of the empirical Gramian; for general classes we sample unit
elements, which yields a lower bound on the true constant.  Failure
probabilities over repeated batches decay like ``exp(-(n/2) (delta / k)^2)``
with ``k`` the weighted sup norm of the variation function.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .measure import (
    DomainSpec,
    SampleBatch,
    WeightFunction,
    draw_samples,
    make_rng,
)
from .model import (
    FullSpace,
    LinearSpan,
    ModelClass,
    TangentLowRank,
    tangent_frame,
    unit_sample_batch,
)

__all__ = [
    "SPECTRAL",
    "MC",
    "RipReport",
    "RipProbEstimate",
    "rip_delta_linear",
    "rip_delta_mc",
    "rip_probability",
    "wilson_interval",
]

SPECTRAL = "SPECTRAL"
MC = "MC"

_SPECTRAL_DIM_MAX = 1000
_MC_BLOCK = 256
_WILSON_Z = 1.959963984540054  # two-sided 95%


@dataclass(frozen=True)
class RipReport:
    """Restricted-isometry constant of one batch on one class."""

    delta_hat: float
    min_ratio: float
    max_ratio: float
    method: str
    dim: int | None
    n: int


def _design_matrix(space: ModelClass, batch: SampleBatch) -> np.ndarray:
    if isinstance(space, LinearSpan):
        return space.basis.design_matrix(batch.points, space.indices)
    if isinstance(space, TangentLowRank):
        return space.basis.kernel_rows(batch.points) @ tangent_frame(space).T
    if isinstance(space, FullSpace):
        return space.basis.kernel_rows(batch.points)
    raise ValueError(
        "spectral restricted-isometry constants need a linear space "
        f"(got {type(space).__name__})"
    )


def rip_delta_linear(space: ModelClass, batch: SampleBatch) -> RipReport:
    """Exact constant on a linear space via the empirical Gramian spectrum.

    ``G = (1/n) sum_i w_i b(y^i) b(y^i)^T`` over an orthonormal basis of the
    space; the constant is the largest deviation of an eigenvalue from one.
    """
    design = _design_matrix(space, batch)
    dim = design.shape[1]
    if dim > _SPECTRAL_DIM_MAX:
        raise ValueError(f"spectral path limited to spaces of dimension {_SPECTRAL_DIM_MAX}")
    gram = design.T @ (batch.weights[:, None] * design) / batch.n
    eigs = np.linalg.eigvalsh(gram)
    lo, hi = float(eigs[0]), float(eigs[-1])
    return RipReport(
        delta_hat=max(1.0 - lo, hi - 1.0),
        min_ratio=lo, max_ratio=hi, method=SPECTRAL, dim=dim, n=batch.n,
    )


def rip_delta_mc(
    model: ModelClass, batch: SampleBatch, num_test: int, seed: int
) -> RipReport:
    """Lower bound on the constant from sampled unit elements.

    Draws arrive in fixed-size blocks from a single derived stream, so the
    estimate is monotone in `num_test` for a fixed seed.
    """
    if num_test < 1:
        raise ValueError("num_test must be >= 1")
    kern = model.basis.kernel_rows(batch.points)  # (n, ambient)
    rng = make_rng(seed)
    lo, hi = math.inf, -math.inf
    remaining = num_test
    while remaining > 0:
        rows = unit_sample_batch(model, _MC_BLOCK, rng)
        take = min(remaining, _MC_BLOCK)
        vals = rows[:take] @ kern.T
        norms2 = np.mean(batch.weights[None, :] * vals**2, axis=1)
        lo = min(lo, float(np.min(norms2)))
        hi = max(hi, float(np.max(norms2)))
        remaining -= take
    return RipReport(
        delta_hat=max(1.0 - lo, hi - 1.0),
        min_ratio=lo, max_ratio=hi, method=MC, dim=None, n=batch.n,
    )


@dataclass(frozen=True)
class RipProbEstimate:
    """Empirical failure rate of the restricted isometry over many batches."""

    n: int
    delta: float
    trials: int
    failures: int
    rate: float
    wilson_low: float
    wilson_high: float
    hoeffding_exponent: float
    sup_norm_w: float
    seed: int
    method: str


def wilson_interval(failures: int, trials: int, z: float = _WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= failures <= trials:
        raise ValueError("failures must lie in [0, trials]")
    p = failures / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials)) / denom
    return center - half, center + half


def rip_probability(
    model: ModelClass,
    weight: WeightFunction,
    n: int,
    delta: float,
    trials: int,
    seed: int,
    sup_norm_w: float,
    method: str = SPECTRAL,
    num_test: int = 1024,
    threads: int = 1,
) -> RipProbEstimate:
    """Estimate the probability that a batch of size `n` violates the RIP.

    Trial ``t`` draws its batch with seed ``seed + t``, so serial and
    concurrent execution produce identical counters.  `sup_norm_w` is the
    weighted sup norm of the class's variation function and only enters the
    reported concentration exponent ``(n/2) (delta / sup_norm_w)^2``.
    """
    if not 0.0 < delta:
        raise ValueError("delta must be positive")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    domain = DomainSpec(model.num_modes)

    def one_trial(t: int) -> bool:
        batch = draw_samples(domain, weight, n, seed + t)
        if method == SPECTRAL:
            report = rip_delta_linear(model, batch)
        elif method == MC:
            report = rip_delta_mc(model, batch, num_test, seed + t)
        else:
            raise ValueError(f"unknown method {method!r}")
        return report.delta_hat > delta

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one_trial, range(trials)))
    else:
        outcomes = [one_trial(t) for t in range(trials)]
    failures = int(np.sum(outcomes))
    low, high = wilson_interval(failures, trials)
    exponent = 0.5 * n * (delta / sup_norm_w) ** 2
    return RipProbEstimate(
        n=n, delta=delta, trials=trials, failures=failures,
        rate=failures / trials, wilson_low=low, wilson_high=high,
        hoeffding_exponent=exponent, sup_norm_w=sup_norm_w, seed=seed, method=method,
    )
