"""Reference measure, sampling weights, sample batches, and norms.

The domain is always ``[-1, 1]^M`` carrying the uniform probability measure
``rho``.  Samples are drawn from ``w^{-1} rho`` for a weight function ``w``
normalised so that ``w^{-1}`` integrates to one; the three supported weight
kinds are the unit weight, products of per-mode tabulated densities, and
weights proportional to the reciprocal of a variation function.

All randomness flows through counter-based Philox generators so that derived
streams (``base_seed + trial_index``) are independent and runs are exactly
reproducible.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "UNIFORM",
    "SEPARABLE",
    "FROM_VARIATION",
    "DomainSpec",
    "WeightFunction",
    "SampleBatch",
    "make_rng",
    "gauss_legendre_rule",
    "tensor_quadrature",
    "chebyshev_points",
    "standard_grid",
    "uniform_weight",
    "separable_weight",
    "from_density_weight",
    "draw_samples",
    "empirical_norm",
    "ambient_norm",
    "weighted_sup_norm",
    "normalization_defect",
]

UNIFORM = "UNIFORM"
SEPARABLE = "SEPARABLE"
FROM_VARIATION = "FROM_VARIATION"

QUAD_NODES = 64          # Gauss-Legendre nodes per mode for all integral checks
GRID_POINTS = 129        # per-mode grid size (Chebyshev points, includes the endpoints)
MC_GRID_SIZE = 10_000    # fallback grid for more than three modes
MC_GRID_SEED = 0
SEPARABLE_TABLE = 2048   # tabulation nodes for per-mode densities
_REJECTION_CHUNK = 4096


class NumericalError(RuntimeError):
    """A computation failed for numerical (not configuration) reasons."""


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator for the given non-negative integer seed."""
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


@dataclass(frozen=True)
class DomainSpec:
    """Tensor-product domain ``[-1, 1]^M`` with the uniform measure."""

    num_modes: int

    def __post_init__(self):
        if self.num_modes < 1:
            raise ValueError("number of modes must be >= 1")


@functools.lru_cache(maxsize=None)
def gauss_legendre_rule(num_nodes: int = QUAD_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights for the uniform probability measure."""
    nodes, weights = np.polynomial.legendre.leggauss(num_nodes)
    nodes.setflags(write=False)
    weights = weights / 2.0  # reference measure dx/2 instead of dx
    weights.setflags(write=False)
    return nodes, weights


def tensor_quadrature(num_modes: int, num_nodes: int = QUAD_NODES):
    """Tensorised Gauss-Legendre rule; points ``(num_nodes^M, M)``."""
    if num_modes > 3:
        raise ValueError("tensorised quadrature is limited to 3 modes")
    nodes, weights = gauss_legendre_rule(num_nodes)
    grids = np.meshgrid(*([nodes] * num_modes), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    w = weights
    for _ in range(num_modes - 1):
        w = np.multiply.outer(w, weights)
    return points, w.ravel()


def chebyshev_points(num: int = GRID_POINTS) -> np.ndarray:
    """`num` Chebyshev points of ``[-1, 1]`` in increasing order, endpoints included."""
    return np.cos(np.pi * np.arange(num - 1, -1, -1) / (num - 1))


@functools.lru_cache(maxsize=None)
def standard_grid(num_modes: int) -> np.ndarray:
    """Default evaluation grid: tensorised Chebyshev points for up to three
    modes, a fixed-seed Monte-Carlo cloud of uniform points beyond that."""
    if num_modes <= 3:
        axis = chebyshev_points()
        grids = np.meshgrid(*([axis] * num_modes), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
    else:
        pts = make_rng(MC_GRID_SEED).uniform(-1.0, 1.0, size=(MC_GRID_SIZE, num_modes))
    pts.setflags(write=False)
    return pts


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Positive weight ``w`` on the domain with ``int w^{-1} drho = 1``.

    ``SEPARABLE`` weights store per-mode sampling densities tabulated on a
    uniform grid (piecewise-linear interpolation in between, normalised by
    the module quadrature).  ``FROM_VARIATION`` weights store the sampling
    density ``w^{-1}`` as a callable together with a rejection envelope.
    """

    kind: str
    num_modes: int
    mode_nodes: tuple = ()
    mode_densities: tuple = ()
    density: Callable | None = None
    envelope: float | None = None
    note: str = ""

    def evaluate(self, points) -> np.ndarray:
        """Weight values ``w(y^i)`` at the given points."""
        pts = _as_points(points, self.num_modes)
        if self.kind == UNIFORM:
            return np.ones(pts.shape[0])
        if self.kind == SEPARABLE:
            dens = np.ones(pts.shape[0])
            for m in range(self.num_modes):
                dens *= np.interp(pts[:, m], self.mode_nodes[m], self.mode_densities[m])
            return 1.0 / dens
        if self.kind == FROM_VARIATION:
            return 1.0 / np.asarray(self.density(pts), dtype=float)
        raise ValueError(f"unknown weight kind {self.kind!r}")


def uniform_weight(num_modes: int) -> WeightFunction:
    """The unit weight; samples are drawn directly from ``rho``."""
    return WeightFunction(kind=UNIFORM, num_modes=num_modes)


def separable_weight(densities: Sequence, num_tab: int = SEPARABLE_TABLE) -> WeightFunction:
    """Weight built from per-mode sampling densities.

    Parameters
    ----------
    densities : sequence of callables
        One function per mode, proportional to the desired per-mode sampling
        density with respect to ``rho``; each is tabulated on `num_tab`
        equispaced nodes and normalised so the interpolant integrates to one
        under the module quadrature.
    """
    nodes = np.linspace(-1.0, 1.0, num_tab)
    qn, qw = gauss_legendre_rule()
    mode_nodes, mode_densities = [], []
    for g in densities:
        vals = np.asarray(g(nodes), dtype=float)
        if vals.shape != nodes.shape:
            raise ValueError("density tabulation has wrong shape")
        if np.min(vals) <= 0.0:
            raise ValueError("separable weight requires strictly positive densities")
        vals = vals / float(qw @ np.interp(qn, nodes, vals))
        vals.setflags(write=False)
        mode_nodes.append(nodes)
        mode_densities.append(vals)
    return WeightFunction(
        kind=SEPARABLE,
        num_modes=len(mode_densities),
        mode_nodes=tuple(mode_nodes),
        mode_densities=tuple(mode_densities),
    )


def from_density_weight(
    density: Callable, num_modes: int, envelope: float, note: str = ""
) -> WeightFunction:
    """Weight ``w = 1/density`` for a normalised sampling density.

    `density` maps ``(n, M)`` points to values of ``w^{-1}`` (a probability
    density with respect to ``rho``); `envelope` must dominate it everywhere
    and is used by the rejection sampler.
    """
    if envelope <= 0.0:
        raise ValueError("rejection envelope must be positive")
    return WeightFunction(
        kind=FROM_VARIATION,
        num_modes=num_modes,
        density=density,
        envelope=float(envelope),
        note=note,
    )


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """`n` sample points with the weight values at those points."""

    points: np.ndarray
    weights: np.ndarray
    n: int
    seed: int

    def __post_init__(self):
        if self.points.shape != (self.n, self.points.shape[1]):
            raise ValueError("inconsistent batch shapes")
        if self.weights.shape != (self.n,):
            raise ValueError("inconsistent batch shapes")
        if self.n and float(np.max(np.abs(self.points))) > 1.0:
            raise ValueError("sample points outside the domain")
        if self.n and float(np.min(self.weights)) <= 0.0:
            raise ValueError("sample weights must be strictly positive")

    @property
    def num_modes(self) -> int:
        return self.points.shape[1]


def draw_samples(
    domain: DomainSpec, weight: WeightFunction, n: int, seed: int
) -> SampleBatch:
    """Draw `n` points from ``w^{-1} rho``; bit-for-bit reproducible per seed.

    Uniform weights sample ``rho`` directly, separable weights use per-mode
    inverse transform sampling on the tabulated densities, and variation-based
    weights use rejection sampling from ``rho``.  A proposed point whose
    density exceeds the stored envelope aborts the draw: the envelope is part
    of the weight's construction contract, not a tunable.
    """
    if domain.num_modes != weight.num_modes:
        raise ValueError("domain and weight disagree on the number of modes")
    if n < 1:
        raise ValueError("batch size must be >= 1")
    rng = make_rng(seed)
    if weight.kind == UNIFORM:
        points = rng.uniform(-1.0, 1.0, size=(n, weight.num_modes))
        return SampleBatch(points, np.ones(n), n, seed)
    if weight.kind == SEPARABLE:
        points = np.empty((n, weight.num_modes))
        for m in range(weight.num_modes):
            nodes = weight.mode_nodes[m]
            dens = weight.mode_densities[m]
            # exact CDF of the piecewise-linear interpolant (trapezoid rule)
            cdf = np.concatenate(
                ([0.0], np.cumsum(np.diff(nodes) * (dens[:-1] + dens[1:]) / 4.0))
            )
            points[:, m] = np.interp(rng.random(n) * cdf[-1], cdf, nodes)
        return SampleBatch(points, weight.evaluate(points), n, seed)
    if weight.kind == FROM_VARIATION:
        collected = []
        total = 0
        while total < n:
            proposals = rng.uniform(-1.0, 1.0, size=(_REJECTION_CHUNK, weight.num_modes))
            u = rng.random(_REJECTION_CHUNK)
            ratio = np.asarray(weight.density(proposals), dtype=float) / weight.envelope
            if float(np.max(ratio)) > 1.0:
                raise NumericalError(
                    "rejection envelope violated: density exceeds the declared bound"
                )
            accepted = proposals[u < ratio]
            collected.append(accepted)
            total += accepted.shape[0]
        points = np.concatenate(collected, axis=0)[:n]
        return SampleBatch(points, weight.evaluate(points), n, seed)
    raise ValueError(f"unknown weight kind {weight.kind!r}")


def empirical_norm(values, batch: SampleBatch) -> float:
    """Weighted root-mean-square ``((1/n) sum_i w_i v(y^i)^2)^{1/2}``."""
    values = np.asarray(values, dtype=float)
    if values.shape != (batch.n,):
        raise ValueError("values must be given at the batch points")
    return float(np.sqrt(np.mean(batch.weights * values**2)))


def ambient_norm(coeffs) -> float:
    """Norm of the function with the given coefficients (Parseval)."""
    return float(np.linalg.norm(np.asarray(coeffs, dtype=float).ravel()))


def weighted_sup_norm(values, weights) -> float:
    """``max_i sqrt(w_i) |v_i|`` over a grid of evaluations."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape:
        raise ValueError("values and weights must align")
    return float(np.max(np.sqrt(weights) * np.abs(values)))


def normalization_defect(weight: WeightFunction) -> float:
    """``|int w^{-1} drho - 1|`` under the module quadrature convention."""
    if weight.kind == UNIFORM:
        return 0.0
    if weight.num_modes <= 3:
        points, qw = tensor_quadrature(weight.num_modes)
        integral = float(qw @ (1.0 / weight.evaluate(points)))
    else:
        grid = standard_grid(weight.num_modes)
        integral = float(np.mean(1.0 / weight.evaluate(grid)))
    return abs(integral - 1.0)


def _as_points(points, num_modes: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if num_modes == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != num_modes:
        raise ValueError(f"expected points of shape (n, {num_modes}), got {pts.shape}")
    return pts
