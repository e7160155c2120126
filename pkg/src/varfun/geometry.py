"""Manifolds with positive reach and their local variation bounds.

Built-in charts (a circle, a parabola, and the rank-R matrix manifold) come
with analytic anchors, tangent frames, and curvature data.  The checks here
verify numerically that tangent planes approximate such manifolds at the
rates the reach dictates: quadratic for point projections, quadratic in
Hausdorff distance for ball intersections, linear for normalized cones.  On
the matrix manifold they additionally bound the variation function of a
ball-restricted neighbourhood by its tangent and normal contributions and
track its convergence to the tangent variation as the ball shrinks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from .basis import TensorBasis, dense_tensor
from .measure import NumericalError, make_rng, standard_grid
from .model import (
    Ball,
    LowRankMatrix,
    Shift,
    TangentLowRank,
    tangent_frame,
)
from .variation import (
    EXACT,
    MC_LOWER_BOUND,
    UPPER_BOUND,
    VariationFn,
    variation_complement,
    variation_estimate,
    variation_exact,
)

__all__ = [
    "CIRCLE",
    "PARABOLA",
    "LOWRANK",
    "ManifoldChart",
    "PointCloud",
    "circle_chart",
    "parabola_chart",
    "lowrank_chart",
    "tangent_lowrank",
    "hausdorff",
    "truncated_hausdorff",
    "check_tangent_projection",
    "check_manifold_projection",
    "check_hausdorff_rates",
    "kloc_upper",
    "klimit_check",
    "reach_lowrank_ball",
    "reach_perturbation_check",
]

CIRCLE = "CIRCLE"
PARABOLA = "PARABOLA"
LOWRANK = "LOWRANK"

_RANK_TOL = 1e-12
_BISECT_STEPS = 64
_MAX_ROUNDS = 256
_UNIT_TOL = 1e-10
_FRAME_TOL = 1e-10


@dataclass(frozen=True)
class ManifoldChart:
    """A parametrized manifold patch with analytic anchor data.

    ``embed`` maps parameter rows to ambient rows; ``tangent_at`` returns an
    orthonormal tangent frame (rows) at a parameter; `reach` is the known
    reach at the anchor when available (``inf`` for flat charts, ``None``
    when unknown); `r_star` is the radius within which the
    manifold-projection construction is guaranteed; `implicit` (plane curves
    only) is a signed membership function used by that construction, negative
    at the `curvature_center`.
    """

    kind: str
    param_dim: int
    ambient_dim: int
    embed: Callable = field(repr=False)
    tangent_at: Callable = field(repr=False)
    anchor_param: np.ndarray
    param_halfwidth: float
    reach: float | None
    r_star: float
    curvature_center: np.ndarray | None = None
    implicit: Callable | None = field(default=None, repr=False)
    chord_param: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        anchor = np.atleast_1d(np.asarray(self.anchor_param, dtype=float))
        anchor.setflags(write=False)
        object.__setattr__(self, "anchor_param", anchor)
        frame = self.tangent_at(self.anchor_param)
        gram = frame @ frame.T
        if np.max(np.abs(gram - np.eye(self.param_dim))) > _FRAME_TOL:
            raise ValueError("tangent frame at the anchor is not orthonormal")

    @property
    def anchor_point(self) -> np.ndarray:
        return self.embed(self.anchor_param[None, :])[0]


@dataclass(frozen=True)
class PointCloud:
    """A finite stand-in for a set: ambient vectors, one per row."""

    points: np.ndarray
    unit: bool = False

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            raise ValueError("point cloud must be nonempty")
        if self.unit:
            norms = np.linalg.norm(pts, axis=1)
            if np.max(np.abs(norms - 1.0)) > _UNIT_TOL:
                raise ValueError("cone cloud contains non-unit vectors")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


def circle_chart(radius: float) -> ManifoldChart:
    """Circle of the given radius, anchored at the top with tangent (1, 0).

    Parametrized by arc angle; the anchor sits at the origin and the circle
    bends downward, so the curvature center is ``(0, -radius)`` and the reach
    equals the radius.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = np.array([0.0, -radius])

    def embed(params):
        t = params[:, 0]
        return np.column_stack([radius * np.sin(t), radius * (np.cos(t) - 1.0)])

    def tangent_at(param):
        t = float(np.atleast_1d(param)[0])
        return np.array([[np.cos(t), -np.sin(t)]])

    return ManifoldChart(
        kind=CIRCLE,
        param_dim=1,
        ambient_dim=2,
        embed=embed,
        tangent_at=tangent_at,
        anchor_param=np.zeros(1),
        param_halfwidth=np.pi,
        reach=radius,
        r_star=radius,
        curvature_center=center,
        implicit=lambda pts: np.linalg.norm(pts - center, axis=1) - radius,
        chord_param=lambda r: 2.0 * math.asin(min(1.0, r / (2.0 * radius))),
    )


def parabola_chart(curvature: float, halfwidth: float = 8.0) -> ManifoldChart:
    """Graph of ``y = -curvature * x^2 / 2`` anchored at the origin.

    The osculating radius at the anchor is ``1 / curvature``, which is also
    the parabola's reach; zero curvature degenerates to the flat tangent
    line (infinite reach).
    """
    if curvature < 0:
        raise ValueError("curvature must be nonnegative")
    if halfwidth <= 0:
        raise ValueError("halfwidth must be positive")
    flat = curvature == 0.0

    def embed(params):
        t = params[:, 0]
        return np.column_stack([t, -0.5 * curvature * t**2])

    def tangent_at(param):
        t = float(np.atleast_1d(param)[0])
        row = np.array([1.0, -curvature * t])
        return (row / np.linalg.norm(row))[None, :]

    def chord_param(r):
        if flat:
            return min(r, halfwidth)
        # |(t, -k t^2/2)| = r, solved for t^2 without cancellation
        q = 2.0 * (math.sqrt(1.0 + (curvature * r) ** 2) - 1.0) / curvature**2
        return min(math.sqrt(q), halfwidth)

    return ManifoldChart(
        kind=PARABOLA,
        param_dim=1,
        ambient_dim=2,
        embed=embed,
        tangent_at=tangent_at,
        anchor_param=np.zeros(1),
        param_halfwidth=halfwidth,
        reach=math.inf if flat else 1.0 / curvature,
        r_star=halfwidth,
        curvature_center=None if flat else np.array([0.0, -1.0 / curvature]),
        implicit=None if flat else (
            lambda pts: pts[:, 1] + 0.5 * curvature * pts[:, 0] ** 2
        ),
        chord_param=chord_param,
    )


def _factor(matrix: np.ndarray, rank: int):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise ValueError("expected a matrix")
    if not 1 <= rank <= min(matrix.shape):
        raise ValueError("rank must lie in [1, min(shape)]")
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    if s[rank - 1] < _RANK_TOL:
        raise ValueError(
            "tangent space undefined: the matrix is rank-deficient at the "
            f"requested rank (sigma_{rank} = {s[rank - 1]:.3e})"
        )
    return u[:, :rank], s[:rank], vt[:rank].T


def tangent_lowrank(matrix: np.ndarray, rank: int) -> np.ndarray:
    """Orthonormal frame of the rank-`rank` manifold's tangent space.

    Rows are flattened matrices spanning (left singular directions) x (all
    right directions) plus (left complement) x (right singular directions);
    the dimension is ``rank * d2 + (d1 - rank) * rank``.
    """
    u, s, v = _factor(matrix, rank)
    d1, d2 = np.asarray(matrix).shape
    from .basis import legendre_tensor_basis

    space = TangentLowRank(legendre_tensor_basis((d1, d2)), u, s, v)
    return tangent_frame(space)


def lowrank_chart(matrix: np.ndarray, rank: int) -> ManifoldChart:
    """Rank-`rank` matrix manifold around `matrix` (tangent coordinates).

    Points are generated by perturbing the anchor along the tangent frame
    and re-truncating to rank `rank`, which guarantees membership.  The
    declared reach is the ball-restriction lower bound at the largest
    admissible radius, ``sigma_rank / 2``; projection constructions are only
    guaranteed up to ``r_star = sigma_rank / 2``.
    """
    u, s, v = _factor(matrix, rank)
    anchor = np.asarray(matrix, dtype=float)
    d1, d2 = anchor.shape
    from .basis import legendre_tensor_basis

    basis = legendre_tensor_basis((d1, d2))
    space = TangentLowRank(basis, u, s, v)
    frame = tangent_frame(space)
    flat = anchor.ravel()

    def truncate(rows):
        mats = rows.reshape(-1, d1, d2)
        uu, ss, vv = np.linalg.svd(mats)
        out = (uu[:, :, :rank] * ss[:, None, :rank]) @ vv[:, :rank, :]
        return out.reshape(-1, d1 * d2)

    def embed(params):
        return truncate(flat[None, :] + params @ frame)

    def tangent_at(param):
        if np.max(np.abs(np.atleast_1d(param))) > 0:
            raise ValueError("the low-rank chart only carries the anchor frame")
        return frame

    return ManifoldChart(
        kind=LOWRANK,
        param_dim=frame.shape[0],
        ambient_dim=d1 * d2,
        embed=embed,
        tangent_at=tangent_at,
        anchor_param=np.zeros(frame.shape[0]),
        param_halfwidth=float(s[-1]),
        reach=float(s[-1]) / 2.0,
        r_star=float(s[-1]) / 2.0,
    )


def _cloud(points) -> np.ndarray:
    if isinstance(points, PointCloud):
        return points.points
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("point cloud must be nonempty")
    return pts


def hausdorff(cloud_a, cloud_b) -> float:
    """Two-sided Hausdorff distance between finite point clouds."""
    a, b = _cloud(cloud_a), _cloud(cloud_b)
    dist = cdist(a, b)
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def truncated_hausdorff(cone_a, cone_b) -> float:
    """Hausdorff distance between the unit-sphere sections of two cones.

    Inputs are the sections themselves and must consist of unit vectors.
    """
    a, b = _cloud(cone_a), _cloud(cone_b)
    for pts, name in ((a, "first"), (b, "second")):
        norms = np.linalg.norm(pts, axis=1)
        if np.max(np.abs(norms - 1.0)) > _UNIT_TOL:
            raise ValueError(f"{name} cone cloud contains non-unit vectors")
    return hausdorff(a, b)


def _sample_manifold_near(chart: ManifoldChart, r: float, count: int, rng):
    """Manifold points within distance `r` of the anchor (rejection draw)."""
    u = chart.anchor_point
    out = np.empty((count, chart.ambient_dim))
    filled = 0
    for _ in range(_MAX_ROUNDS):
        need = count - filled
        if need == 0:
            return out
        params = chart.param_halfwidth * rng.uniform(-1.0, 1.0, (4 * need, chart.param_dim))
        pts = chart.embed(params)
        dist = np.linalg.norm(pts - u, axis=1)
        keep = pts[(dist > 0) & (dist < r)][:need]
        out[filled : filled + keep.shape[0]] = keep
        filled += keep.shape[0]
    raise NumericalError(
        "could not sample enough manifold points inside the ball; "
        "the radius is too small relative to the chart"
    )


@dataclass(frozen=True)
class TangentProjectionReport:
    """Sampled verification that tangent planes track the manifold."""

    samples: int
    max_defect_gap: float
    max_containment_gap: float
    max_equality_gap: float | None
    passed: bool


def check_tangent_projection(
    chart: ManifoldChart, reach: float, r: float, num_samples: int, seed: int
) -> TangentProjectionReport:
    """For manifold points near the anchor, the tangent-plane projection is
    quadratically close: ``|v - w| <= |u - v|^2 / (2 reach)`` and no farther
    from the anchor than ``v`` itself.  On the circle the first inequality is
    an identity, reported via ``max_equality_gap``.
    """
    if reach <= 0:
        raise ValueError("reach must be positive")
    rng = make_rng(seed)
    u = chart.anchor_point
    frame = chart.tangent_at(chart.anchor_param)
    v = _sample_manifold_near(chart, r, num_samples, rng)
    dv = v - u[None, :]
    w = u[None, :] + (dv @ frame.T) @ frame
    defect = np.linalg.norm(v - w, axis=1)
    dist = np.linalg.norm(dv, axis=1)
    bound = dist**2 / (2.0 * reach)
    defect_gap = float(np.max(defect - bound))
    contain_gap = float(np.max(np.linalg.norm(w - u[None, :], axis=1) - dist))
    equality_gap = (
        float(np.max(np.abs(defect - bound))) if chart.kind == CIRCLE else None
    )
    passed = defect_gap <= 1e-10 and contain_gap <= 1e-12
    if equality_gap is not None:
        passed = passed and equality_gap <= 1e-12
    return TangentProjectionReport(
        samples=num_samples,
        max_defect_gap=defect_gap,
        max_containment_gap=contain_gap,
        max_equality_gap=equality_gap,
        passed=passed,
    )


@dataclass(frozen=True)
class ManifoldProjectionReport:
    """Sampled verification that tangent points project back quadratically."""

    samples: int
    failures: int
    max_defect_gap: float
    max_circle_formula_gap: float | None
    passed: bool


def check_manifold_projection(
    chart: ManifoldChart, reach: float, r: float, num_samples: int, seed: int
) -> ManifoldProjectionReport:
    """For tangent points ``w`` near the anchor, walk the segment from the
    curvature center through ``w`` back onto the curve (bisection on the
    chart's implicit function) and check ``|w - v| <= |u - w|^2 / (2
    reach)``.  On the circle the exact gap is ``sqrt(reach^2 + t^2) -
    reach``, cross-checked per sample.
    """
    if reach <= 0:
        raise ValueError("reach must be positive")
    if r >= chart.r_star:
        raise ValueError(
            f"radius {r} is not below the chart's guaranteed r* = {chart.r_star}"
        )
    if chart.curvature_center is None or chart.implicit is None:
        raise ValueError(
            "the manifold-projection construction needs a curvature center "
            "(plane-curve charts only)"
        )
    rng = make_rng(seed)
    u = chart.anchor_point
    direction = chart.tangent_at(chart.anchor_param)[0]
    center = chart.curvature_center
    ts = r * rng.uniform(-1.0, 1.0, num_samples)
    failures = 0
    defect_gap = -math.inf
    circle_gap = -math.inf if chart.kind == CIRCLE else None
    for t in ts:
        w = u + t * direction
        ray = w - center
        length = float(np.linalg.norm(ray))
        ray /= length
        lo, hi = 0.0, length
        f_hi = float(chart.implicit(w[None, :])[0])
        f_lo = float(chart.implicit(center[None, :])[0])
        if f_lo * f_hi > 0:
            failures += 1
            continue
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            f_mid = float(chart.implicit((center + mid * ray)[None, :])[0])
            if f_mid * f_lo <= 0:
                hi = mid
            else:
                lo, f_lo = mid, f_mid
        v = center + 0.5 * (lo + hi) * ray
        defect = float(np.linalg.norm(w - v))
        defect_gap = max(defect_gap, defect - t * t / (2.0 * reach))
        if circle_gap is not None:
            exact = math.sqrt(reach**2 + t * t) - reach
            circle_gap = max(circle_gap, abs(defect - exact))
    passed = failures == 0 and defect_gap <= 1e-10
    if circle_gap is not None:
        passed = passed and circle_gap <= 1e-10
    return ManifoldProjectionReport(
        samples=num_samples,
        failures=failures,
        max_defect_gap=float(defect_gap),
        max_circle_formula_gap=None if circle_gap is None else float(circle_gap),
        passed=passed,
    )


@dataclass(frozen=True)
class HausdorffRateRecord:
    """Measured Hausdorff distances against their reach bounds at one radius."""

    r: float
    flat_distance: float
    flat_bound: float
    cone_distance: float
    cone_bound: float
    passed: bool


@dataclass(frozen=True)
class HausdorffRateReport:
    records: tuple
    monotone: bool
    passed: bool


_CLOUD_SLACK = 1.05


def check_hausdorff_rates(
    chart: ManifoldChart, reach: float, radii, cloud_size: int = 2048
) -> HausdorffRateReport:
    """Cloud-based check of the ball and cone approximation rates.

    For each radius, dense clouds stand in for the manifold ball and the
    tangent ball; their Hausdorff distance must stay below ``r^2 / (2
    reach)`` and the distance between the normalized chord cone and the unit
    tangent directions below ``r / reach``, both with a 1.05 discretization
    slack.  Records are sorted by decreasing radius and the measured
    distances must shrink monotonically.
    """
    if chart.param_dim != 1:
        raise ValueError("cloud construction is implemented for curve charts")
    if cloud_size < 2:
        raise ValueError("cloud_size must be >= 2")
    radii = sorted((float(r) for r in radii), reverse=True)
    if not radii:
        raise ValueError("radii must be nonempty")
    if math.isfinite(reach) and any(r > reach for r in radii):
        raise ValueError("radii must not exceed the reach")
    u = chart.anchor_point
    direction = chart.tangent_at(chart.anchor_param)[0]
    records = []
    for r in radii:
        t_r = chart.chord_param(r) if chart.chord_param is not None else r
        params = np.linspace(-t_r, t_r, cloud_size)
        manifold = chart.embed(params[:, None])
        tangent = u[None, :] + np.linspace(-r, r, cloud_size)[:, None] * direction
        flat_distance = hausdorff(manifold, tangent)
        flat_bound = 0.0 if math.isinf(reach) else r * r / (2.0 * reach)
        chords = manifold - u[None, :]
        norms = np.linalg.norm(chords, axis=1)
        keep = norms > 1e-15
        cone = chords[keep] / norms[keep, None]
        cone_distance = truncated_hausdorff(cone, np.array([direction, -direction]))
        cone_bound = 0.0 if math.isinf(reach) else r / reach
        records.append(
            HausdorffRateRecord(
                r=r,
                flat_distance=flat_distance,
                flat_bound=flat_bound,
                cone_distance=cone_distance,
                cone_bound=cone_bound,
                passed=(
                    flat_distance <= _CLOUD_SLACK * flat_bound
                    and cone_distance <= _CLOUD_SLACK * cone_bound
                )
                if not math.isinf(reach)
                else (flat_distance == 0.0 and cone_distance == 0.0),
            )
        )
    monotone = all(
        later.flat_distance <= earlier.flat_distance + 1e-15
        and later.cone_distance <= earlier.cone_distance + 1e-15
        for earlier, later in zip(records, records[1:])
    )
    return HausdorffRateReport(
        records=tuple(records),
        monotone=monotone,
        passed=monotone and all(rec.passed for rec in records),
    )


def kloc_upper(
    k_tangent: VariationFn, k_normal: VariationFn, r: float, reach: float
) -> VariationFn:
    """Upper bound ``(sqrt(K_T) + (r / 2 reach) sqrt(K_N))^2`` for the
    variation of a ball-restricted manifold neighbourhood of radius `r`.
    """
    if not 0 <= r <= reach:
        raise ValueError("the bound requires 0 <= r <= reach")
    if k_tangent.num_modes != k_normal.num_modes:
        raise ValueError("tangent and normal variations disagree on modes")
    if MC_LOWER_BOUND in (k_tangent.certificate, k_normal.certificate):
        raise ValueError("the upper bound needs exact or upper-bound inputs")
    factor = r / (2.0 * reach)

    def evaluate(pts):
        return (np.sqrt(k_tangent(pts)) + factor * np.sqrt(k_normal(pts))) ** 2

    return VariationFn(
        k_tangent.num_modes,
        UPPER_BOUND,
        f"(sqrt tangent + {factor:g} sqrt normal)^2 "
        f"[{k_tangent.provenance} | {k_normal.provenance}]",
        evaluate,
    )


@dataclass(frozen=True)
class KLimitRecord:
    """One radius of the shrinking-neighbourhood variation comparison."""

    r: float
    gap: float
    max_over_upper: float
    min_above_tangent: float


@dataclass(frozen=True)
class KLimitReport:
    records: tuple
    tol_mc: float
    gaps_monotone: bool
    below_upper: bool
    final_reaches_tangent: bool
    passed: bool


def klimit_check(
    basis: TensorBasis,
    anchor: np.ndarray,
    rank: int,
    radii,
    num_samples: int,
    seed: int,
    grid=None,
) -> KLimitReport:
    """Shrinking neighbourhoods of a rank-`rank` anchor: the sampled
    variation of ``{u} - (manifold ∩ B(u, r))`` must approach the exact
    tangent variation from within its upper bound.

    For each radius (descending), the Monte-Carlo estimate is compared
    pointwise on the grid against the tangent/normal upper bound at reach
    ``sigma_rank / 2``, the sup gap to the exact tangent variation is
    recorded (it must not grow as the ball shrinks, up to 10% noise), and
    the smallest radius must reach the tangent variation up to ``tol_mc``,
    the estimator's shortfall on the tangent space itself with the same
    sample budget.
    """
    if basis.num_modes != 2:
        raise ValueError("the matrix-manifold check needs a two-mode basis")
    u, s, v = _factor(anchor, rank)
    anchor = np.asarray(anchor, dtype=float)
    radii = sorted((float(r) for r in radii), reverse=True)
    if not radii:
        raise ValueError("radii must be nonempty")
    reach = float(s[-1]) / 2.0
    if radii[0] > 2 * reach:
        raise ValueError("radii must not exceed sigma_rank")
    pts = standard_grid(2) if grid is None else np.atleast_2d(np.asarray(grid, float))

    space = TangentLowRank(basis, u, s, v)
    k_tan = variation_exact(space)
    k_nor = variation_complement(k_tan, basis)
    tan_vals = k_tan(pts)
    est_tan = variation_estimate(space, num_samples, seed)(pts)
    tol_mc = float(np.max(np.maximum(tan_vals - est_tan, 0.0)))

    anchor_coeff = dense_tensor(anchor)
    records = []
    for r in radii:
        shifted = Shift(
            basis,
            anchor_coeff,
            Ball(basis, anchor_coeff, r, LowRankMatrix(basis, rank)),
        )
        est = variation_estimate(shifted, num_samples, seed)(pts)
        upper = kloc_upper(k_tan, k_nor, min(r, reach), reach)(pts)
        records.append(
            KLimitRecord(
                r=r,
                gap=float(np.max(np.abs(est - tan_vals))),
                max_over_upper=float(np.max(est - upper)),
                min_above_tangent=float(np.min(est - (tan_vals - tol_mc))),
            )
        )
    gaps_monotone = all(
        later.gap <= 1.1 * earlier.gap for earlier, later in zip(records, records[1:])
    )
    below_upper = all(rec.max_over_upper <= 0.0 for rec in records)
    final_ok = records[-1].min_above_tangent >= 0.0
    return KLimitReport(
        records=tuple(records),
        tol_mc=tol_mc,
        gaps_monotone=gaps_monotone,
        below_upper=below_upper,
        final_reaches_tangent=final_ok,
        passed=gaps_monotone and below_upper and final_ok,
    )


@dataclass(frozen=True)
class ReachBallReport:
    """Reach lower bound for a ball-restricted low-rank neighbourhood."""

    bound: float
    sigma_rank: float
    margin_rank: float
    margin_gap: float
    boundary: bool


def reach_lowrank_ball(matrix: np.ndarray, rank: int, r: float) -> ReachBallReport:
    """Reach of ``(rank-R manifold) ∩ B(matrix, r)`` is at least ``r / 2``.

    Valid for ``r <= sigma_rank``: every matrix within ``r / 2`` then keeps
    ``sigma_rank(w) >= sigma_rank - r/2 > 0`` and a singular-value gap
    ``>= sigma_rank - r/sqrt(2)``, so its rank-R truncation is unique and
    stays within ``r`` of the anchor.  At ``r = sigma_rank`` the premise is
    tight and the report flags the boundary.
    """
    _, s, _ = _factor(matrix, rank)
    sigma = float(s[-1])
    if r <= 0:
        raise ValueError("radius must be positive")
    if r > sigma * (1 + 1e-12):
        raise ValueError(
            f"radius {r} exceeds sigma_rank = {sigma:.6g}; the reach bound needs r <= sigma_rank"
        )
    return ReachBallReport(
        bound=r / 2.0,
        sigma_rank=sigma,
        margin_rank=sigma - r / 2.0,
        margin_gap=sigma - r / math.sqrt(2.0),
        boundary=bool(sigma - r <= 1e-12 * sigma),
    )


@dataclass(frozen=True)
class ReachPerturbationReport:
    """Empirical uniqueness/closeness of truncations inside the safe ball."""

    draws: int
    unique_truncations: int
    within_radius: int
    min_singular_gap: float
    passed: bool


def reach_perturbation_check(
    matrix: np.ndarray, rank: int, r: float, num_draws: int, seed: int
) -> ReachPerturbationReport:
    """Perturb the anchor by at most ``r / 2`` in Frobenius norm and verify
    that every perturbation has a positive singular-value gap at `rank` (so
    its truncation is unique) and that the truncation lies within ``r`` of
    the anchor.
    """
    report = reach_lowrank_ball(matrix, rank, r)
    anchor = np.asarray(matrix, dtype=float)
    rng = make_rng(seed)
    d1, d2 = anchor.shape
    noise = rng.standard_normal((num_draws, d1, d2))
    scale = (0.5 * r * rng.random(num_draws)) / np.linalg.norm(
        noise.reshape(num_draws, -1), axis=1
    )
    w = anchor[None, :, :] + scale[:, None, None] * noise
    uu, ss, vv = np.linalg.svd(w)
    gaps = ss[:, rank - 1] - ss[:, rank] if rank < min(d1, d2) else ss[:, rank - 1]
    trunc = (uu[:, :, :rank] * ss[:, None, :rank]) @ vv[:, :rank, :]
    dist = np.linalg.norm((trunc - anchor[None, :, :]).reshape(num_draws, -1), axis=1)
    unique = int(np.sum(gaps > 0.0))
    within = int(np.sum(dist <= r * (1 + 1e-12)))
    return ReachPerturbationReport(
        draws=num_draws,
        unique_truncations=unique,
        within_radius=within,
        min_singular_gap=float(np.min(gaps)),
        passed=bool(
            unique == num_draws and within == num_draws and report.bound == r / 2.0
        ),
    )
