"""Reach-based tangent approximation checks and local variation bounds."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varfun.basis import legendre_tensor_basis
from varfun.geometry import (
    PointCloud,
    check_hausdorff_rates,
    check_manifold_projection,
    check_tangent_projection,
    circle_chart,
    hausdorff,
    klimit_check,
    kloc_upper,
    lowrank_chart,
    parabola_chart,
    reach_lowrank_ball,
    reach_perturbation_check,
    tangent_lowrank,
    truncated_hausdorff,
)
from varfun.measure import standard_grid
from varfun.model import TangentLowRank
from varfun.variation import (
    EXACT,
    UPPER_BOUND,
    variation_complement,
    variation_estimate,
    variation_exact,
)

THIN_GRID = standard_grid(2)[::13]


def test_hausdorff_of_unit_axes_is_sqrt2():
    a = np.array([[1.0, 0.0]])
    b = np.array([[0.0, 1.0]])
    assert hausdorff(a, b) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_hausdorff_identical_clouds_is_zero():
    pts = np.random.default_rng(0).standard_normal((20, 3))
    assert hausdorff(pts, pts) == 0.0


def test_hausdorff_is_symmetric_and_one_sided_aware():
    a = np.array([[0.0, 0.0], [10.0, 0.0]])
    b = np.array([[0.0, 0.0]])
    assert hausdorff(a, b) == hausdorff(b, a) == 10.0


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_hausdorff_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.standard_normal((5, 2)) for _ in range(3))
    assert hausdorff(a, c) <= hausdorff(a, b) + hausdorff(b, c) + 1e-12


def test_truncated_hausdorff_antipodal_is_two():
    e1 = np.array([[1.0, 0.0]])
    assert truncated_hausdorff(e1, -e1) == pytest.approx(2.0, abs=1e-15)


def test_truncated_hausdorff_rejects_non_unit_inputs():
    with pytest.raises(ValueError):
        truncated_hausdorff(np.array([[2.0, 0.0]]), np.array([[1.0, 0.0]]))


def test_point_cloud_validates_unit_flag():
    with pytest.raises(ValueError):
        PointCloud(np.array([[0.5, 0.0]]), unit=True)
    PointCloud(np.array([[1.0, 0.0]]), unit=True)


def test_circle_tangent_projection_is_an_identity():
    chart = circle_chart(2.0)
    report = check_tangent_projection(chart, reach=2.0, r=1.9, num_samples=500, seed=0)
    assert report.passed
    assert report.max_equality_gap <= 1e-12
    assert report.max_containment_gap <= 1e-12


def test_parabola_tangent_projection_obeys_quadratic_bound():
    chart = parabola_chart(0.25)
    report = check_tangent_projection(chart, reach=4.0, r=3.0, num_samples=1000, seed=1)
    assert report.passed
    assert report.max_defect_gap <= 1e-10
    assert report.max_equality_gap is None


def test_circle_projection_back_to_manifold_matches_formula():
    chart = circle_chart(1.5)
    report = check_manifold_projection(chart, reach=1.5, r=0.7, num_samples=500, seed=2)
    assert report.passed
    assert report.failures == 0
    assert report.max_circle_formula_gap <= 1e-10


def test_parabola_projection_back_to_manifold():
    chart = parabola_chart(0.2)
    report = check_manifold_projection(chart, reach=5.0, r=2.0, num_samples=500, seed=3)
    assert report.passed


def test_manifold_projection_needs_curvature_center():
    flat = parabola_chart(0.0)
    with pytest.raises(ValueError):
        check_manifold_projection(flat, reach=1.0, r=0.5, num_samples=10, seed=0)


def test_hausdorff_rates_circle_and_parabola():
    circle = circle_chart(3.0)
    report = check_hausdorff_rates(circle, reach=3.0, radii=[1.5, 0.75, 0.375])
    assert report.passed and report.monotone
    for rec in report.records:
        assert rec.flat_distance <= 1.05 * rec.r**2 / 6.0
        assert rec.cone_distance <= 1.05 * rec.r / 3.0
    parabola = parabola_chart(0.1)
    report = check_hausdorff_rates(parabola, reach=10.0, radii=[2.0, 1.0])
    assert report.passed


def test_flat_chart_has_zero_distances():
    flat = parabola_chart(0.0)
    report = check_hausdorff_rates(flat, reach=math.inf, radii=[1.0, 0.5])
    assert report.passed
    assert all(rec.flat_distance == 0.0 for rec in report.records)
    assert all(rec.cone_distance == 0.0 for rec in report.records)


def test_rates_reject_radii_beyond_reach():
    with pytest.raises(ValueError):
        check_hausdorff_rates(circle_chart(1.0), reach=1.0, radii=[2.0])


def test_tangent_frame_dimensions_and_orthonormality():
    frame = tangent_lowrank(np.diag([2.0, 0.0]), 1)
    assert frame.shape == (3, 4)
    np.testing.assert_allclose(frame @ frame.T, np.eye(3), atol=1e-12)
    big = tangent_lowrank(np.arange(16.0).reshape(4, 4) + np.eye(4), 2)
    assert big.shape == (2 * 4 + 2 * 2, 16)
    np.testing.assert_allclose(big @ big.T, np.eye(12), atol=1e-12)


def test_tangent_frame_rejects_rank_deficient_anchor():
    with pytest.raises(ValueError):
        tangent_lowrank(np.diag([2.0, 0.0]), 2)


def test_lowrank_chart_embeds_onto_the_manifold():
    chart = lowrank_chart(np.diag([2.0, 0.0, 0.0]), 1)
    rng = np.random.default_rng(4)
    params = 0.3 * rng.standard_normal((20, chart.param_dim))
    pts = chart.embed(params)
    for row in pts:
        s = np.linalg.svd(row.reshape(3, 3), compute_uv=False)
        assert s[1] <= 1e-10


def test_kloc_upper_at_zero_radius_is_tangent_variation():
    basis = legendre_tensor_basis((3, 3))
    u, s, vt = np.linalg.svd(np.diag([2.0, 1.0, 0.0]))
    space = TangentLowRank(basis, u[:, :1], s[:1], vt[:1].T)
    k_t = variation_exact(space)
    k_n = variation_complement(k_t, basis)
    bound = kloc_upper(k_t, k_n, r=0.0, reach=1.0)
    np.testing.assert_allclose(bound(THIN_GRID), k_t(THIN_GRID), atol=1e-12)
    assert bound.certificate == UPPER_BOUND


def test_kloc_upper_arithmetic_oracle():
    from varfun.variation import VariationFn

    ones = VariationFn(1, EXACT, "constant one", lambda p: np.ones(len(p)))
    fours = VariationFn(1, EXACT, "constant four", lambda p: 4.0 * np.ones(len(p)))
    bound = kloc_upper(ones, fours, r=1.0, reach=1.0)
    # (sqrt(1) + (1/2) sqrt(4))^2 = 4
    np.testing.assert_allclose(bound(np.zeros((3, 1))), 4.0, atol=1e-14)


def test_kloc_upper_dominates_tangent_for_any_radius():
    basis = legendre_tensor_basis((3, 3))
    u, s, vt = np.linalg.svd(np.diag([2.0, 1.0, 0.0]))
    space = TangentLowRank(basis, u[:, :1], s[:1], vt[:1].T)
    k_t = variation_exact(space)
    k_n = variation_complement(k_t, basis)
    for r in (0.1, 0.5, 1.0):
        bound = kloc_upper(k_t, k_n, r=r, reach=1.0)
        assert np.all(bound(THIN_GRID) >= k_t(THIN_GRID) - 1e-12)


def test_kloc_upper_rejects_mc_inputs_and_bad_radius():
    basis = legendre_tensor_basis((3, 3))
    u, s, vt = np.linalg.svd(np.diag([2.0, 1.0, 0.0]))
    space = TangentLowRank(basis, u[:, :1], s[:1], vt[:1].T)
    k_t = variation_exact(space)
    k_n = variation_complement(k_t, basis)
    mc = variation_estimate(space, 64, seed=0)
    with pytest.raises(ValueError):
        kloc_upper(mc, k_n, r=0.5, reach=1.0)
    with pytest.raises(ValueError):
        kloc_upper(k_t, k_n, r=2.0, reach=1.0)


def test_reach_ball_bound_and_margins():
    report = reach_lowrank_ball(np.diag([2.0, 0.0]), 1, 1.0)
    assert report.bound == 0.5
    assert report.sigma_rank == 2.0
    assert report.margin_rank == pytest.approx(1.5)
    assert report.margin_gap == pytest.approx(2.0 - 1.0 / math.sqrt(2.0))
    assert not report.boundary


def test_reach_ball_flags_boundary_radius():
    report = reach_lowrank_ball(np.diag([2.0, 0.0]), 1, 2.0)
    assert report.boundary
    with pytest.raises(ValueError):
        reach_lowrank_ball(np.diag([2.0, 0.0]), 1, 2.5)


def test_perturbations_keep_unique_nearby_truncations():
    anchor = np.diag([2.0, 1.0, 0.0])
    report = reach_perturbation_check(anchor, 2, 0.8, num_draws=1000, seed=0)
    assert report.passed
    assert report.unique_truncations == 1000
    assert report.within_radius == 1000
    assert report.min_singular_gap > 0


def test_klimit_gap_shrinks_with_radius():
    basis = legendre_tensor_basis((3, 3))
    anchor = np.zeros((3, 3))
    anchor[0, 0] = 2.0
    report = klimit_check(
        basis, anchor, 1, [0.8, 0.4, 0.2], num_samples=4096, seed=9, grid=THIN_GRID
    )
    assert report.gaps_monotone
    assert report.below_upper
    assert report.final_reaches_tangent
    gaps = [rec.gap for rec in report.records]
    assert gaps[0] > gaps[-1]


def test_klimit_flat_manifold_is_radius_independent():
    # at full rank the manifold is the whole space: chords are exact unit
    # directions whatever the ball radius, so the estimate cannot depend
    # on r, and the upper bound collapses to the tangent variation itself
    basis = legendre_tensor_basis((3, 3))
    anchor = np.diag([2.0, 1.5, 1.0])
    report = klimit_check(
        basis, anchor, 3, [0.8, 0.4, 0.2], num_samples=2048, seed=9, grid=THIN_GRID
    )
    assert report.below_upper
    assert report.gaps_monotone
    gaps = [rec.gap for rec in report.records]
    np.testing.assert_allclose(gaps, gaps[0], rtol=1e-11)
    assert gaps[0] <= 2.0 * report.tol_mc + 1e-9


def test_klimit_rejects_oversized_radii():
    basis = legendre_tensor_basis((3, 3))
    anchor = np.zeros((3, 3))
    anchor[0, 0] = 2.0
    with pytest.raises(ValueError):
        klimit_check(basis, anchor, 1, [3.0], num_samples=64, seed=0, grid=THIN_GRID)
