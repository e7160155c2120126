"""Model classes: membership, projections, tangent frames, unit sampling."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varfun.basis import dense_tensor, legendre_tensor_basis, rank1_tensor
from varfun.measure import make_rng
from varfun.model import (
    Ball,
    FullSpace,
    LinearSpan,
    LowRankMatrix,
    Rank1Cone,
    Shift,
    TangentLowRank,
    Union,
    WeightedSparse,
    membership_distance,
    project_info,
    sample_unit_element,
    tangent_frame,
    unit_sample_batch,
)

BASIS = legendre_tensor_basis((3, 3))


def _tangent_space(matrix, rank):
    u, s, vt = np.linalg.svd(matrix)
    return TangentLowRank(BASIS, u[:, :rank], s[:rank], vt[:rank].T)


ALL_CLASSES = [
    LinearSpan(BASIS, ((0, 0), (1, 2))),
    FullSpace(BASIS),
    Rank1Cone(BASIS),
    LowRankMatrix(BASIS, 2),
    _tangent_space(np.diag([2.0, 1.0, 0.0]), 1),
    WeightedSparse(BASIS, np.ones(9), 2.0),
    Shift(BASIS, rank1_tensor([np.ones(3), np.ones(3)]), Rank1Cone(BASIS)),
    Union(BASIS, (Rank1Cone(BASIS), LinearSpan(BASIS, ((0, 0),)))),
]


@pytest.mark.parametrize("model", ALL_CLASSES, ids=lambda m: type(m).__name__)
def test_unit_samples_have_unit_norm(model):
    rows = unit_sample_batch(model, 64, make_rng(0))
    assert rows.shape == (64, 9)
    np.testing.assert_allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("model", ALL_CLASSES, ids=lambda m: type(m).__name__)
def test_unit_sampling_is_deterministic(model):
    a = unit_sample_batch(model, 16, make_rng(5))
    b = unit_sample_batch(model, 16, make_rng(5))
    np.testing.assert_array_equal(a, b)


def test_rank1_samples_are_rank_one():
    rows = unit_sample_batch(Rank1Cone(BASIS), 32, make_rng(1))
    for row in rows:
        s = np.linalg.svd(row.reshape(3, 3), compute_uv=False)
        assert s[1] < 1e-12


def test_sparse_samples_respect_weighted_support():
    omega = np.array([1.0, 1.0, 2.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0])
    model = WeightedSparse(BASIS, omega, 2.0)
    rows = unit_sample_batch(model, 64, make_rng(2))
    for row in rows:
        support = np.flatnonzero(np.abs(row) > 1e-14)
        assert np.sqrt(np.sum(omega[support] ** 2)) <= 2.0 + 1e-12


def test_ball_members_stay_inside():
    center = rank1_tensor([np.array([2.0, 0, 0]), np.array([1.0, 0, 0])])
    ball = Ball(BASIS, center, 0.5, LowRankMatrix(BASIS, 1))
    rows = unit_sample_batch(ball, 64, make_rng(3))
    np.testing.assert_allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-12)


def test_sample_unit_element_single():
    elem = sample_unit_element(Rank1Cone(BASIS), 11)
    assert abs(elem.norm() - 1.0) < 1e-12


def test_rank1_projection_is_best_truncation():
    rng = np.random.default_rng(4)
    arr = rng.standard_normal((3, 3))
    proj, info = project_info(Rank1Cone(BASIS), arr)
    u, s, vt = np.linalg.svd(arr)
    expected = s[0] * np.outer(u[:, 0], vt[0])
    np.testing.assert_allclose(proj.to_dense(), expected, atol=1e-12)
    assert not info.get("tie", False)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_projection_beats_random_competitors(seed):
    rng = np.random.default_rng(seed)
    arr = rng.standard_normal((3, 3))
    proj, _ = project_info(LowRankMatrix(BASIS, 1), arr)
    best = np.linalg.norm(arr - proj.to_dense())
    factors = [rng.standard_normal(3), rng.standard_normal(3)]
    competitor = np.outer(*factors)
    assert best <= np.linalg.norm(arr - competitor) + 1e-12


def test_projection_is_idempotent():
    rng = np.random.default_rng(6)
    arr = rng.standard_normal((3, 3))
    proj, _ = project_info(LowRankMatrix(BASIS, 2), arr)
    again, _ = project_info(LowRankMatrix(BASIS, 2), proj.to_dense())
    np.testing.assert_allclose(again.to_dense(), proj.to_dense(), atol=1e-12)


def test_degenerate_projection_reports_tie():
    _, info = project_info(Rank1Cone(BASIS), np.eye(3))
    assert info.get("tie", False)


def test_span_projection_is_orthogonal():
    span = LinearSpan(BASIS, ((0, 0), (0, 1)))
    rng = np.random.default_rng(7)
    arr = rng.standard_normal((3, 3))
    proj, _ = project_info(span, arr)
    dense = proj.to_dense()
    # projection keeps exactly the span coordinates
    assert dense[0, 0] == pytest.approx(arr[0, 0])
    assert dense[0, 1] == pytest.approx(arr[0, 1])
    assert np.count_nonzero(dense) <= 2


def test_membership_distance_zero_for_members():
    member = np.outer([1.0, 2.0, 0.0], [0.0, 1.0, 1.0])
    assert membership_distance(Rank1Cone(BASIS), member) < 1e-12
    assert membership_distance(LowRankMatrix(BASIS, 2), np.eye(3) * 0) < 1e-12


def test_membership_distance_positive_outside():
    assert membership_distance(Rank1Cone(BASIS), np.eye(3)) > 0.5


def test_tangent_frame_is_orthonormal_and_contains_anchor_direction():
    anchor = np.diag([2.0, 1.0, 0.0])
    space = _tangent_space(anchor, 2)
    frame = tangent_frame(space)
    assert frame.shape == (2 * 3 + 1 * 2, 9)
    np.testing.assert_allclose(frame @ frame.T, np.eye(8), atol=1e-12)
    # the anchor itself is a tangent vector; its residual under the frame is 0
    flat = anchor.ravel()
    residual = flat - frame.T @ (frame @ flat)
    assert np.linalg.norm(residual) < 1e-12


def test_singular_tangent_space_rejected():
    with pytest.raises(ValueError):
        _tangent_space(np.diag([2.0, 0.0, 0.0]), 2)


def test_shift_of_ball_subtracts_actual_members():
    center = rank1_tensor([np.array([2.0, 0, 0]), np.array([1.0, 0, 0])])
    shifted = Shift(BASIS, center, Ball(BASIS, center, 0.4, LowRankMatrix(BASIS, 1)))
    rows = unit_sample_batch(shifted, 128, make_rng(8))
    np.testing.assert_allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-12)
    # every chord direction must point from a ball member to the anchor:
    # reconstructing the member from the chord at any admissible length
    # keeps it within the ball radius of the center for SOME length; at
    # minimum the chord cannot be parallel to directions that leave the
    # manifold cone entirely -- verified via distance of the best
    # rank-one reconstruction along the chord
    anchor = center.to_dense().ravel()
    for row in rows[:16]:
        lengths = np.linspace(1e-3, 0.4, 40)
        candidates = anchor[None, :] - lengths[:, None] * row[None, :]
        dists = [
            membership_distance(LowRankMatrix(BASIS, 1), c.reshape(3, 3))
            for c in candidates
        ]
        assert min(dists) < 5e-2


def test_union_requires_members():
    with pytest.raises(ValueError):
        Union(BASIS, ())
