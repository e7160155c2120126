"""Model classes: sets of functions closed under the operations we study.

Every class lives in the ambient space spanned by a tensor-product basis and
is described by its coefficient tensors.  The module provides unit-norm
samplers (for Monte-Carlo lower bounds), nearest-point projections, and
membership distances.  Samplers document their distribution where it matters:
Monte-Carlo variation estimates are lower bounds for *any* sampling law, so
the laws below are chosen for coverage, not canonicity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import CoeffTensor, DENSE, RANK1, TensorBasis, dense_tensor, rank1_tensor
from .measure import NumericalError, make_rng

__all__ = [
    "ModelClass",
    "LinearSpan",
    "FullSpace",
    "WeightedSparse",
    "LowRankMatrix",
    "Rank1Cone",
    "Shift",
    "Union",
    "Ball",
    "TangentLowRank",
    "sample_unit_element",
    "unit_sample_batch",
    "project",
    "project_info",
    "membership_distance",
    "tangent_frame",
]

_DEGENERATE = 1e-12
_MAX_REDRAWS = 64
_TIE_TOL = 1e-12
_HOPI_ITERS = 200
_HOPI_RTOL = 1e-12
_HOPI_RESTARTS = 3
_HOPI_SEED = 0x51F15EED  # fixed stream for restart initialisations
_KNAPSACK_CELLS = 10**6
_ENUM_MODES_MAX = 16


@dataclass(frozen=True)
class ModelClass:
    """Base class; concrete variants add their defining data."""

    basis: TensorBasis

    @property
    def dims(self) -> tuple[int, ...]:
        return self.basis.dims

    @property
    def num_modes(self) -> int:
        return self.basis.num_modes

    @property
    def ambient_dim(self) -> int:
        return self.basis.ambient_dim


@dataclass(frozen=True)
class LinearSpan(ModelClass):
    """Span of the tensor basis functions with the given multi-indices."""

    indices: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        if idx.ndim != 2 or idx.shape[1] != self.num_modes or idx.shape[0] == 0:
            raise ValueError("indices must be a non-empty list of multi-indices")
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.dims)):
            raise ValueError("multi-index outside the basis dimensions")
        if len({tuple(row) for row in idx.tolist()}) != idx.shape[0]:
            raise ValueError("duplicate multi-indices")
        object.__setattr__(self, "indices", tuple(tuple(int(i) for i in row) for row in idx))

    @property
    def flat_indices(self) -> np.ndarray:
        idx = np.asarray(self.indices, dtype=int)
        return np.ravel_multi_index(idx.T, self.dims)

    @property
    def dim(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class FullSpace(ModelClass):
    """The whole ambient space."""


@dataclass(frozen=True)
class WeightedSparse(ModelClass):
    """Functions supported on index sets S with ``sum_{k in S} omega_k^2 <= s^2``.

    ``omega`` holds one weight >= 1 per basis function, flattened in C order.
    """

    omega: np.ndarray
    s: float

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float).ravel()
        if omega.shape[0] != self.ambient_dim:
            raise ValueError("omega must have one entry per basis function")
        if np.min(omega) < 1.0:
            raise ValueError("sparsity weights must be >= 1")
        if self.s <= 0:
            raise ValueError("sparsity budget must be positive")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "s", float(self.s))


@dataclass(frozen=True)
class LowRankMatrix(ModelClass):
    """Two-mode coefficient tensors of rank at most `rank`."""

    rank: int

    def __post_init__(self):
        if self.num_modes != 2:
            raise ValueError("low-rank matrix classes require exactly two modes")
        if not 1 <= self.rank <= min(self.dims):
            raise ValueError("rank must satisfy 1 <= rank <= min(dims)")


@dataclass(frozen=True)
class Rank1Cone(ModelClass):
    """Elementary (rank-one) tensors ``f_1 x ... x f_M``."""


@dataclass(frozen=True)
class Shift(ModelClass):
    """Differences ``{anchor - m : m in inner}``."""

    anchor: CoeffTensor
    inner: "ModelClass"

    def __post_init__(self):
        if self.anchor.dims != self.dims or self.inner.dims != self.dims:
            raise ValueError("anchor and inner class must share the ambient basis")


@dataclass(frozen=True)
class Union(ModelClass):
    """Union of finitely many classes over the same basis."""

    members: tuple

    def __post_init__(self):
        if not self.members:
            raise ValueError("union needs at least one member")
        if any(m.dims != self.dims for m in self.members):
            raise ValueError("union members must share the ambient basis")


@dataclass(frozen=True)
class Ball(ModelClass):
    """Intersection ``inner ∩ B(center, radius)`` in the ambient norm."""

    center: CoeffTensor
    radius: float
    inner: "ModelClass"

    def __post_init__(self):
        if self.center.dims != self.dims or self.inner.dims != self.dims:
            raise ValueError("center and inner class must share the ambient basis")
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class TangentLowRank(ModelClass):
    """Tangent space of the rank-R matrix manifold at ``U diag(sigma) V^T``.

    Spanned by ``U[:, j] e_k^T`` (left singular directions times anything)
    together with ``U_perp[:, i] V[:, j]^T``; dimension ``R d_2 + (d_1 - R) R``.
    """

    left: np.ndarray
    sigma: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        if self.num_modes != 2:
            raise ValueError("tangent spaces of matrix manifolds require two modes")
        left = np.asarray(self.left, dtype=float)
        right = np.asarray(self.right, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float).ravel()
        d1, d2 = self.dims
        r = sigma.shape[0]
        if left.shape != (d1, r) or right.shape != (d2, r):
            raise ValueError("factor shapes do not match the basis dims")
        if np.min(sigma) < _DEGENERATE:
            raise ValueError("anchor must have sigma_R bounded away from zero")
        for f, name in ((left, "left"), (right, "right")):
            if np.max(np.abs(f.T @ f - np.eye(r))) > 1e-10:
                raise ValueError(f"{name} factor is not orthonormal")
        left.setflags(write=False)
        right.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "sigma", sigma)

    @property
    def rank(self) -> int:
        return self.sigma.shape[0]

    @property
    def anchor(self) -> CoeffTensor:
        return dense_tensor(self.left @ np.diag(self.sigma) @ self.right.T)

    @property
    def dim(self) -> int:
        d1, d2 = self.dims
        return self.rank * d2 + (d1 - self.rank) * self.rank


def tangent_frame(space: TangentLowRank) -> np.ndarray:
    """Orthonormal frame of the tangent space, one flattened matrix per row."""
    d1, d2 = space.dims
    r = space.rank
    q, _ = np.linalg.qr(space.left, mode="complete")
    perp = q[:, r:]
    # complete QR may flip the sign of the leading columns; only the span of
    # the complement matters, so no correction is needed.
    frame = np.empty((space.dim, d1 * d2))
    row = 0
    for j in range(r):
        for k in range(d2):
            frame[row] = np.outer(space.left[:, j], _unit(d2, k)).ravel()
            row += 1
    for i in range(d1 - r):
        for j in range(r):
            frame[row] = np.outer(perp[:, i], space.right[:, j]).ravel()
            row += 1
    return frame


def _unit(n: int, k: int) -> np.ndarray:
    e = np.zeros(n)
    e[k] = 1.0
    return e


# ---------------------------------------------------------------------------
# sampling


def _normalize_rows(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(x, axis=-1)
    good = norms > _DEGENERATE
    x = x.copy()
    x[good] /= norms[good, None]
    return x, good


def _redraw_loop(draw, count: int) -> np.ndarray:
    """Run `draw(count)` until `count` non-degenerate rows were produced."""
    out = None
    for _ in range(_MAX_REDRAWS):
        rows, good = draw(count if out is None else int(np.sum(~filled)))
        rows = rows[good]
        if out is None:
            out = np.empty((count, rows.shape[1]) if rows.ndim == 2 else count)
            filled = np.zeros(count, dtype=bool)
        free = np.flatnonzero(~filled)[: rows.shape[0]]
        out[free] = rows[: free.shape[0]]
        filled[free] = True
        if filled.all():
            return out
    raise NumericalError("degenerate draws: could not sample a unit element")


def unit_sample_batch(model: ModelClass, count: int, rng) -> np.ndarray:
    """Draw `count` unit-norm elements of `model` as flat coefficient rows.

    Gaussian parameters throughout; Shift classes scale the subtracted member
    by a half-normal multiple of ``max(1, |anchor|)`` so that differences of
    every magnitude relative to the anchor are exercised.
    """
    rng = _as_rng(rng)
    dim = model.ambient_dim

    if isinstance(model, LinearSpan):
        def draw(k):
            coeffs, good = _normalize_rows(rng.standard_normal((k, model.dim)))
            rows = np.zeros((k, dim))
            rows[:, model.flat_indices] = coeffs
            return rows, good

        return _redraw_loop(draw, count)

    if isinstance(model, FullSpace):
        return _redraw_loop(lambda k: _normalize_rows(rng.standard_normal((k, dim))), count)

    if isinstance(model, TangentLowRank):
        frame = tangent_frame(model)

        def draw(k):
            coeffs, good = _normalize_rows(rng.standard_normal((k, frame.shape[0])))
            return coeffs @ frame, good

        return _redraw_loop(draw, count)

    if isinstance(model, Rank1Cone):
        def draw(k):
            rows = np.ones((k, 1))
            good = np.ones(k, dtype=bool)
            for d in model.dims:
                f = rng.standard_normal((k, d))
                norms = np.linalg.norm(f, axis=1)
                good &= norms > _DEGENERATE
                f[good] /= norms[good, None]
                rows = (rows[:, :, None] * f[:, None, :]).reshape(k, -1)
            return rows, good

        return _redraw_loop(draw, count)

    if isinstance(model, LowRankMatrix):
        d1, d2 = model.dims

        def draw(k):
            u = rng.standard_normal((k, d1, model.rank))
            v = rng.standard_normal((k, d2, model.rank))
            mats = u @ np.swapaxes(v, 1, 2)
            return _normalize_rows(mats.reshape(k, -1))

        return _redraw_loop(draw, count)

    if isinstance(model, WeightedSparse):
        # uniform over maximal admissible supports when enumerable; beyond the
        # enumeration limit fall back to a random greedy maximal support
        supports = _maximal_supports(model) if dim <= _ENUM_MODES_MAX else None

        def draw(k):
            rows = np.zeros((k, dim))
            good = np.ones(k, dtype=bool)
            if supports is not None:
                which = rng.integers(0, len(supports), size=k)
            for i in range(k):
                sup = supports[which[i]] if supports is not None else _greedy_support(model, rng)
                g = rng.standard_normal(sup.shape[0])
                norm = np.linalg.norm(g)
                if norm <= _DEGENERATE:
                    good[i] = False
                    continue
                rows[i, sup] = g / norm
            return rows, good

        return _redraw_loop(draw, count)

    if isinstance(model, Shift):
        anchor = model.anchor.ravel()
        scale = max(1.0, float(np.linalg.norm(anchor)))

        if isinstance(model.inner, Ball):
            # the ball is not a cone, so subtract actual members instead of
            # rescaled unit elements
            def draw(k):
                members = _ball_member_batch(model.inner, k, rng)
                return _normalize_rows(anchor[None, :] - members)
        else:
            def draw(k):
                members = unit_sample_batch(model.inner, k, rng)
                radii = scale * np.abs(rng.standard_normal(k))
                return _normalize_rows(anchor[None, :] - radii[:, None] * members)

        return _redraw_loop(draw, count)

    if isinstance(model, Union):
        def draw(k):
            rows = np.empty((k, dim))
            which = rng.integers(0, len(model.members), size=k)
            for j, member in enumerate(model.members):
                sel = which == j
                if np.any(sel):
                    rows[sel] = unit_sample_batch(member, int(np.sum(sel)), rng)
            return rows, np.ones(k, dtype=bool)

        return _redraw_loop(draw, count)

    if isinstance(model, Ball):
        members = _ball_member_batch(model, count, rng)
        rows, good = _normalize_rows(members)
        if not good.all():
            extra = _redraw_loop(
                lambda k: _normalize_rows(_ball_member_batch(model, k, rng)),
                int(np.sum(~good)),
            )
            rows[~good] = extra
        return rows

    raise ValueError(f"unsupported model class {type(model).__name__}")


def _ball_member_batch(model: Ball, count: int, rng) -> np.ndarray:
    """Members of ``inner ∩ B(center, radius)``: perturb the center along a
    random direction, re-project onto the inner class, reject escapes."""
    center = model.center.ravel()
    out = np.empty((count, center.shape[0]))
    filled = np.zeros(count, dtype=bool)
    for _ in range(_MAX_REDRAWS):
        need = int(np.sum(~filled))
        if need == 0:
            return out
        dirs, _ = _normalize_rows(rng.standard_normal((need, center.shape[0])))
        radii = model.radius * rng.random(need)
        cand = _project_batch(model.inner, center[None, :] + radii[:, None] * dirs)
        ok = np.linalg.norm(cand - center[None, :], axis=1) <= model.radius * (1 + 1e-12)
        free = np.flatnonzero(~filled)[: int(np.sum(ok))]
        out[free] = cand[ok][: free.shape[0]]
        filled[free] = True
    raise NumericalError("could not sample the ball-restricted class")


def sample_unit_element(model: ModelClass, rng) -> CoeffTensor:
    """One unit-norm element of `model`; accepts a seed or a generator."""
    rng = _as_rng(rng)
    if isinstance(model, Rank1Cone):
        for _ in range(_MAX_REDRAWS):
            factors = [rng.standard_normal(d) for d in model.dims]
            norms = [np.linalg.norm(f) for f in factors]
            if min(norms) > _DEGENERATE:
                return rank1_tensor([f / n for f, n in zip(factors, norms)])
        raise NumericalError("degenerate draws: could not sample a unit element")
    row = unit_sample_batch(model, 1, rng)[0]
    return dense_tensor(row.reshape(model.dims))


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(rng)


# ---------------------------------------------------------------------------
# projections


def project_info(model: ModelClass, coeff) -> tuple[CoeffTensor, dict]:
    """Nearest point of `model` plus diagnostic flags.

    Flags: ``tie`` (non-unique optimum hit a deterministic tie-break),
    ``method`` (algorithm used), ``approximate`` (result may not be the
    nearest point, only a member).
    """
    flat = _as_flat(model, coeff)
    info: dict = {"tie": False, "approximate": False}

    if isinstance(model, FullSpace):
        info["method"] = "identity"
        return _wrap(model, flat), info

    if isinstance(model, LinearSpan):
        out = np.zeros_like(flat)
        out[model.flat_indices] = flat[model.flat_indices]
        info["method"] = "coordinate restriction"
        return _wrap(model, out), info

    if isinstance(model, TangentLowRank):
        frame = tangent_frame(model)
        info["method"] = "frame projection"
        return _wrap(model, (flat @ frame.T) @ frame), info

    if isinstance(model, LowRankMatrix):
        mat = flat.reshape(model.dims)
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
        if model.rank < s.shape[0] and s[model.rank - 1] - s[model.rank] <= _TIE_TOL:
            info["tie"] = True
        out = (u[:, : model.rank] * s[: model.rank]) @ vt[: model.rank]
        info["method"] = "truncated svd"
        return _wrap(model, out.ravel()), info

    if isinstance(model, Rank1Cone):
        dense, tie, method = _rank1_truncate(flat.reshape(model.dims))
        info["tie"] = tie
        info["method"] = method
        return _wrap(model, dense.ravel()), info

    if isinstance(model, WeightedSparse):
        out, ws_info = _sparse_project(model, flat)
        info.update(ws_info)
        return _wrap(model, out), info

    if isinstance(model, Shift):
        anchor = model.anchor.ravel()
        inner_proj, inner_info = project_info(model.inner, anchor - flat)
        info.update({"method": f"shift of {inner_info['method']}", "tie": inner_info["tie"]})
        info["approximate"] = inner_info["approximate"]
        return _wrap(model, anchor - inner_proj.ravel()), info

    if isinstance(model, Union):
        best = None
        for member in model.members:
            cand, cand_info = project_info(member, flat)
            dist = float(np.linalg.norm(cand.ravel() - flat))
            if best is None or dist < best[0] - _TIE_TOL:
                best = (dist, cand, cand_info)
            elif abs(dist - best[0]) <= _TIE_TOL:
                info["tie"] = True
        info["method"] = "union argmin"
        info["approximate"] = best[2]["approximate"]
        return _wrap(model, best[1].ravel()), info

    if isinstance(model, Ball):
        center = model.center.ravel()
        cand, inner_info = project_info(model.inner, flat)
        point = cand.ravel()
        if np.linalg.norm(point - center) <= model.radius * (1 + 1e-12):
            info["method"] = f"ball-inactive {inner_info['method']}"
            return _wrap(model, point), info
        # alternate between the sphere and the inner class; the fixed point is
        # a member of the intersection but not necessarily the nearest one
        for _ in range(_MAX_REDRAWS):
            onto_sphere = center + model.radius * (point - center) / np.linalg.norm(point - center)
            point = project_info(model.inner, onto_sphere)[0].ravel()
            if np.linalg.norm(point - center) <= model.radius * (1 + 1e-12):
                break
        info["method"] = "alternating ball projection"
        info["approximate"] = True
        return _wrap(model, point), info

    raise ValueError(f"unsupported model class {type(model).__name__}")


def project(model: ModelClass, coeff) -> CoeffTensor:
    """Nearest point of `model` to `coeff` (see :func:`project_info`)."""
    return project_info(model, coeff)[0]


def membership_distance(model: ModelClass, coeff) -> float:
    """Distance from `coeff` to the (closure of the) class.

    Composite classes use exact decompositions rather than the projection:
    the ball variant is ``max(inner distance, distance to the ball)``.
    """
    flat = _as_flat(model, coeff)
    if isinstance(model, Ball):
        inner = membership_distance(model.inner, flat)
        outer = float(np.linalg.norm(flat - model.center.ravel())) - model.radius
        return max(inner, outer, 0.0)
    if isinstance(model, Shift):
        return membership_distance(model.inner, model.anchor.ravel() - flat)
    if isinstance(model, Union):
        return min(membership_distance(m, flat) for m in model.members)
    return float(np.linalg.norm(flat - project(model, flat).ravel()))


def _as_flat(model: ModelClass, coeff) -> np.ndarray:
    if isinstance(coeff, CoeffTensor):
        if coeff.dims != model.dims:
            raise ValueError("coefficient dims do not match the model basis")
        return coeff.ravel()
    flat = np.asarray(coeff, dtype=float).ravel()
    if flat.shape[0] != model.ambient_dim:
        raise ValueError("coefficient dims do not match the model basis")
    return flat


def _wrap(model: ModelClass, flat: np.ndarray) -> CoeffTensor:
    return dense_tensor(flat.reshape(model.dims))


def _project_batch(model: ModelClass, rows: np.ndarray) -> np.ndarray:
    """Row-wise projection; vectorised for the classes used in hot loops."""
    if isinstance(model, LinearSpan):
        out = np.zeros_like(rows)
        out[:, model.flat_indices] = rows[:, model.flat_indices]
        return out
    if isinstance(model, FullSpace):
        return rows.copy()
    if isinstance(model, TangentLowRank):
        frame = tangent_frame(model)
        return (rows @ frame.T) @ frame
    if isinstance(model, LowRankMatrix):
        mats = rows.reshape(-1, *model.dims)
        u, s, vt = np.linalg.svd(mats)
        r = model.rank
        out = (u[:, :, :r] * s[:, None, :r]) @ vt[:, :r, :]
        return out.reshape(rows.shape)
    if isinstance(model, Shift):
        anchor = model.anchor.ravel()[None, :]
        return anchor - _project_batch(model.inner, anchor - rows)
    return np.stack([project(model, row).ravel() for row in rows])


# ---------------------------------------------------------------------------
# rank-one truncation


def _rank1_truncate(tensor: np.ndarray) -> tuple[np.ndarray, bool, str]:
    """Best rank-one approximation of a dense tensor.

    Exact via SVD for one or two modes; for more modes a higher-order power
    iteration with a fixed number of restarts (deterministic seeds), which is
    the documented truncation oracle rather than a global optimum guarantee.
    """
    if tensor.ndim == 1:
        return tensor.copy(), False, "identity"
    if tensor.ndim == 2:
        u, s, vt = np.linalg.svd(tensor)
        tie = s.shape[0] > 1 and s[0] - s[1] <= _TIE_TOL
        return s[0] * np.outer(u[:, 0], vt[0]), tie, "svd"
    best = None
    for restart in range(_HOPI_RESTARTS):
        factors = _hopi_init(tensor, restart)
        value, factors = _hopi(tensor, factors)
        if best is None or value > best[0]:
            best = (value, factors)
    value, factors = best
    dense = np.full((), value)
    for f in factors:
        dense = np.multiply.outer(dense, f)
    return dense, False, "hopi"


def _hopi_init(tensor: np.ndarray, restart: int) -> list[np.ndarray]:
    if restart == 0:
        # leading left singular vectors of the mode unfoldings
        factors = []
        for m in range(tensor.ndim):
            unfold = np.moveaxis(tensor, m, 0).reshape(tensor.shape[m], -1)
            u, _, _ = np.linalg.svd(unfold, full_matrices=False)
            factors.append(u[:, 0])
        return factors
    rng = make_rng(_HOPI_SEED + restart)
    factors = []
    for d in tensor.shape:
        f = rng.standard_normal(d)
        factors.append(f / np.linalg.norm(f))
    return factors


def _hopi(tensor: np.ndarray, factors: list[np.ndarray]) -> tuple[float, list[np.ndarray]]:
    value = 0.0
    for _ in range(_HOPI_ITERS):
        prev = value
        for m in range(tensor.ndim):
            g = tensor
            for j in range(tensor.ndim - 1, -1, -1):
                if j != m:
                    g = np.tensordot(g, factors[j], axes=([j], [0]))
            norm = float(np.linalg.norm(g))
            if norm <= _DEGENERATE:
                return 0.0, factors
            factors[m] = g / norm
            value = norm
        if abs(value - prev) <= _HOPI_RTOL * max(1.0, abs(value)):
            break
    return value, factors


# ---------------------------------------------------------------------------
# weighted sparsity


_SUPPORT_CACHE: dict = {}


def _greedy_support(model: WeightedSparse, rng) -> np.ndarray:
    """A random maximal admissible support (uniform over permutations, which
    is not uniform over supports; used only beyond the enumeration limit)."""
    budget = model.s**2 + 1e-12
    omega2 = model.omega**2
    support = []
    for k in rng.permutation(model.ambient_dim):
        if omega2[k] <= budget:
            support.append(int(k))
            budget -= omega2[k]
    if not support:
        raise ValueError("no admissible support: budget below every weight")
    return np.asarray(sorted(support), dtype=int)


def _maximal_supports(model: WeightedSparse) -> list[np.ndarray]:
    """All inclusion-maximal admissible supports (enumerated exhaustively)."""
    key = (model.omega.tobytes(), model.s, model.ambient_dim)
    if key in _SUPPORT_CACHE:
        return _SUPPORT_CACHE[key]
    d = model.ambient_dim
    if d > _ENUM_MODES_MAX:
        raise ValueError(
            f"maximal-support enumeration is limited to {_ENUM_MODES_MAX} "
            f"basis functions (got {d})"
        )
    omega2 = model.omega**2
    s2 = model.s**2 + 1e-12
    masks = np.arange(1 << d, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(d)) & 1
    weight = bits @ omega2
    admissible = weight <= s2
    not_maximal = np.zeros_like(admissible)
    for k in range(d):
        absent = bits[:, k] == 0
        grown = masks | (1 << k)
        not_maximal |= absent & admissible[grown]
    supports = [
        np.flatnonzero(bits[m]) for m in np.flatnonzero(admissible & ~not_maximal)
    ]
    if not supports:
        raise ValueError("no admissible support: budget below every weight")
    _SUPPORT_CACHE[key] = supports
    return supports


def _sparse_project(model: WeightedSparse, flat: np.ndarray) -> tuple[np.ndarray, dict]:
    """Keep the admissible support with maximal captured energy.

    Exact 0/1 knapsack when the squared weights fit an integer grid of at
    most ``10^6`` cells; otherwise a greedy pass ordered by energy per unit
    weight, flagged as potentially sub-optimal.
    """
    omega2 = model.omega**2
    values = flat**2
    scaled = _integer_scale(omega2, model.s**2)
    if scaled is not None:
        w_int, cap = scaled
        support, tie = _knapsack(w_int, cap, values)
        info = {"method": "knapsack", "tie": tie}
    else:
        order = np.argsort(-values / omega2, kind="stable")
        support = []
        budget = model.s**2 + 1e-12
        for k in order:
            if omega2[k] <= budget:
                support.append(k)
                budget -= omega2[k]
        support = np.asarray(sorted(support), dtype=int)
        info = {"method": "greedy", "tie": False, "approximate": True}
    out = np.zeros_like(flat)
    out[support] = flat[support]
    return out, info


def _integer_scale(omega2: np.ndarray, s2: float):
    for scale in (1, 10, 100, 1000, 10000):
        cap = int(np.floor(s2 * scale + 1e-9))
        if cap > _KNAPSACK_CELLS:
            return None
        w = omega2 * scale
        w_int = np.round(w).astype(np.int64)
        if np.max(np.abs(w - w_int)) <= 1e-9 * scale:
            return np.maximum(w_int, 1), cap
    return None


def _knapsack(weights: np.ndarray, cap: int, values: np.ndarray) -> tuple[np.ndarray, bool]:
    d = weights.shape[0]
    dp = np.zeros(cap + 1)
    take = np.zeros((d, cap + 1), dtype=bool)
    tie_at = np.zeros((d, cap + 1), dtype=bool)
    for k in range(d):
        w = int(weights[k])
        if w > cap:
            continue
        cand = dp[: cap + 1 - w] + values[k]
        cur = dp[w:]
        better = cand > cur + _TIE_TOL
        equal = np.abs(cand - cur) <= _TIE_TOL
        new = dp.copy()
        new[w:] = np.where(better, cand, cur)
        take[k, w:] = better
        tie_at[k, w:] = equal & (values[k] > _TIE_TOL)
        dp = new
    support = []
    tie = False
    c = cap
    for k in range(d - 1, -1, -1):
        if take[k, c]:
            support.append(k)
            c -= int(weights[k])
        elif tie_at[k, c]:
            tie = True
    return np.asarray(sorted(support), dtype=int), tie
