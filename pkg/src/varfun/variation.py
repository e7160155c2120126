"""Variation functions: worst-case squared amplification of unit elements.

The variation function of a model class A at a point y is the supremum of
``|a(y)|^2`` over unit-norm elements of A.  It controls how many weighted
random samples are needed before the empirical norm is uniformly equivalent
to the ambient norm on A, and its reciprocal is the optimal sampling weight.

Exact formulas exist for linear spans (sum of squared orthonormal basis
functions), for full tensor-product spaces and rank-one cones (per-mode
products), and for tangent spaces of low-rank matrix manifolds (orthonormal
frames).  Everything else is bounded from below by Monte-Carlo sampling of
unit elements, or from above by combination rules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import TensorBasis, as_points
from .measure import (
    FROM_VARIATION,
    NumericalError,
    WeightFunction,
    from_density_weight,
    gauss_legendre_rule,
    make_rng,
    standard_grid,
    tensor_quadrature,
    uniform_weight,
    weighted_sup_norm,
)
from .model import (
    Ball,
    FullSpace,
    LinearSpan,
    ModelClass,
    Rank1Cone,
    Shift,
    TangentLowRank,
    Union,
    WeightedSparse,
    _maximal_supports,
    tangent_frame,
    unit_sample_batch,
)

__all__ = [
    "EXACT",
    "MC_LOWER_BOUND",
    "UPPER_BOUND",
    "VariationFn",
    "VariationNormReport",
    "variation_exact",
    "variation_estimate",
    "variation_combine",
    "variation_norms",
    "variation_complement",
    "optimal_weight",
    "lipschitz_sup_check",
    "LipschitzReport",
    "variation_records",
]

EXACT = "EXACT"
MC_LOWER_BOUND = "MC_LOWER_BOUND"
UPPER_BOUND = "UPPER_BOUND"

UNION = "UNION"
SUM_ORTHOGONAL = "SUM_ORTHOGONAL"
PRODUCT_INDEPENDENT = "PRODUCT_INDEPENDENT"
TENSOR_PRODUCT = "TENSOR_PRODUCT"

_MC_BLOCK = 256  # fixed draw block so sample streams are prefixes of each other
_ENVELOPE_MARGIN = 1.01
_MAX_EXACT_SUPPORTS = 4096


@dataclass(frozen=True)
class VariationFn:
    """A variation function together with what its values are worth.

    ``certificate`` is ``EXACT`` for closed-form values, ``MC_LOWER_BOUND``
    for sampled suprema (never above the truth), and ``UPPER_BOUND`` for
    values from inequalities.  ``from_linear_space`` records whether the
    underlying class is a linear space, which is what the equality cases of
    the sum and tensor-product combination rules require.
    """

    num_modes: int
    certificate: str
    provenance: str
    evaluator: Callable = field(repr=False)
    from_linear_space: bool = False

    def __call__(self, points) -> np.ndarray:
        pts = as_points(points, self.num_modes)
        values = np.asarray(self.evaluator(pts), dtype=float)
        if values.shape != (pts.shape[0],):
            raise ValueError("variation evaluator returned a wrong shape")
        return values


def variation_exact(model: ModelClass) -> VariationFn:
    """Closed-form variation function; raises for unsupported classes.

    Supported: linear spans, full spaces, rank-one cones (whose variation
    collapses to the full space's), shifted versions of those, weighted
    sparsity classes (maximum over maximal supports), tangent spaces of
    low-rank matrix manifolds, and unions of supported classes.
    """
    basis = model.basis
    M = model.num_modes

    if isinstance(model, LinearSpan):
        idx = model.indices

        def span_eval(pts):
            return np.sum(basis.design_matrix(pts, idx) ** 2, axis=1)

        return VariationFn(
            M, EXACT, f"sum of {len(idx)} squared orthonormal basis functions",
            span_eval, from_linear_space=True,
        )

    if isinstance(model, (FullSpace, Rank1Cone)):
        return VariationFn(
            M, EXACT,
            "per-mode product of full-span variations"
            + ("" if isinstance(model, FullSpace) else " (rank-one cone collapse)"),
            _product_eval(basis),
            from_linear_space=isinstance(model, FullSpace),
        )

    if isinstance(model, TangentLowRank):
        frame = tangent_frame(model)

        def frame_eval(pts):
            vals = basis.kernel_rows(pts) @ frame.T
            return np.sum(vals**2, axis=1)

        return VariationFn(
            M, EXACT,
            f"orthonormal frame of the rank-{model.rank} tangent space "
            f"({model.rank}*{model.dims[1]} + {model.dims[0] - model.rank}*{model.rank} functions)",
            frame_eval, from_linear_space=True,
        )

    if isinstance(model, WeightedSparse):
        supports = _maximal_supports(model)
        if len(supports) > _MAX_EXACT_SUPPORTS:
            raise ValueError(
                "too many maximal supports for the exact formula; use variation_estimate"
            )

        def sparse_eval(pts):
            sq = basis.kernel_rows(pts) ** 2
            best = np.zeros(pts.shape[0])
            for sup in supports:
                np.maximum(best, np.sum(sq[:, sup], axis=1), out=best)
            return best

        return VariationFn(
            M, EXACT, f"maximum over {len(supports)} maximal admissible supports",
            sparse_eval,
        )

    if isinstance(model, Shift):
        if isinstance(model.inner, (FullSpace, Rank1Cone)):
            # differences from a rank-one cone (or the full space) span the
            # whole ambient space in the variation sense
            return VariationFn(
                M, EXACT, "shifted class collapsed to the ambient space",
                _product_eval(basis),
            )
        if isinstance(model.inner, LinearSpan):
            span = model.inner
            flat = model.anchor.ravel()
            perp = flat.copy()
            perp[span.flat_indices] = 0.0
            norm = float(np.linalg.norm(perp))
            in_span = norm <= 1e-12
            extra = None if in_span else perp / norm

            def shift_eval(pts):
                out = np.sum(basis.design_matrix(pts, span.indices) ** 2, axis=1)
                if extra is not None:
                    out = out + (basis.kernel_rows(pts) @ extra) ** 2
                return out

            return VariationFn(
                M, EXACT,
                "span extended by the anchor direction" if not in_span
                else "shifted span equals the span",
                shift_eval, from_linear_space=in_span,
            )
        raise ValueError(
            "exact variation of a shifted class needs a span, full-space, or "
            "rank-one inner class"
        )

    if isinstance(model, Union):
        parts = [variation_exact(m) for m in model.members]

        def union_eval(pts):
            vals = parts[0](pts)
            for p in parts[1:]:
                np.maximum(vals, p(pts), out=vals)
            return vals

        return VariationFn(
            M, EXACT, f"pointwise maximum over {len(parts)} union members", union_eval
        )

    raise ValueError(f"no exact variation formula for {type(model).__name__}")


def _product_eval(basis: TensorBasis):
    def evaluate(pts):
        tables = basis.eval_tables(pts)
        out = np.sum(tables[0] ** 2, axis=1)
        for t in tables[1:]:
            out *= np.sum(t**2, axis=1)
        return out

    return evaluate


def variation_estimate(model: ModelClass, num_samples: int, seed: int) -> VariationFn:
    """Monte-Carlo lower bound: max of ``a(y)^2`` over sampled unit elements.

    Every evaluation replays the same sample stream from `seed`, so the value
    at a point does not depend on which other points it is evaluated with,
    and draws arrive in fixed-size blocks so that for a fixed seed the sample
    stream for a larger ``num_samples`` extends the smaller one: estimates
    are monotone in the sample budget.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    basis = model.basis

    def evaluate(pts):
        kern = basis.kernel_rows(pts)
        best = np.zeros(pts.shape[0])
        rng = make_rng(seed)
        remaining = num_samples
        while remaining > 0:
            rows = unit_sample_batch(model, _MC_BLOCK, rng)
            take = min(remaining, _MC_BLOCK)
            vals = rows[:take] @ kern.T
            np.maximum(best, np.max(vals**2, axis=0), out=best)
            remaining -= take
        return best

    return VariationFn(
        model.num_modes,
        MC_LOWER_BOUND,
        f"max of squared values over {num_samples} unit samples (seed {seed})",
        evaluate,
    )


_CERT_RANK = {EXACT: 0, MC_LOWER_BOUND: 1, UPPER_BOUND: 2}


def _merge_certificates(a: str, b: str) -> str:
    if MC_LOWER_BOUND in (a, b) and UPPER_BOUND in (a, b):
        raise ValueError("cannot combine a lower bound with an upper bound")
    return max(a, b, key=lambda c: _CERT_RANK[c])


def variation_combine(rule: str, a: VariationFn, b: VariationFn) -> VariationFn:
    """Combine two variation functions along a set operation.

    ``UNION``: pointwise maximum (same modes).  ``SUM_ORTHOGONAL``: pointwise
    sum; exact only when both inputs are exact linear spaces, otherwise an
    upper bound (and exact inputs are required, because a sum of lower bounds
    certifies nothing).  ``PRODUCT_INDEPENDENT``: product over concatenated
    mode blocks, exact for sets of pure tensor products.  ``TENSOR_PRODUCT``:
    same evaluator, but the equality is for tensor products of linear spaces,
    so both inputs must come from linear spaces.
    """
    if rule == UNION:
        if a.num_modes != b.num_modes:
            raise ValueError("union requires matching mode counts")
        cert = _merge_certificates(a.certificate, b.certificate)
        return VariationFn(
            a.num_modes, cert, f"max[{a.provenance} | {b.provenance}]",
            lambda pts: np.maximum(a(pts), b(pts)),
        )

    if rule == SUM_ORTHOGONAL:
        if a.num_modes != b.num_modes:
            raise ValueError("orthogonal sum requires matching mode counts")
        if MC_LOWER_BOUND in (a.certificate, b.certificate):
            raise ValueError("orthogonal-sum rule needs exact or upper-bound inputs")
        spaces = a.from_linear_space and b.from_linear_space
        both_exact = a.certificate == EXACT and b.certificate == EXACT
        cert = EXACT if (spaces and both_exact) else UPPER_BOUND
        note = "orthogonal sum (equality: both linear spaces)" if cert == EXACT \
            else "orthogonal sum upper bound"
        return VariationFn(
            a.num_modes, cert, f"{note}[{a.provenance} + {b.provenance}]",
            lambda pts: a(pts) + b(pts), from_linear_space=spaces,
        )

    if rule in (PRODUCT_INDEPENDENT, TENSOR_PRODUCT):
        if rule == TENSOR_PRODUCT and not (a.from_linear_space and b.from_linear_space):
            raise ValueError("tensor-product rule applies to linear spaces only")
        cert = _merge_certificates(a.certificate, b.certificate)
        ma = a.num_modes

        def prod_eval(pts):
            return a(pts[:, :ma]) * b(pts[:, ma:])

        return VariationFn(
            ma + b.num_modes, cert,
            f"{'tensor' if rule == TENSOR_PRODUCT else 'independent'} product "
            f"[{a.provenance} x {b.provenance}]",
            prod_eval,
            from_linear_space=rule == TENSOR_PRODUCT,
        )

    raise ValueError(f"unknown combination rule {rule!r}")


@dataclass(frozen=True)
class VariationNormReport:
    """Weighted sup-norm and L1 norm of a variation function."""

    sup_norm: float
    l1_norm: float
    num_modes: int
    certificate: str
    weight_kind: str
    note: str = ""


def _l1_norm(k: VariationFn) -> tuple[float, str]:
    if k.num_modes <= 3:
        pts, qw = tensor_quadrature(k.num_modes)
        return float(qw @ k(pts)), "tensorised Gauss-Legendre"
    grid = standard_grid(k.num_modes)
    return float(np.mean(k(grid))), "Monte-Carlo grid average"


def variation_norms(
    k: VariationFn, weight: WeightFunction | None = None, grid=None
) -> VariationNormReport:
    """Grid sup of ``w * K`` and quadrature value of ``int K drho``."""
    weight = weight if weight is not None else uniform_weight(k.num_modes)
    if weight.num_modes != k.num_modes:
        raise ValueError("weight and variation disagree on the number of modes")
    pts = standard_grid(k.num_modes) if grid is None else as_points(grid, k.num_modes)
    sup = float(np.max(weight.evaluate(pts) * k(pts)))
    l1, how = _l1_norm(k)
    return VariationNormReport(
        sup_norm=sup, l1_norm=l1, num_modes=k.num_modes,
        certificate=k.certificate, weight_kind=weight.kind, note=f"l1 via {how}",
    )


def variation_complement(k_space: VariationFn, basis: TensorBasis) -> VariationFn:
    """Variation of the orthogonal complement of a linear space.

    Pointwise, the squared basis values split over any orthonormal frame of
    ``ambient = space ⊕ complement``, so the complement's variation is the
    ambient product formula minus the space's.
    """
    if not (k_space.certificate == EXACT and k_space.from_linear_space):
        raise ValueError("complement requires an exact linear-space variation")
    if basis.num_modes != k_space.num_modes:
        raise ValueError("basis and variation disagree on the number of modes")
    full = _product_eval(basis)

    def comp_eval(pts):
        return np.maximum(full(pts) - k_space(pts), 0.0)

    return VariationFn(
        k_space.num_modes, EXACT,
        f"ambient minus [{k_space.provenance}]",
        comp_eval, from_linear_space=True,
    )


def optimal_weight(k: VariationFn, grid=None) -> WeightFunction:
    """The weight ``w = |K|_{L1} / K`` that minimises the weighted sup norm.

    With this weight, ``w * K`` is constant equal to the L1 norm, which is
    the smallest achievable weighted sup norm.  Sampling uses rejection from
    the uniform measure with an envelope just above the grid supremum of the
    density ``K / |K|_{L1}``; a strictly larger off-grid density aborts the
    draw rather than biasing it.
    """
    l1, how = _l1_norm(k)
    if not math.isfinite(l1) or l1 <= 0:
        raise NumericalError("variation function must have positive finite L1 norm")
    pts = standard_grid(k.num_modes) if grid is None else as_points(grid, k.num_modes)
    grid_vals = k(pts)
    check_vals = [grid_vals]
    if k.num_modes <= 3:
        qpts, _ = tensor_quadrature(k.num_modes)
        check_vals.append(k(qpts))
    if min(float(np.min(v)) for v in check_vals) <= 0.0:
        raise NumericalError(
            "variation vanishes at an evaluation node; the optimal weight is undefined there"
        )
    envelope = _ENVELOPE_MARGIN * float(np.max(grid_vals)) / l1

    def density(p):
        return k(p) / l1

    return from_density_weight(
        density, k.num_modes, envelope,
        note=f"optimal weight from variation ({k.provenance}); l1 via {how}",
    )


@dataclass(frozen=True)
class LipschitzReport:
    lhs: float
    hausdorff: float
    passed: bool
    num_functions: tuple[int, int]


def lipschitz_sup_check(
    funcs_u: Sequence[Callable],
    funcs_v: Sequence[Callable],
    num_modes: int,
    weight: WeightFunction | None = None,
    grid=None,
) -> LipschitzReport:
    """Check that pointwise suprema are 1-Lipschitz in the Hausdorff distance.

    Both the deviation of the two suprema and the Hausdorff distance between
    the function collections are measured in the same grid-restricted
    ``sqrt(w)``-weighted sup seminorm, where the inequality holds exactly.
    """
    weight = weight if weight is not None else uniform_weight(num_modes)
    pts = standard_grid(num_modes) if grid is None else as_points(grid, num_modes)
    sqw = np.sqrt(weight.evaluate(pts))
    fu = np.stack([np.asarray(f(pts), dtype=float) for f in funcs_u])
    fv = np.stack([np.asarray(f(pts), dtype=float) for f in funcs_v])
    lhs = float(np.max(sqw * np.abs(np.max(fu, axis=0) - np.max(fv, axis=0))))
    # pairwise seminorm distances between the collections
    dists = np.max(sqw[None, None, :] * np.abs(fu[:, None, :] - fv[None, :, :]), axis=2)
    hausdorff = float(max(np.max(np.min(dists, axis=1)), np.max(np.min(dists, axis=0))))
    return LipschitzReport(
        lhs=lhs, hausdorff=hausdorff, passed=lhs <= hausdorff + 1e-12,
        num_functions=(len(funcs_u), len(funcs_v)),
    )


def variation_records(k: VariationFn, points) -> list[dict]:
    """Rows ``{y_1..y_M, K_value, certificate}`` for delimited export."""
    pts = as_points(points, k.num_modes)
    values = k(pts)
    rows = []
    for i in range(pts.shape[0]):
        row = {f"y_{m + 1}": float(pts[i, m]) for m in range(k.num_modes)}
        row["K_value"] = float(values[i])
        row["certificate"] = k.certificate
        rows.append(row)
    return rows
