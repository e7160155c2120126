"""Orthonormal Legendre bases, tensorization, and coefficient tensors.

Functions on ``[-1, 1]^M`` are represented by coefficient tensors with
respect to a tensor-product basis that is orthonormal for the uniform
probability measure.  Coefficient tensors come in a dense and a rank-one
flavour; the rank-one format stores one factor vector per mode and never
materialises the full tensor unless asked to.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .measure import gauss_legendre_rule

__all__ = [
    "eval_legendre",
    "legendre_table",
    "UnivariateBasis",
    "LegendreBasis",
    "TensorBasis",
    "legendre_tensor_basis",
    "CoeffTensor",
    "dense_tensor",
    "rank1_tensor",
    "eval_function",
    "expand_univariate",
]

DENSE = "DENSE"
RANK1 = "RANK1"


def _validate_nodes(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.size and float(np.max(np.abs(y))) > 1.0:
        raise ValueError("Legendre basis evaluated outside [-1, 1]")
    return y


def legendre_table(y, dim: int) -> np.ndarray:
    """Evaluate the first `dim` orthonormal Legendre polynomials.

    Parameters
    ----------
    y : array_like, shape (n,)
        Evaluation nodes in ``[-1, 1]``.
    dim : int
        Number of polynomials, degrees ``0 .. dim - 1``.

    Returns
    -------
    ndarray, shape (n, dim)
        ``table[i, k] = b_k(y_i)`` where ``b_k = sqrt(2k + 1) P_k`` is the
        Legendre polynomial normalised in ``L^2([-1, 1], dx/2)``.
    """
    if dim < 1:
        raise ValueError("basis dimension must be >= 1")
    y = _validate_nodes(np.atleast_1d(y))
    table = np.empty((y.shape[0], dim))
    table[:, 0] = 1.0
    if dim > 1:
        table[:, 1] = y
    for k in range(1, dim - 1):
        # monic-free three-term recurrence for the unnormalised P_k
        table[:, k + 1] = ((2 * k + 1) * y * table[:, k] - k * table[:, k - 1]) / (k + 1)
    return table * np.sqrt(2 * np.arange(dim) + 1.0)


def eval_legendre(k: int, y):
    """Value of the orthonormal Legendre polynomial of degree `k` at `y`."""
    if k < 0:
        raise ValueError("degree must be >= 0")
    y = np.asarray(y, dtype=float)
    out = legendre_table(y.ravel(), k + 1)[:, k]
    return out.reshape(y.shape) if y.shape else float(out[0])


class UnivariateBasis:
    """Abstract orthonormal basis of a univariate polynomial space.

    Concrete bases provide ``dim`` and :meth:`eval_table`; orthonormality is
    with respect to the uniform probability measure on ``[-1, 1]``.
    """

    dim: int

    def eval_table(self, y) -> np.ndarray:
        """Return the ``(n, dim)`` table of basis values at nodes `y`."""
        raise NotImplementedError


@dataclass(frozen=True)
class LegendreBasis(UnivariateBasis):
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("basis dimension must be >= 1")

    def eval_table(self, y) -> np.ndarray:
        return legendre_table(y, self.dim)


@dataclass(frozen=True)
class TensorBasis:
    """Tensor product of univariate bases, one per mode."""

    modes: tuple[UnivariateBasis, ...]

    def __post_init__(self):
        if not self.modes:
            raise ValueError("tensor basis needs at least one mode")

    @property
    def num_modes(self) -> int:
        return len(self.modes)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(b.dim for b in self.modes)

    @property
    def ambient_dim(self) -> int:
        return int(np.prod(self.dims))

    def eval_tables(self, points) -> list[np.ndarray]:
        """Per-mode value tables ``[(n, d_1), ..., (n, d_M)]`` at `points`."""
        pts = as_points(points, self.num_modes)
        return [b.eval_table(pts[:, m]) for m, b in enumerate(self.modes)]

    def design_matrix(self, points, indices) -> np.ndarray:
        """Values of the tensor basis functions for the given multi-indices.

        Returns the ``(n, len(indices))`` matrix with entries
        ``prod_m b_{k_m}(y^i_m)``.
        """
        idx = np.atleast_2d(np.asarray(indices, dtype=int))
        if idx.shape[1] != self.num_modes:
            raise ValueError("multi-indices must have one entry per mode")
        tables = self.eval_tables(points)
        design = tables[0][:, idx[:, 0]].copy()
        for m in range(1, self.num_modes):
            design *= tables[m][:, idx[:, m]]
        return design

    def kernel_rows(self, points) -> np.ndarray:
        """Flattened full tensor-basis values, shape ``(n, ambient_dim)``."""
        tables = self.eval_tables(points)
        rows = tables[0]
        for m in range(1, self.num_modes):
            rows = rows[:, :, None] * tables[m][:, None, :]
            rows = rows.reshape(rows.shape[0], -1)
        return rows


def legendre_tensor_basis(dims: Sequence[int]) -> TensorBasis:
    """Tensor-product Legendre basis with the given per-mode dimensions."""
    return TensorBasis(tuple(LegendreBasis(int(d)) for d in dims))


def as_points(points, num_modes: int) -> np.ndarray:
    """Coerce `points` to an ``(n, num_modes)`` float array."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if num_modes == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != num_modes:
        raise ValueError(f"expected points of shape (n, {num_modes}), got {pts.shape}")
    return pts


@dataclass
class CoeffTensor:
    """Coefficient tensor of a function in a tensor-product basis.

    ``representation`` is either ``DENSE`` (``data`` is an ndarray of shape
    ``dims``) or ``RANK1`` (``data`` is a tuple of per-mode factor vectors,
    the tensor being their outer product).
    """

    dims: tuple[int, ...]
    representation: str
    data: object

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if self.representation == DENSE:
            arr = np.asarray(self.data, dtype=float)
            if arr.shape != self.dims:
                raise ValueError(f"dense data shape {arr.shape} != dims {self.dims}")
            self.data = arr
        elif self.representation == RANK1:
            factors = tuple(np.asarray(f, dtype=float).ravel() for f in self.data)
            if len(factors) != len(self.dims) or any(
                f.shape[0] != d for f, d in zip(factors, self.dims)
            ):
                raise ValueError("rank-1 factors do not match dims")
            self.data = factors
        else:
            raise ValueError(f"unknown representation {self.representation!r}")

    @property
    def num_modes(self) -> int:
        return len(self.dims)

    def to_dense(self) -> np.ndarray:
        if self.representation == DENSE:
            return self.data
        dense = self.data[0]
        for f in self.data[1:]:
            dense = np.multiply.outer(dense, f)
        return dense

    def ravel(self) -> np.ndarray:
        return self.to_dense().ravel()

    def norm(self) -> float:
        """Ambient norm; by orthonormality this is the coefficient 2-norm."""
        if self.representation == RANK1:
            return float(np.prod([np.linalg.norm(f) for f in self.data]))
        return float(np.linalg.norm(self.data))

    def to_json(self) -> str:
        if self.representation == DENSE:
            payload = self.data.ravel().tolist()
        else:
            payload = [f.tolist() for f in self.data]
        return json.dumps(
            {"dims": list(self.dims), "representation": self.representation, "data": payload}
        )

    @classmethod
    def from_json(cls, text: str) -> "CoeffTensor":
        obj = json.loads(text)
        dims = tuple(int(d) for d in obj["dims"])
        rep = obj["representation"]
        if rep == DENSE:
            data = np.asarray(obj["data"], dtype=float).reshape(dims)
        else:
            data = tuple(np.asarray(f, dtype=float) for f in obj["data"])
        return cls(dims, rep, data)


def dense_tensor(array) -> CoeffTensor:
    arr = np.asarray(array, dtype=float)
    return CoeffTensor(arr.shape, DENSE, arr)


def rank1_tensor(factors: Sequence) -> CoeffTensor:
    factors = tuple(np.asarray(f, dtype=float).ravel() for f in factors)
    return CoeffTensor(tuple(f.shape[0] for f in factors), RANK1, factors)


def eval_function(basis: TensorBasis, coeff: CoeffTensor, points) -> np.ndarray:
    """Evaluate the function with coefficients `coeff` at `points`.

    The rank-one path costs ``O(n * sum(dims))`` instead of
    ``O(n * prod(dims))``.
    """
    if coeff.dims != basis.dims:
        raise ValueError(f"coefficient dims {coeff.dims} != basis dims {basis.dims}")
    tables = basis.eval_tables(points)
    if coeff.representation == RANK1:
        values = tables[0] @ coeff.data[0]
        for table, f in zip(tables[1:], coeff.data[1:]):
            values *= table @ f
        return values
    values = np.tensordot(tables[0], coeff.data, axes=([1], [0]))
    for table in tables[1:]:
        # contract the leading remaining mode against the matching table row
        values = np.einsum("ij,ij...->i...", table, values)
    return values


def expand_univariate(f: Callable, dim: int, num_nodes: int = 64) -> np.ndarray:
    """Coefficients of the degree ``< dim`` best approximation of `f`.

    ``c_k = \\int f b_k d\\rho`` computed by Gauss-Legendre quadrature; exact
    whenever ``f`` is a polynomial with ``deg f + dim - 1 < 2 num_nodes``.
    """
    nodes, weights = gauss_legendre_rule(num_nodes)
    fvals = np.asarray(f(nodes), dtype=float)
    return legendre_table(nodes, dim).T @ (weights * fvals)
