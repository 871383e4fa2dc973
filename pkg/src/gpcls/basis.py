"""Orthonormal polynomial families for the Gaussian and Jacobi probability measures.

Both families are evaluated with the three-term recurrence written for
orthonormal polynomials,

    sqrt(b_{k+1}) p_{k+1}(y) = (y - a_k) p_k(y) - sqrt(b_k) p_{k-1}(y),

which is stable on the support of the measure. Gauss rules come from the
eigen-decomposition of the associated Jacobi matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import DegreeTooLarge, DimensionMismatch, DomainError, OrderTooLarge

MAX_DEGREE = 200
MAX_ORDER = 500

HERMITE = "hermite"
JACOBI = "jacobi"


@dataclass(frozen=True)
class PolynomialFamily:
    """A family of univariate orthonormal polynomials.

    Attributes:
        kind: ``"hermite"`` (standard Gaussian measure) or ``"jacobi"``
            (density proportional to ``(1-y)^a (1+y)^b`` on [-1, 1]).
        a: First Jacobi exponent, ignored for Hermite.
        b: Second Jacobi exponent, ignored for Hermite.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in (HERMITE, JACOBI):
            raise ValueError(f"unknown polynomial family {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == HERMITE:
            object.__setattr__(self, "a", 0.0)
            object.__setattr__(self, "b", 0.0)
        else:
            if not (self.a > -1 and self.b > -1):
                raise ValueError("Jacobi parameters must satisfy a, b > -1")
            object.__setattr__(self, "a", float(self.a))
            object.__setattr__(self, "b", float(self.b))

    @classmethod
    def hermite(cls) -> "PolynomialFamily":
        return cls(HERMITE)

    @classmethod
    def jacobi(cls, a: float = 0.0, b: float = 0.0) -> "PolynomialFamily":
        return cls(JACOBI, a, b)

    @property
    def bounded(self) -> bool:
        return self.kind == JACOBI

    def recurrence(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(alpha[0..n-1], sqrt_beta[1..n])`` of the orthonormal recurrence."""
        return _recurrence(self, int(n))


@lru_cache(maxsize=64)
def _recurrence(family: PolynomialFamily, n: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(n, dtype=float)
    kk = np.arange(1, n + 1, dtype=float)
    if family.kind == HERMITE:
        alpha = np.zeros(n)
        beta = kk
    else:
        a, b = family.a, family.b
        ab = a + b
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = (b * b - a * a) / ((2 * k + ab) * (2 * k + ab + 2))
            t = 2 * kk + ab
            beta = 4 * kk * (kk + a) * (kk + b) * (kk + ab) / (t * t * (t + 1) * (t - 1))
        if n > 0:
            alpha[0] = (b - a) / (ab + 2)
        beta[0] = 4 * (1 + a) * (1 + b) / ((2 + ab) ** 2 * (3 + ab))
    sqrt_beta = np.sqrt(beta)
    alpha.setflags(write=False)
    sqrt_beta.setflags(write=False)
    return alpha, sqrt_beta


def _check_domain(family: PolynomialFamily, y: np.ndarray) -> None:
    if family.kind == JACOBI and np.any(np.abs(y) > 1):
        raise DomainError("Jacobi polynomials are evaluated on [-1, 1]")


def eval_all(family: PolynomialFamily, max_degree: int, y, *, limit: int = MAX_DEGREE) -> np.ndarray:
    """Evaluate ``p_0..p_max_degree`` at ``y``.

    Returns:
        Array of shape ``y.shape + (max_degree + 1,)``.
    """
    if max_degree > limit:
        raise DegreeTooLarge(f"degree {max_degree} exceeds the configured maximum {limit}")
    if max_degree < 0:
        raise ValueError("degree must be non-negative")
    y = np.asarray(y, dtype=float)
    _check_domain(family, y)
    alpha, sqrt_beta = family.recurrence(max_degree + 1)
    out = np.empty(y.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    if max_degree >= 1:
        out[..., 1] = (y - alpha[0]) / sqrt_beta[0]
    for k in range(1, max_degree):
        out[..., k + 1] = ((y - alpha[k]) * out[..., k] - sqrt_beta[k - 1] * out[..., k - 1]) / sqrt_beta[k]
    return out


def eval_univariate(family: PolynomialFamily, degree: int, y, *, limit: int = MAX_DEGREE):
    """Value of the orthonormal polynomial of the given degree at ``y`` (scalar or array)."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    vals = eval_all(family, degree, y, limit=limit)[..., degree]
    return float(vals) if np.ndim(vals) == 0 else vals


def eval_tensor(family: PolynomialFamily, s: Sequence[int], y) -> float:
    """Tensor-product basis function ``prod_j p_{s_j}(y_j)``.

    ``s`` lists the dense entries ``s_1, s_2, ...`` (a MultiIndex works directly).
    """
    y = np.asarray(y, dtype=float).ravel()
    entries = list(s)
    while entries and entries[-1] == 0:
        entries.pop()
    if len(entries) > y.size:
        raise DimensionMismatch(f"point has {y.size} coordinates, index needs {len(entries)}")
    out = 1.0
    for j, k in enumerate(entries):
        if k:
            out *= eval_univariate(family, int(k), y[j])
    return out


def eval_tensor_batch(family: PolynomialFamily, indices: Sequence[Sequence[int]], points,
                      chunk: int = 1024) -> np.ndarray:
    """Evaluate a list of tensor basis functions at many points.

    Args:
        family: Polynomial family used in every coordinate.
        indices: Dense multi-indices (MultiIndex instances or int sequences).
        points: Array of shape (N, J).
        chunk: Number of points processed at once.

    Returns:
        Array of shape (N, len(indices)).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n_pts, n_dim = pts.shape
    dense = _dense_array(indices)
    if dense.shape[1] > n_dim:
        raise DimensionMismatch(f"points have {n_dim} coordinates, basis needs {dense.shape[1]}")
    out = np.ones((n_pts, len(dense)))
    if dense.size == 0 or n_pts == 0:
        return out
    # per coordinate, only the indices with a nonzero degree are touched; the
    # work array is (index, point) so that these gathers copy contiguous rows
    cols = {j: np.flatnonzero(dense[:, j]) for j in range(dense.shape[1])}
    cols = {j: c for j, c in cols.items() if len(c)}
    for start in range(0, n_pts, chunk):
        block = pts[start:start + chunk]
        res = np.ones((len(dense), len(block)))
        for j, c in cols.items():
            deg = dense[c, j]
            table = np.ascontiguousarray(eval_all(family, int(deg.max()), block[:, j]).T)
            res[c] *= table[deg]
        out[start:start + chunk] = res.T
    return out


def _dense_array(indices: Sequence[Sequence[int]]) -> np.ndarray:
    width = max((len(s) for s in indices), default=0)
    dense = np.zeros((len(indices), width), dtype=np.int64)
    for i, s in enumerate(indices):
        dense[i, :len(s)] = s
    return dense


def log_jacobi_constant(a: float, b: float) -> float:
    """Logarithm of the normalizing constant of ``(1-y)^a (1+y)^b`` on [-1, 1]."""
    return float(gammaln(a + b + 2) - (a + b + 1) * math.log(2.0) - gammaln(a + 1) - gammaln(b + 1))


def density(family: PolynomialFamily, y):
    """Probability density of the family's measure at ``y`` (scalar or array)."""
    y_arr = np.asarray(y, dtype=float)
    if family.kind == HERMITE:
        out = np.exp(-0.5 * y_arr * y_arr) / math.sqrt(2 * math.pi)
    else:
        a, b = family.a, family.b
        if np.any(np.abs(y_arr) > 1):
            raise DomainError("Jacobi density is supported on [-1, 1]")
        if (a < 0 and np.any(y_arr == 1)) or (b < 0 and np.any(y_arr == -1)):
            raise DomainError("Jacobi density is singular at this endpoint")
        with np.errstate(divide="ignore"):
            out = np.exp(log_jacobi_constant(a, b)) * (1 - y_arr) ** a * (1 + y_arr) ** b
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule for a probability measure; nodes ascending, weights sum to one."""

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> np.ndarray:
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def quadrature(family: PolynomialFamily, order: int, *, limit: int = MAX_ORDER) -> QuadratureRule:
    """Gauss quadrature with ``order`` nodes (Golub-Welsch)."""
    if order < 1:
        raise ValueError("quadrature order must be positive")
    if order > limit:
        raise OrderTooLarge(f"order {order} exceeds the configured maximum {limit}")
    return _quadrature(family, int(order))


@lru_cache(maxsize=256)
def _quadrature(family: PolynomialFamily, order: int) -> QuadratureRule:
    alpha, sqrt_beta = family.recurrence(order)
    if order == 1:
        nodes, vecs = np.array([alpha[0]]), np.ones((1, 1))
    else:
        nodes, vecs = eigh_tridiagonal(np.array(alpha), np.array(sqrt_beta[:order - 1]))
    # Christoffel form 1 / sum_k p_k(x)^2: keeps relative accuracy of the tiny
    # outer weights, which the squared eigenvector entries lose
    P = eval_all(family, order - 1, nodes, limit=order)
    weights = 1.0 / np.einsum("ij,ij->i", P, P)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes, weights)
