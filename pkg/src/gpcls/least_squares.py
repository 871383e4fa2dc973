"""Weighted least-squares recovery in a finite polynomial space.

Scalar targets are fitted by a column-pivoted QR factorization of
``W^{1/2} L``; vector-valued (Bochner) targets reuse the same factorization
and apply it to every coordinate separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr, solve_triangular

from .basis import PolynomialFamily, eval_tensor_batch
from .errors import RankDeficient, ShapeMismatch
from .indexing import Approximant, IndexSet
from .sampling import SamplePlan

__all__ = [
    "Approximant",
    "DesignMatrix",
    "assemble_design",
    "evaluate",
    "gram_diagnostics",
    "operator_norm_tensor_check",
    "solve_bochner",
    "solve_scalar",
]

COND_TOL = 1e-12


@dataclass(frozen=True)
class DesignMatrix:
    """Evaluation matrix ``L[i, s] = phi_s(y_i)`` with its sample weights.

    Attributes:
        L: Array of shape (rows, cols).
        weights: Weight ``omega_i`` per row.
        basis: Index set giving the column order.
        plan: Plan the rows were evaluated on, if any.
        weight_scale: Common weight factor of the plan (see ``SamplePlan``).
    """

    L: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    basis: IndexSet
    plan: SamplePlan | None = field(default=None, repr=False)
    weight_scale: float = 1.0

    def __post_init__(self):
        L = np.atleast_2d(np.asarray(self.L, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if L.shape[0] != len(w):
            raise ShapeMismatch(f"{L.shape[0]} rows but {len(w)} weights")
        if L.shape[1] != len(self.basis):
            raise ShapeMismatch(f"{L.shape[1]} columns but {len(self.basis)} basis functions")
        if not np.all(np.isfinite(L)):
            raise ValueError("design matrix has non-finite entries")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "weights", w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.L.shape


def assemble_design(family: PolynomialFamily, basis: IndexSet, plan: SamplePlan) -> DesignMatrix:
    """Evaluate the basis at the plan's points."""
    L = eval_tensor_batch(family, basis.indices, plan.points)
    return DesignMatrix(L, plan.weights, basis, plan, plan.weight_scale)


@dataclass(frozen=True)
class _Factorization:
    Q: np.ndarray
    R: np.ndarray
    perm: np.ndarray
    sqrt_w: np.ndarray
    pinv: np.ndarray | None = None


def _factorize(design: DesignMatrix, cond_tol: float, allow_rank_deficient: bool) -> _Factorization:
    n, m = design.shape
    sqrt_w = np.sqrt(design.weights)
    A = sqrt_w[:, None] * design.L
    if n < m:
        if not allow_rank_deficient:
            raise RankDeficient(f"{n} samples for {m} basis functions", 0.0)
        return _Factorization(np.empty(0), np.empty(0), np.empty(0), sqrt_w, np.linalg.pinv(A, rcond=np.sqrt(cond_tol)))
    Q, R, perm = qr(A, mode="economic", pivoting=True)
    sv = np.linalg.svd(R, compute_uv=False)
    lam_max = sv[0] ** 2
    lam_min = sv[-1] ** 2
    if lam_max == 0 or lam_min < cond_tol * lam_max:
        if not allow_rank_deficient:
            raise RankDeficient(f"weighted Gram matrix is singular (lambda_min/lambda_max = "
                                f"{lam_min / lam_max if lam_max else 0.0:.3g})", float(lam_min))
        return _Factorization(Q, R, perm, sqrt_w, np.linalg.pinv(A, rcond=np.sqrt(cond_tol)))
    return _Factorization(Q, R, perm, sqrt_w)


def _apply(fac: _Factorization, b: np.ndarray) -> np.ndarray:
    rhs = fac.sqrt_w * b
    if fac.pinv is not None:
        return fac.pinv @ rhs
    z = solve_triangular(fac.R, fac.Q.T @ rhs)
    out = np.empty_like(z)
    out[fac.perm] = z
    return out


def solve_scalar(design: DesignMatrix, samples, *, cond_tol: float = COND_TOL,
                 allow_rank_deficient: bool = False) -> Approximant:
    """Weighted least-squares fit of scalar samples.

    Args:
        design: Design matrix with weights.
        samples: One value per row.
        cond_tol: Smallest admissible ``lambda_min / lambda_max`` of ``L^T W L``.
        allow_rank_deficient: Use a truncated pseudo-inverse instead of raising.

    Raises:
        RankDeficient: if the weighted Gram matrix is numerically singular.
        ShapeMismatch: if ``samples`` does not have one entry per row.
    """
    b = np.asarray(samples, dtype=float)
    if b.ndim != 1 or len(b) != design.shape[0]:
        raise ShapeMismatch(f"expected {design.shape[0]} samples, got shape {b.shape}")
    fac = _factorize(design, cond_tol, allow_rank_deficient)
    return Approximant(design.basis, _apply(fac, b)[:, None])


def solve_bochner(design: DesignMatrix, samples, *, cond_tol: float = COND_TOL,
                  allow_rank_deficient: bool = False) -> Approximant:
    """Least-squares fit applied coordinatewise to samples of shape (rows, d).

    Each column goes through exactly the arithmetic of ``solve_scalar``, so the
    result is bitwise identical to separate scalar fits.
    """
    B = np.asarray(samples, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if B.ndim != 2 or B.shape[0] != design.shape[0]:
        raise ShapeMismatch(f"expected {design.shape[0]} sample rows, got shape {B.shape}")
    fac = _factorize(design, cond_tol, allow_rank_deficient)
    coeffs = np.empty((design.shape[1], B.shape[1]))
    for col in range(B.shape[1]):
        coeffs[:, col] = _apply(fac, np.ascontiguousarray(B[:, col]))
    return Approximant(design.basis, coeffs)


def evaluate(approx: Approximant, family: PolynomialFamily, y) -> np.ndarray:
    """Value of the expansion at ``y``.

    Returns:
        Vector of length ``x_dim`` for a single point, or (N, x_dim) for a
        batch of points of shape (N, J).
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim <= 1
    pts = np.atleast_2d(y.ravel() if single else y)
    vals = eval_tensor_batch(family, approx.basis.indices, pts) @ approx.coefficients
    return vals[0] if single else vals


def gram_diagnostics(design: DesignMatrix) -> dict:
    """Extreme eigenvalues of ``L^T W L / (rows * weight_scale)``.

    The normalization makes the expected Gram matrix the identity for plans
    drawn from the sampling density.
    """
    n, m = design.shape
    A = np.sqrt(design.weights)[:, None] * design.L
    ev = np.linalg.eigvalsh(A.T @ A / (n * design.weight_scale)) if n and m else np.zeros(1)
    return {"lambda_min": float(ev[0]), "lambda_max": float(ev[-1]), "size": (n, m)}


def operator_norm_tensor_check(A, sigmas, d: int) -> dict:
    """Operator norm of ``B = A diag(1/sigma)`` and of its lift ``B kron I_d``.

    The lifted norm is computed by brute force on the ``kd x sd`` matrix.
    Complex matrices are supported.
    """
    A = np.atleast_2d(np.asarray(A))
    sig = np.asarray(sigmas, dtype=float).ravel()
    if A.shape[1] != len(sig):
        raise ShapeMismatch("one sigma per column is required")
    if np.any(sig <= 0):
        raise ValueError("sigmas must be positive")
    if d < 1:
        raise ValueError("d must be a positive integer")
    B = A / sig[None, :]
    scalar = float(np.linalg.norm(B, 2))
    lifted = float(np.linalg.norm(np.kron(B, np.eye(d)), 2))
    return {"scalar_norm": scalar, "lifted_norm": lifted}
