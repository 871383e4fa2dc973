"""One-dimensional parametric diffusion problems on D = (0, 1).

``-(a(y)(x) u'(x))' = f`` with ``u(0) = u(1) = 0`` is discretized by P1 finite
elements on a uniform mesh, with the coefficient sampled at element midpoints.
The coefficient is either lognormal, ``a = exp(sum_j y_j psi_j)``, or affine,
``a = abar + sum_j y_j psi_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.linalg import solve_banded

from .basis import PolynomialFamily
from .errors import DimensionMismatch, EllipticityViolation, SingularSystem
from .indexing import Approximant
from .least_squares import evaluate
from .sampling import draw_mu

LOGNORMAL = "lognormal"
AFFINE = "affine"
_CHECK_POINTS = 4097


@dataclass(frozen=True)
class SineMode:
    """``amplitude * sin(mode * pi * x)``."""

    amplitude: float
    mode: int

    def __call__(self, x):
        return self.amplitude * np.sin(self.mode * math.pi * np.asarray(x, dtype=float))

    def sup_norm(self) -> float:
        return abs(self.amplitude)


@dataclass(frozen=True)
class Hat:
    """Piecewise linear bump of height ``amplitude`` supported on ``[left, right]``."""

    amplitude: float
    left: float
    right: float

    def __post_init__(self):
        if not self.left < self.right:
            raise ValueError("hat support must have positive length")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        mid = 0.5 * (self.left + self.right)
        half = 0.5 * (self.right - self.left)
        return self.amplitude * np.clip(1 - np.abs(x - mid) / half, 0.0, None)

    def sup_norm(self) -> float:
        return abs(self.amplitude)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise linear interpolation of values given at ``nodes``."""

    nodes: tuple
    values: tuple

    def __post_init__(self):
        if len(self.nodes) != len(self.values) or len(self.nodes) < 2:
            raise ValueError("tabulated function needs matching nodes and values")
        object.__setattr__(self, "nodes", tuple(float(v) for v in self.nodes))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.nodes, self.values)

    def sup_norm(self) -> float:
        return max(abs(v) for v in self.values)


@dataclass(frozen=True)
class Constant:
    """Constant function on D."""

    value: float

    def __call__(self, x):
        return np.full(np.shape(x), float(self.value))

    def sup_norm(self) -> float:
        return abs(self.value)


Psi = Union[SineMode, Hat, Tabulated, Constant]


@dataclass(frozen=True)
class CoefficientField:
    """Parametric diffusion coefficient.

    Attributes:
        kind: ``"lognormal"`` or ``"affine"``.
        psi: Component functions ``psi_1..psi_J``.
        abar: Mean field of the affine model (number or callable), unused for lognormal.
    """

    kind: str
    psi: tuple
    abar: Union[float, Callable] = 1.0

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in (LOGNORMAL, AFFINE):
            raise ValueError(f"unknown field kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "psi", tuple(self.psi))
        if kind == AFFINE:
            x = np.linspace(0.0, 1.0, _CHECK_POINTS)
            margin = self.mean(x) - sum(np.abs(p(x)) for p in self.psi)
            if np.min(margin) <= 0:
                raise EllipticityViolation(
                    f"abar - sum |psi_j| reaches {np.min(margin):.3g} <= 0 on D")

    @property
    def J(self) -> int:
        return len(self.psi)

    @property
    def family(self) -> PolynomialFamily:
        """Polynomial family orthonormal for the parameter measure."""
        return PolynomialFamily.hermite() if self.kind == LOGNORMAL else PolynomialFamily.jacobi(0.0, 0.0)

    def mean(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if callable(self.abar):
            return np.asarray(self.abar(x), dtype=float) * np.ones_like(x)
        return np.full(x.shape, float(self.abar))

    def psi_matrix(self, x) -> np.ndarray:
        """Array of shape (J, len(x)) with ``psi_j(x)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([p(x) for p in self.psi]).reshape(self.J, len(x))


def sine_field(kind: str, J: int, kappa: float = 1.0, theta: float = 2.0, abar: float = 1.0) -> CoefficientField:
    """Field with ``psi_j = kappa * j^-theta * sin(j pi x)``."""
    return CoefficientField(kind, [SineMode(kappa * j ** (-theta), j) for j in range(1, J + 1)], abar)


def hat_field(kind: str, J: int, kappa: float = 1.0, theta: float = 2.0, abar: float = 1.0) -> CoefficientField:
    """Field with disjointly supported hats on ``[(j-1)/J, j/J]`` of height ``kappa * j^-theta``."""
    return CoefficientField(kind, [Hat(kappa * j ** (-theta), (j - 1) / J, j / J) for j in range(1, J + 1)], abar)


def _coefficient(field: CoefficientField, Y: np.ndarray, x: np.ndarray) -> np.ndarray:
    if Y.shape[1] < field.J:
        raise DimensionMismatch(f"field needs {field.J} parameters, got {Y.shape[1]}")
    b = Y[:, :field.J] @ field.psi_matrix(x) if field.J else np.zeros((len(Y), len(x)))
    if field.kind == LOGNORMAL:
        return np.exp(b)
    a = field.mean(x)[None, :] + b
    if np.any(a <= 0):
        raise EllipticityViolation(f"affine coefficient {a.min():.3g} <= 0 at a quadrature point")
    return a


def eval_coefficient(field: CoefficientField, y, x):
    """Coefficient ``a(y)(x)``; ``x`` may be a scalar or an array."""
    Y = np.atleast_2d(np.asarray(y, dtype=float).ravel())
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    a = _coefficient(field, Y, xs)[0]
    return float(a[0]) if np.ndim(x) == 0 else a.reshape(np.shape(x))


@dataclass(frozen=True)
class FemMesh:
    """Uniform partition of (0, 1) into ``nh`` elements."""

    nh: int

    def __post_init__(self):
        if int(self.nh) < 2:
            raise ValueError("the mesh needs at least two elements")
        object.__setattr__(self, "nh", int(self.nh))

    @property
    def h(self) -> float:
        return 1.0 / self.nh

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nh + 1)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.nh) + 0.5) / self.nh

    @property
    def dofs(self) -> int:
        return self.nh - 1


@dataclass(frozen=True)
class FemSolution:
    """Interior nodal values of a P1 function vanishing at both ends."""

    mesh: FemMesh
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if len(v) != self.mesh.dofs:
            raise DimensionMismatch(f"expected {self.mesh.dofs} interior values, got {len(v)}")
        object.__setattr__(self, "values", v)

    def full(self) -> np.ndarray:
        """Nodal values including the two boundary zeros."""
        return np.concatenate([[0.0], self.values, [0.0]])

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.mesh.nodes, self.full())


def _load(f_rhs, mesh: FemMesh) -> np.ndarray:
    if callable(f_rhs):
        # nodal quadrature of the load
        return mesh.h * np.asarray(f_rhs(mesh.interior), dtype=float) * np.ones(mesh.dofs)
    return np.full(mesh.dofs, float(f_rhs) * mesh.h)


def _solve_tridiagonal(a_mid: np.ndarray, load: np.ndarray, h: float) -> np.ndarray:
    ab = np.zeros((3, len(load)))
    ab[0, 1:] = -a_mid[1:-1] / h
    ab[1] = (a_mid[:-1] + a_mid[1:]) / h
    ab[2, :-1] = -a_mid[1:-1] / h
    try:
        u = solve_banded((1, 1), ab, load)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(u)):
        raise SingularSystem("non-finite finite element solution")
    return u


def solve_fem(field: CoefficientField, y, f_rhs=1.0, mesh: FemMesh | None = None) -> FemSolution:
    """P1 Galerkin solution for one parameter vector."""
    mesh = mesh or FemMesh(256)
    a_mid = _coefficient(field, np.atleast_2d(np.asarray(y, dtype=float).ravel()), mesh.midpoints)[0]
    return FemSolution(mesh, _solve_tridiagonal(a_mid, _load(f_rhs, mesh), mesh.h))


def solve_fem_batch(field: CoefficientField, Y, f_rhs=1.0, mesh: FemMesh | None = None,
                    chunk: int = 1024) -> np.ndarray:
    """Interior nodal values for many parameter vectors, shape (N, nh - 1)."""
    mesh = mesh or FemMesh(256)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    load = _load(f_rhs, mesh)
    out = np.empty((len(Y), mesh.dofs))
    for start in range(0, len(Y), chunk):
        A = _coefficient(field, Y[start:start + chunk], mesh.midpoints)
        for i, a_mid in enumerate(A):
            out[start + i] = _solve_tridiagonal(a_mid, load, mesh.h)
    return out


def v_norm_values(values, mesh: FemMesh) -> np.ndarray | float:
    """H^1_0 seminorm of interior nodal vectors (last axis)."""
    v = np.asarray(values, dtype=float)
    pad = [(0, 0)] * (v.ndim - 1) + [(1, 1)]
    du = np.diff(np.pad(v, pad), axis=-1)
    out = np.sqrt(np.sum(du * du, axis=-1) / mesh.h)
    return float(out) if np.ndim(out) == 0 else out


def v_norm(sol: FemSolution) -> float:
    """H^1_0 seminorm ``||u'||_{L2}``, integrated exactly."""
    return v_norm_values(sol.values, sol.mesh)


def interpolate(sol: FemSolution, mesh: FemMesh) -> FemSolution:
    """Nodal interpolant of ``sol`` on another mesh."""
    return FemSolution(mesh, sol(mesh.interior))


def bochner_error_mc(approx: Approximant, field: CoefficientField, f_rhs, mesh: FemMesh, test_count: int,
                     seed: int, J: int | None = None, chunk: int = 512) -> dict:
    """Monte-Carlo estimate of the L2(mu; V) error of a vector-valued approximant.

    Test points are drawn from the parameter measure itself.

    Returns:
        Dict with ``rmse = sqrt(mean e_t^2)`` and its standard error (delta method).
    """
    if approx.x_dim != mesh.dofs:
        raise DimensionMismatch(f"approximant has {approx.x_dim} coordinates, mesh has {mesh.dofs} dofs")
    J = field.J if J is None else int(J)
    if J < max(field.J, approx.basis.max_dim):
        raise DimensionMismatch("J must cover the field and the basis")
    plan = draw_mu(field.family, test_count, seed, J)
    err2 = np.empty(test_count)
    for start in range(0, test_count, chunk):
        Y = plan.points[start:start + chunk]
        diff = solve_fem_batch(field, Y, f_rhs, mesh) - evaluate(approx, field.family, Y)
        err2[start:start + len(Y)] = v_norm_values(diff, mesh) ** 2
    mse = float(np.mean(err2))
    rmse = math.sqrt(mse)
    se_mse = float(np.std(err2, ddof=1) / math.sqrt(test_count)) if test_count > 1 else math.inf
    stderr = se_mse / (2 * rmse) if rmse > 0 else 0.0
    return {"rmse": rmse, "stderr": stderr}
