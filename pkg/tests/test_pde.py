import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite_e as He

from gpcls.basis import PolynomialFamily
from gpcls.errors import DimensionMismatch, EllipticityViolation
from gpcls.indexing import Approximant, IndexSet
from gpcls.pde import (
    CoefficientField,
    Constant,
    FemMesh,
    FemSolution,
    Hat,
    SineMode,
    Tabulated,
    bochner_error_mc,
    eval_coefficient,
    hat_field,
    interpolate,
    sine_field,
    solve_fem,
    solve_fem_batch,
    v_norm,
)


def _stiffness(a_mid, h):
    # dense P1 stiffness matrix on the interior nodes
    n = len(a_mid) - 1
    K = np.zeros((n, n))
    for e, a in enumerate(a_mid):
        local = a / h * np.array([[1, -1], [-1, 1]])
        for p, i in enumerate((e - 1, e)):
            for q, j in enumerate((e - 1, e)):
                if 0 <= i < n and 0 <= j < n:
                    K[i, j] += local[p, q]
    return K


# -- coefficient fields --------------------------------------------------------------


def test_lognormal_at_zero_is_one():
    field = sine_field("lognormal", 4, theta=2.0)
    assert eval_coefficient(field, np.zeros(4), 0.37) == 1.0


def test_affine_at_zero_is_mean():
    field = CoefficientField("affine", [SineMode(0.2, 1)], abar=lambda x: 2.0 + x)
    assert eval_coefficient(field, [0.0], 0.25) == pytest.approx(2.25)


def test_lognormal_single_mode_value():
    field = CoefficientField("lognormal", [SineMode(0.5, 1)])
    assert eval_coefficient(field, [2.0], 0.5) == pytest.approx(math.e, rel=1e-15)


def test_psi_shapes():
    assert Hat(2.0, 0.2, 0.6)(0.4) == pytest.approx(2.0)
    assert Hat(2.0, 0.2, 0.6)(0.7) == 0.0
    assert Hat(2.0, 0.2, 0.6).sup_norm() == 2.0
    tab = Tabulated(np.linspace(0, 1, 5), [0.0, 1.0, -3.0, 1.0, 0.0])
    assert tab(0.125) == pytest.approx(0.5) and tab.sup_norm() == 3.0
    assert SineMode(0.3, 2).sup_norm() == 0.3 and Constant(-2.0).sup_norm() == 2.0


def test_hat_family_is_disjoint():
    field = hat_field("affine", 5, kappa=0.5, theta=1.0)
    x = np.linspace(0, 1, 1001)
    vals = np.array([p(x) for p in field.psi])
    assert np.all(np.count_nonzero(vals, axis=0) <= 1)


def test_ellipticity_guard():
    with pytest.raises(EllipticityViolation):
        sine_field("affine", 3, kappa=1.0, theta=0.0, abar=1.0)
    field = sine_field("affine", 1, kappa=0.5, theta=1.0)
    with pytest.raises(EllipticityViolation):
        solve_fem(field, [-3.0], mesh=FemMesh(16))


def test_coefficient_needs_all_parameters():
    with pytest.raises(DimensionMismatch):
        eval_coefficient(sine_field("lognormal", 3), [0.0, 0.0], 0.5)


# -- FEM ------------------------------------------------------------------------


@pytest.mark.parametrize("nh", [2, 7, 64, 300])
def test_constant_coefficient_nodal_exactness(nh):
    mesh = FemMesh(nh)
    sol = solve_fem(CoefficientField("lognormal", []), [], 1.0, mesh)
    x = mesh.interior
    assert np.allclose(sol.values, x * (1 - x) / 2, atol=1e-12, rtol=0)


def test_constant_scaling():
    mesh = FemMesh(40)
    base = solve_fem(CoefficientField("affine", [], abar=1.0), [], 1.0, mesh).values
    scaled = solve_fem(CoefficientField("affine", [], abar=4.0), [], 1.0, mesh).values
    assert np.allclose(scaled, base / 4, rtol=1e-14, atol=0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0), st.integers(0, 2**32 - 1))
def test_scaling_the_field_divides_the_solution(lam, seed):
    mesh = FemMesh(32)
    y = np.random.default_rng(seed).uniform(-1, 1, 3)
    psi = [SineMode(0.2, j) for j in (1, 2, 3)]
    u1 = solve_fem(CoefficientField("affine", psi, abar=1.0), y, 1.0, mesh).values
    psi_l = [SineMode(0.2 * lam, j) for j in (1, 2, 3)]
    u2 = solve_fem(CoefficientField("affine", psi_l, abar=lam), y, 1.0, mesh).values
    assert np.allclose(u2, u1 / lam, rtol=1e-12, atol=0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_galerkin_orthogonality(seed):
    mesh = FemMesh(50)
    field = sine_field("lognormal", 4, kappa=1.0, theta=2.0)
    y = np.random.default_rng(seed).standard_normal(4)
    sol = solve_fem(field, y, lambda x: 1 + x**2, mesh)
    a_mid = eval_coefficient(field, y, mesh.midpoints)
    load = mesh.h * (1 + mesh.interior**2)
    residual = _stiffness(a_mid, mesh.h) @ sol.values - load
    assert np.max(np.abs(residual)) <= 1e-10 * np.max(np.abs(load))


def test_batch_matches_single_solves():
    mesh = FemMesh(32)
    field = hat_field("lognormal", 3)
    Y = np.random.default_rng(0).standard_normal((5, 3))
    batch = solve_fem_batch(field, Y, 1.0, mesh, chunk=2)
    for y, row in zip(Y, batch):
        assert np.array_equal(row, solve_fem(field, y, 1.0, mesh).values)


def test_mesh_convergence_rate():
    field = sine_field("lognormal", 3, kappa=1.0, theta=2.0)
    y = np.array([0.7, -1.2, 0.4])
    fine = solve_fem(field, y, 1.0, FemMesh(4096))
    sizes = [32, 64, 128, 256]
    errs = []
    for nh in sizes:
        coarse = interpolate(solve_fem(field, y, 1.0, FemMesh(nh)), FemMesh(4096))
        errs.append(v_norm(FemSolution(fine.mesh, coarse.values - fine.values)))
    slope = np.polyfit(np.log([1 / n for n in sizes]), np.log(errs), 1)[0]
    assert 0.9 <= slope <= 1.1


# -- V-norm -----------------------------------------------------------------------


def test_v_norm_examples():
    mesh = FemMesh(512)
    assert v_norm(FemSolution(mesh, np.zeros(mesh.dofs))) == 0.0
    x = mesh.interior
    assert v_norm(FemSolution(mesh, x * (1 - x) / 2)) == pytest.approx(1 / math.sqrt(12), abs=5e-6)
    hat = np.zeros(mesh.dofs)
    hat[100] = 1.0
    assert v_norm(FemSolution(mesh, hat)) == pytest.approx(math.sqrt(2 / mesh.h), rel=1e-14)


def test_solution_shape_checked():
    with pytest.raises(DimensionMismatch):
        FemSolution(FemMesh(8), np.zeros(8))
    with pytest.raises(ValueError):
        FemMesh(1)


# -- Monte-Carlo Bochner error ------------------------------------------------------


def test_y_independent_field_constant_basis():
    mesh = FemMesh(64)
    field = CoefficientField("lognormal", [Constant(0.0)])
    u = solve_fem(field, [0.0], 1.0, mesh).values
    approx = Approximant(IndexSet([()], [1.0]), u[None, :])
    out = bochner_error_mc(approx, field, 1.0, mesh, 200, seed=1)
    assert out["rmse"] <= 1e-10


def test_mc_error_deterministic_and_checked():
    mesh = FemMesh(32)
    field = sine_field("lognormal", 2)
    approx = Approximant(IndexSet([()], [1.0]), np.zeros((1, mesh.dofs)))
    a = bochner_error_mc(approx, field, 1.0, mesh, 300, seed=9)
    b = bochner_error_mc(approx, field, 1.0, mesh, 300, seed=9)
    assert a == b
    with pytest.raises(DimensionMismatch):
        bochner_error_mc(Approximant(IndexSet([()], [1.0]), np.zeros((1, 5))), field, 1.0, mesh, 10, seed=0)


def test_mc_error_matches_hermite_truncation():
    # a = exp(y), so u(y) = exp(-y) u_0 and the error is that of the truncated expansion of exp(-y)
    mesh = FemMesh(64)
    field = CoefficientField("lognormal", [Constant(1.0)])
    u0 = solve_fem(CoefficientField("lognormal", []), [], 1.0, mesh).values
    nodes, weights = He.hermegauss(120)
    weights = weights / weights.sum()
    m = 4
    basis_vals = [He.hermeval(nodes, [0] * k + [1]) / math.sqrt(math.factorial(k)) for k in range(m)]
    coef = np.array([weights @ (np.exp(-nodes) * p) for p in basis_vals])
    assert np.allclose(coef, [math.exp(0.5) * (-1) ** k / math.sqrt(math.factorial(k)) for k in range(m)])
    trunc = np.exp(-nodes) - sum(c * p for c, p in zip(coef, basis_vals))
    exact = math.sqrt(weights @ trunc**2) * v_norm(FemSolution(mesh, u0))
    approx = Approximant(IndexSet([(k,) for k in range(m)], [1.0] * m), coef[:, None] * u0[None, :])
    out = bochner_error_mc(approx, field, 1.0, mesh, 20000, seed=3)
    assert abs(out["rmse"] - exact) <= 4 * out["stderr"]
    assert out["stderr"] < 0.3 * exact  # heavy-tailed errors
