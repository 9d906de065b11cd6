"""
Tests for controlled-invariant subspaces and the DD matrix equation
"""
import numpy as np
import pytest

from app.control.errors import Infeasible, PreconditionViolation
from app.control.geometry import (
    Subspace,
    assemble_dd_system,
    check_rcq,
    ci_subspace_sequence,
    dd_equation_residual,
    dd_feasible,
    dd_residual,
    largest_ci_subspace,
    solve_dd,
)

E1 = np.array([[1.0], [0.0], [0.0]])
E2 = np.array([[0.0], [1.0], [0.0]])
E3 = np.array([[0.0], [0.0], [1.0]])


# =============================================================================
# CONTROLLED-INVARIANT SUBSPACE
# =============================================================================

@pytest.mark.parametrize("which", ["example1", "example2"])
def test_largest_ci_subspace_is_e3(which, request):
    system = request.getfixturevalue(which)
    V = largest_ci_subspace(system)
    assert V.dim == 1
    assert abs(V.basis[2, 0]) == pytest.approx(1.0)
    assert V.is_orthonormal()


def test_ci_sequence_dimensions_decrease(example1):
    dims = [W.dim for W in ci_subspace_sequence(example1)]
    assert dims == [2, 1]


def test_power_grid_subspace(power_grid):
    V = largest_ci_subspace(power_grid)
    assert V.dim == 2
    assert dd_feasible(power_grid, V)
    # span{theta_3, omega_3}
    assert np.allclose(np.abs(V.basis[[0, 1, 3, 4]]), 0.0, atol=1e-9)


def test_planted_subspace_is_contained(planted, rng):
    for n, k, m in [(4, 1, 1), (5, 2, 2), (6, 3, 2)]:
        system, V, _ = planted(rng, n, k, m)
        V_star = largest_ci_subspace(system)
        outside = V.basis - V_star.basis @ (V_star.basis.T @ V.basis)
        assert np.linalg.norm(outside) <= 1e-6


# =============================================================================
# FEASIBILITY AND THE DD EQUATION
# =============================================================================

def test_dd_feasible(example1):
    assert dd_feasible(example1, Subspace(E3))
    assert not dd_feasible(example1, Subspace(E2))
    assert not dd_feasible(example1, Subspace(np.hstack((E1, E3))))


def test_solve_dd_example1(example1):
    V = largest_ci_subspace(example1)
    solution = solve_dd(example1, V)
    assert solution.residual <= 1e-10
    assert np.allclose(solution.F, 0.0, atol=1e-10)
    assert dd_residual(example1, V, solution.F) <= 1e-10


def test_solve_dd_example2(example2):
    V = largest_ci_subspace(example2)
    solution = solve_dd(example2, V)
    assert np.allclose(solution.F, [[0.0, 0.0, -1.0]], atol=1e-10)
    assert dd_residual(example2, V, solution.F) <= 1e-10


def test_dd_residual_of_non_dd_gain(example2):
    assert dd_residual(example2, Subspace(E3), np.zeros((1, 3))) == pytest.approx(1.0)


def test_assemble_requires_nonzero_subspace(example1):
    with pytest.raises(PreconditionViolation):
        assemble_dd_system(example1, Subspace(np.zeros((3, 0))))


def test_assemble_detects_inconsistent_system(example1):
    with pytest.raises(Infeasible):
        assemble_dd_system(example1, Subspace(E1))


def test_parameterization_covers_dd_controllers(example1, rng):
    V = largest_ci_subspace(example1)
    param = assemble_dd_system(example1, V)
    assert param.n_free == 2  # F_1 and F_2 are free
    for _ in range(10):
        y = param.point(rng.standard_normal(param.n_free))
        X, F = param.split(y)
        assert param.constraint_residual(y) <= 1e-10
        assert dd_equation_residual(example1, V, X, F) <= 1e-10


def test_projection_repairs_dd(planted, rng):
    system, V, _ = planted(rng, 5, 2, 2)
    param = assemble_dd_system(system, V)
    X, F = param.project(rng.standard_normal((2, 2)), rng.standard_normal((2, 5)))
    assert dd_equation_residual(system, V, X, F) <= 1e-8
    assert dd_residual(system, V, F) <= 1e-8


def test_check_rcq(example1, power_grid):
    report = check_rcq(example1, Subspace(E3))
    assert report.full_column_rank
    assert not report.spans_state_space
    assert report.use_rre_fallback

    grid_report = check_rcq(power_grid, largest_ci_subspace(power_grid))
    assert grid_report.full_column_rank
