"""
Tests for the plant model, illustrative systems and the power network
"""
import numpy as np
import pytest
from pydantic import ValidationError

from app.control.errors import DimensionMismatch, NonFiniteMatrix
from app.models import (
    Controller,
    LtiSystem,
    PowerGridParams,
    build_power_grid,
    closed_loop,
    example_system,
    grounded_laplacian,
    randomize_grid,
    NOMINAL_SUSCEPTANCE,
)
from app.schemas import ControllerFile, SystemFile


def test_system_dimensions(power_grid):
    assert (power_grid.n, power_grid.m, power_grid.l, power_grid.p) == (6, 3, 1, 2)


def test_system_matrices_are_read_only(example1):
    with pytest.raises(ValueError):
        example1.A[0, 0] = 5.0


def test_system_rejects_bad_shapes():
    with pytest.raises(DimensionMismatch):
        LtiSystem(np.eye(2), np.ones((3, 1)), np.ones((2, 1)), np.ones((1, 2)))
    with pytest.raises(DimensionMismatch):
        LtiSystem(np.ones((2, 3)), np.ones((2, 1)), np.ones((2, 1)), np.ones((1, 3)))


def test_system_rejects_non_finite():
    with pytest.raises(NonFiniteMatrix):
        LtiSystem([[np.inf]], [[1.0]], [[1.0]], [[1.0]])


def test_closed_loop(example2):
    A_F = closed_loop(example2, Controller([[0.0, 0.0, -1.0]]))
    assert np.allclose(A_F[:, 2], [0.0, 0.0, -1.0])


def test_gain_shape_is_checked(example1):
    with pytest.raises(DimensionMismatch):
        closed_loop(example1, np.zeros((1, 2)))


def test_example_systems():
    first, second = example_system(1), example_system(2)
    assert np.allclose(first.A[:, 2], [0.0, 0.0, 1.0])
    assert np.allclose(second.A[:, 2], [0.0, 1.0, -1.0])
    assert np.allclose(first.A[:, :2], second.A[:, :2])
    with pytest.raises(ValueError):
        example_system(3)


# =============================================================================
# POWER NETWORK
# =============================================================================

def test_grounded_laplacian_nominal():
    L = grounded_laplacian(NOMINAL_SUSCEPTANCE)
    assert np.allclose(np.diag(L), [0.386 + 0.474, 0.386 + 0.294, 0.294 + 0.596])
    assert L[0, 1] == pytest.approx(-0.386)
    assert L[1, 2] == pytest.approx(-0.294)
    assert L[0, 2] == 0.0
    assert np.allclose(L, L.T)


def test_power_grid_structure(power_grid):
    L = grounded_laplacian(NOMINAL_SUSCEPTANCE)
    assert np.allclose(power_grid.A[:3, 3:], np.eye(3))
    assert np.allclose(power_grid.A[3:, :3], -L / 10.0)
    assert np.allclose(power_grid.A[3:, 3:], -np.eye(3))
    assert np.allclose(power_grid.B[3:], np.eye(3) / 10.0)
    assert power_grid.E[5, 0] == 1.0
    assert np.allclose(power_grid.H, np.hstack((np.eye(2), np.zeros((2, 4)))))


def test_randomize_grid_is_deterministic():
    nominal = PowerGridParams()
    first = randomize_grid(nominal, 1)
    assert first == randomize_grid(nominal, 1)
    assert first != randomize_grid(nominal, 2)
    assert first.susceptance == nominal.susceptance
    assert min(first.inertia + first.damping) > 0.1


def test_power_grid_params_validation():
    with pytest.raises(ValueError):
        PowerGridParams(inertia=(10.0, -1.0, 10.0))
    with pytest.raises(DimensionMismatch):
        PowerGridParams(damping=(1.0, 2.0))


def test_randomized_grid_builds(power_grid):
    system = build_power_grid(randomize_grid(PowerGridParams(), 7))
    assert system.A.shape == power_grid.A.shape
    assert not np.allclose(system.A, power_grid.A)


# =============================================================================
# FILE FORMATS
# =============================================================================

def test_system_file_fields(example2):
    record = SystemFile.from_system(example2).model_dump(exclude_none=True)
    assert {"n", "m", "p", "l", "A", "B", "E", "H"} <= set(record)
    assert (record["n"], record["m"], record["p"], record["l"]) == (3, 1, 1, 1)


def test_system_file_without_optional_fields():
    record = SystemFile.model_validate({
        "n": 2, "m": 1, "p": 1, "l": 1,
        "A": [[0.0, 1.0], [-1.0, -1.0]], "B": [[0.0], [1.0]], "E": [[1.0], [0.0]], "H": [[0.0, 1.0]],
    })
    system = record.to_system()
    assert (system.n, system.m, system.p, system.l) == (2, 1, 1, 1)
    assert np.array_equal(system.A, [[0.0, 1.0], [-1.0, -1.0]])


def test_system_file_rejects_wrong_dimensions(example2):
    record = SystemFile.from_system(example2).model_dump()
    with pytest.raises(ValidationError):
        SystemFile.model_validate(dict(record, n=4))
    with pytest.raises(ValidationError):
        SystemFile.model_validate(dict(record, B=[[1.0], [0.0]]))


def test_system_file_preserves_matrices(power_grid):
    text = SystemFile.from_system(power_grid).model_dump_json()
    system = SystemFile.model_validate_json(text).to_system()
    for name in ("A", "B", "E", "H"):
        assert np.array_equal(getattr(system, name), getattr(power_grid, name))


def test_controller_file_fields():
    record = ControllerFile.model_validate({"m": 1, "n": 3, "F": [[0.0, 0.0, -1.0]]})
    assert record.system is None
    assert record.gain().shape == (1, 3)
    assert set(ControllerFile.from_gain(record.gain()).model_dump(exclude_none=True)) >= {"m", "n", "F"}


def test_controller_file_rejects_wrong_dimensions():
    with pytest.raises(ValidationError):
        ControllerFile.model_validate({"m": 1, "n": 2, "F": [[0.0, 0.0, -1.0]]})
    with pytest.raises(ValidationError):
        ControllerFile.model_validate({"m": 1, "n": 3, "F": [[0.0, 0.0, -1.0]], "P": [[1.0]]})
