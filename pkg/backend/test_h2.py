"""
Tests for H2 analysis and the H2 semidefinite program
"""
import numpy as np
import pytest

from app.control.geometry import assemble_dd_system, dd_residual, largest_ci_subspace
from app.control.h2 import (
    build_h2_sdp,
    h2_norm_sq,
    hankel_singular_values,
    impulse_response,
    observability_gramian,
    synthesize_h2,
    truncated_h2_integral,
)
from app.models import LtiSystem

F_DD_EXAMPLE2 = np.array([[0.0, 0.0, -1.0]])


def random_hurwitz_plant(rng, n, m=1, l=1, p=1):
    A = rng.standard_normal((n, n)) / np.sqrt(n)
    A -= (np.max(np.linalg.eigvals(A).real) + 0.5) * np.eye(n)
    return LtiSystem(A, rng.standard_normal((n, m)), rng.standard_normal((n, l)), rng.standard_normal((p, n)))


# =============================================================================
# H2 NORM
# =============================================================================

def test_scalar_h2(scalar_plant):
    report = h2_norm_sq(scalar_plant, [[0.0]])
    assert report.hurwitz
    assert report.h2_sq == pytest.approx(0.5)
    assert report.gramian[0, 0] == pytest.approx(0.5)


def test_unstable_loop_reports_truncated_integral():
    system = LtiSystem([[1.0]], [[1.0]], [[1.0]], [[1.0]])
    value = truncated_h2_integral(system, [[0.0]], horizon=1.0, dt=1e-3)
    assert value == pytest.approx((np.exp(2.0) - 1.0) / 2.0, rel=1e-5)

    report = h2_norm_sq(system, [[0.0]], horizon=1.0, dt=1e-3)
    assert not report.hurwitz
    assert report.gramian is None
    assert report.h2_sq == pytest.approx(value)


def test_gramian_matches_time_domain_integral(rng):
    for trial in range(100):
        system = random_hurwitz_plant(rng, n=2 + trial % 4, l=1 + trial % 2, p=1 + trial % 3)
        F = np.zeros((system.m, system.n))
        gramian_value = h2_norm_sq(system, F).h2_sq
        integral = truncated_h2_integral(system, F, horizon=50.0, dt=1e-3)
        assert integral == pytest.approx(gramian_value, rel=1e-2)


def test_dd_controller_has_zero_h2(example2):
    report = h2_norm_sq(example2, F_DD_EXAMPLE2)
    assert report.hurwitz
    assert abs(report.h2_sq) <= 1e-10


def test_dd_controllers_zero_diagnostic_without_stability(planted, rng):
    """Every DD controller zeroes the disturbance channel, Hurwitz or not."""
    for trial in range(50):
        n = 3 + trial % 4
        system, V, _ = planted(rng, n, k=1 + trial % 2, m=1 + trial % 2)
        param = assemble_dd_system(system, V)
        _, F = param.split(param.point(rng.standard_normal(param.n_free)))
        assert truncated_h2_integral(system, F, horizon=5.0, dt=1e-2) <= 1e-9

        F_random = rng.standard_normal((system.m, system.n))
        assert truncated_h2_integral(system, F_random, horizon=5.0, dt=1e-2) >= 1e-6


def test_impulse_response(example2):
    g = impulse_response(example2, F_DD_EXAMPLE2, [0.0, 1.0, 5.0])
    assert len(g) == 3
    assert all(np.abs(gk).max() <= 1e-12 for gk in g)


def test_hankel_singular_values_scalar(scalar_plant):
    A_F = scalar_plant.A
    assert hankel_singular_values(A_F, scalar_plant.E, scalar_plant.H) == pytest.approx([0.5])
    assert observability_gramian(A_F, scalar_plant.H)[0, 0] == pytest.approx(0.5)


# =============================================================================
# SDP SYNTHESIS
# =============================================================================

def test_build_h2_sdp_layout(example1):
    program = build_h2_sdp(example1)
    assert list(program.variables) == ["G", "N", "P", "W"]
    assert [name for name, _ in program.psd_blocks] == ["lyapunov", "trace", "strictness"]
    assert program.variables["N"].shape == (1, 3)


def test_build_h2_sdp_rejects_bad_eps(example1):
    with pytest.raises(ValueError):
        build_h2_sdp(example1, eps=0.0)


def test_sdp_stabilizes(example1):
    F, sol = synthesize_h2(example1)
    assert sol.ok
    assert F.shape == (1, 3)
    report = h2_norm_sq(example1, F)
    assert report.hurwitz
    assert np.isfinite(report.h2_sq) and report.h2_sq > 0


def test_example1_sdp_value(example1):
    F, _ = synthesize_h2(example1)
    assert h2_norm_sq(example1, F).h2_sq == pytest.approx(2.0, rel=0.1)


def test_example2_computational_gap(example2):
    F_h2, _ = synthesize_h2(example2)
    V = largest_ci_subspace(example2)
    assert h2_norm_sq(example2, F_h2).h2_sq <= 1e-3
    assert dd_residual(example2, V, F_DD_EXAMPLE2) <= 1e-10
    assert dd_residual(example2, V, F_h2) > 1e2 * dd_residual(example2, V, F_DD_EXAMPLE2)


def stable_planted_system(planted, rng, n, k, m):
    """Planted DD plant shifted so that its DD gain F0 gives a Hurwitz loop."""
    system, V, F0 = planted(rng, n, k=k, m=m)
    shift = np.max(np.linalg.eigvals(system.A + system.B @ F0).real) + 0.5
    shifted = LtiSystem(system.A - shift * np.eye(n), system.B, system.E, system.H, name="planted")
    return shifted, V, F0


def test_sdp_value_vanishes_for_stabilizable_dd_plants(planted, rng):
    for trial in range(6):
        system, V, F0 = stable_planted_system(planted, rng, n=3 + trial % 3, k=1 + trial % 2, m=1 + trial % 2)
        assert h2_norm_sq(system, F0).hurwitz
        F, sol = synthesize_h2(system, eps=1e-8)
        assert sol.ok
        assert sol.objective <= 1e-6
        assert F.shape == F0.shape
