import numpy as np
import pytest

from conftest import TAU0
from vortexberry.errors import ConfigurationError, DiagnosticError, SolverError
from vortexberry.lattice import Divisor, TorusGrid, gauge_apply
from vortexberry.vortex import (bradlow_limit, gl_energy, solve_vortex,
                                taubes_bounds_check, theta1, vortex_residual)


def test_bradlow_limit_values():
    assert bradlow_limit(1, 1.0) == pytest.approx(4 * np.pi)
    assert bradlow_limit(3, 1.0) == pytest.approx(12 * np.pi)
    assert bradlow_limit(1, 4.0) == pytest.approx(np.pi)
    with pytest.raises(ConfigurationError):
        bradlow_limit(0, 1.0)
    with pytest.raises(ConfigurationError):
        bradlow_limit(-2, 1.0)


def test_theta1_zero_and_quasiperiodicity(rng):
    u = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert np.max(np.abs(theta1(u + np.pi) + theta1(u))) < 1e-12
    q = np.exp(-np.pi)
    lhs = theta1(u + 1j * np.pi)
    rhs = -np.exp(-2j * u) / q * theta1(u)
    assert np.max(np.abs(lhs - rhs)) < 1e-9 * np.max(np.abs(rhs))
    assert abs(theta1(np.zeros(1))[0]) < 1e-14


def test_d0_solution(flat32):
    r1, r2 = vortex_residual(flat32)
    assert np.max(r1) == 0.0
    assert np.max(r2) == 0.0
    assert np.max(np.abs(flat32.w)) == 0.0
    assert np.max(np.abs(flat32.links - 1.0)) == 0.0
    assert gl_energy(flat32) == 0.0
    assert np.allclose(np.abs(flat32.phi) ** 2, flat32.tau)


def test_below_bradlow_and_resolution_errors(grid32):
    with pytest.raises(ConfigurationError, match="Bradlow"):
        solve_vortex(Divisor([[0.5, 0.5]]), 0.9 * TAU0, grid32)
    with pytest.raises(ConfigurationError, match="resolve"):
        solve_vortex(Divisor([[0.5, 0.5]]), 16 * TAU0, grid32)


def test_solved_field_integrals(field64, grid64):
    w_int = np.sum(field64.w) * grid64.spacing ** 2
    assert w_int == pytest.approx(2 * np.pi, rel=1e-6)
    l2 = np.sum(np.abs(field64.phi) ** 2) * grid64.spacing ** 2
    assert l2 == pytest.approx(field64.tau - 4 * np.pi, rel=1e-8)
    assert np.max(np.abs(field64.phi) ** 2) <= field64.tau * (1 + 1e-6)


def test_energy_lower_bound(field64):
    assert gl_energy(field64) / (2 * np.pi * field64.tau) == pytest.approx(1.0, abs=0.01)


def test_solver_determinism(grid32):
    a, _ = solve_vortex(Divisor([[0.3, 0.6]]), 2 * TAU0, grid32, tol=None)
    b, _ = solve_vortex(Divisor([[0.3, 0.6]]), 2 * TAU0, grid32, tol=None)
    assert np.array_equal(a.phi, b.phi)
    assert np.array_equal(a.links, b.links)


def test_residual_link_perturbation(field32, grid32):
    eps = 1e-3
    field = field32._replace_fields(links=field32.links.copy())
    field.links[0, 5, 7] *= np.exp(1j * eps)
    r1, _ = vortex_residual(field)
    assert np.max(r1) >= eps / (2 * grid32.spacing ** 2) * (1 - eps)


def test_quasi_periodic_closure(grid32):
    tau = 2 * TAU0
    p = np.array([[0.3, 0.6]])
    base, _ = solve_vortex(p, tau, grid32, tol=None)
    fx, _ = solve_vortex(p + [[1.0, 0.0]], tau, grid32, tol=None)
    fy, _ = solve_vortex(p + [[0.0, 1.0]], tau, grid32, tol=None)
    x, y = grid32.site_coords()
    gx = -np.exp(-2j * np.pi * y)
    gy = -np.exp(2j * np.pi * (x - 0.3))
    assert np.max(np.abs(fx.phi - gx * base.phi)) < 1e-12
    assert np.max(np.abs(fy.phi - gy * base.phi)) < 1e-12
    assert np.max(np.abs(fx.links - gauge_apply(gx, base).links)) < 1e-12
    assert np.max(np.abs(fy.links - gauge_apply(gy, base).links)) < 1e-12


def test_family_continuity(grid32):
    tau = 2 * TAU0
    f1, _ = solve_vortex(np.array([[0.999, 0.6]]), tau, grid32, tol=None)
    f2, _ = solve_vortex(np.array([[1.001, 0.6]]), tau, grid32, tol=None)
    assert np.max(np.abs(f1.phi - f2.phi)) < 0.1
    assert np.max(np.abs(f1.links - f2.links)) < 1e-2


def test_taubes_bounds(field64_hi):
    max_sq, fit = taubes_bounds_check(field64_hi)
    assert max_sq <= field64_hi.tau * (1 + 1e-6)
    assert fit.exponent_fit > 0
    assert fit.r_squared >= 0.95
    assert fit.c_fit > 0


def test_taubes_exponent_scaling():
    # doubling tau grows the fitted exponent by sqrt(2) within 15%
    exps = {}
    for tau_over, n in [(4, 64), (8, 64)]:
        grid = TorusGrid(n, 1.0)
        f, _ = solve_vortex(Divisor([[0.5, 0.5]]), tau_over * TAU0, grid, tol=None)
        _, fit = taubes_bounds_check(f)
        exps[tau_over] = fit.exponent_fit
    assert exps[8] / exps[4] == pytest.approx(np.sqrt(2), rel=0.15)


def test_decay_fit_needs_samples(grid32):
    field, _ = solve_vortex(Divisor([[0.5, 0.5]]), 2 * TAU0, grid32, tol=None)
    from vortexberry.vortex import fit_vortex_tail
    with pytest.raises(DiagnosticError):
        fit_vortex_tail(field, field.w, lo=0.4495, hi=0.45)


def test_residual_contract_enforced(grid32):
    # an unresolvable tolerance must raise
    with pytest.raises(SolverError, match="residual"):
        solve_vortex(Divisor([[0.52, 0.48]]), 2 * TAU0, grid32, tol=1e-9)
