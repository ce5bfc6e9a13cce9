"""Fixed-point solver behavior on small problems."""

import numpy as np
import pytest

from wgbf.assembly import ProblemParams
from wgbf.dofspace import DiscreteField, SpaceConfig, build_dofmap, mean_value
from wgbf.errors import InvalidArgumentError
from wgbf.mesh import generate_uniform_mesh
from wgbf.scenarios import ManufacturedSolution
from wgbf.solver import OseenSolver, SolverConfig, oseen_solve


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        SolverConfig(tol=0.0)
    with pytest.raises(InvalidArgumentError):
        SolverConfig(max_iter=0)


def test_zero_data_gives_zero_solution():
    mesh = generate_uniform_mesh(3, 3)
    params = ProblemParams(1.0, 5.0, 10.0, None)
    sol, hist, _ = oseen_solve(mesh, SpaceConfig(1, 0), params)
    assert hist.iterations == 1
    assert hist.converged
    assert np.allclose(sol.coeffs, 0.0, atol=1e-13)


def test_stokes_degenerate_case():
    # alpha = 0, kappa = 0 frozen: first step is a plain saddle solve
    ms = ManufacturedSolution(alpha=0.0)
    mesh = generate_uniform_mesh(4, 4)
    params = ProblemParams(1.0, 0.0, 2.0, ms.forcing)
    sol, hist, _ = oseen_solve(mesh, SpaceConfig(1, 0), params,
                               dirichlet=ms.velocity)
    assert hist.converged
    assert np.isfinite(sol.coeffs).all()


def test_pressure_mean_constraint():
    ms = ManufacturedSolution()
    mesh = generate_uniform_mesh(4, 4)
    params = ProblemParams(ms.nu, ms.alpha, ms.r, ms.forcing)
    sol, _, _ = oseen_solve(mesh, SpaceConfig(1, 0), params,
                            dirichlet=ms.velocity)
    assert abs(mean_value(sol)) <= 1e-11


def test_converged_solution_is_fixed_point():
    ms = ManufacturedSolution()
    mesh = generate_uniform_mesh(4, 4)
    params = ProblemParams(ms.nu, ms.alpha, ms.r, ms.forcing)
    solver = OseenSolver(mesh, SpaceConfig(1, 0), params,
                         SolverConfig(tol=1e-12), dirichlet=ms.velocity)
    sol, hist = solver.solve()
    again = solver.linear_step(sol)
    assert np.allclose(again.u_interior, sol.u_interior, atol=1e-10)


def test_condensed_matches_full():
    ms = ManufacturedSolution()
    mesh = generate_uniform_mesh(4, 4)
    params = ProblemParams(ms.nu, ms.alpha, ms.r, ms.forcing)
    sol_a, _, _ = oseen_solve(mesh, SpaceConfig(1, 0), params,
                              SolverConfig(condense=False),
                              dirichlet=ms.velocity)
    sol_b, _, _ = oseen_solve(mesh, SpaceConfig(1, 0), params,
                              SolverConfig(condense=True),
                              dirichlet=ms.velocity)
    assert np.allclose(sol_a.coeffs, sol_b.coeffs, atol=1e-9)


def test_history_fields():
    ms = ManufacturedSolution()
    mesh = generate_uniform_mesh(2, 2)
    params = ProblemParams(ms.nu, ms.alpha, ms.r, ms.forcing)
    _, hist, _ = oseen_solve(mesh, SpaceConfig(1, 0), params,
                             dirichlet=ms.velocity)
    assert hist.iterations == len(hist.increments) == len(hist.residuals)
    assert len(hist.wall_times) == hist.iterations
    assert all(r < 1e-8 for r in hist.residuals)
