"""Oseen fixed-point iteration for the nonlinear discrete system.

Each step freezes the convection/damping weight at the previous iterate and
solves one linear saddle-point system; the viscous block, the pressure
coupling and the load vector are assembled once and reused.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import Assembler, CondensedSolver, ProblemParams, solve_direct
from .dofspace import (DiscreteField, DofMap, SpaceConfig, build_dofmap,
                       mean_value, set_dirichlet_trace)
from .errors import InvalidArgumentError, NonConvergenceError, SolverError
from .mesh import Mesh
from .weakops import WeakOps


@dataclass(frozen=True)
class SolverConfig:
    """Controls of the fixed-point loop."""

    tol: float = 1e-8            # on ||u^l_hi - u^{l-1}_hi||_0
    max_iter: int = 200
    condense: bool = False
    quad_degree: int | None = None
    check_residual: bool = True

    def __post_init__(self):
        if self.tol <= 0:
            raise InvalidArgumentError(f"need tol > 0, got {self.tol}")
        if self.max_iter < 1:
            raise InvalidArgumentError(f"need max_iter >= 1, got {self.max_iter}")


@dataclass
class IterationHistory:
    """Per-iteration increment norms, linear residuals and wall time."""

    increments: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.increments)


def interior_l2_norm(ops: WeakOps, u_interior: np.ndarray) -> float:
    """L2 norm of the interior velocity given (nc, 2, Nm) coefficients."""
    return float(np.sqrt(np.einsum(
        "cdi,cij,cdj->", u_interior, ops.Mm, u_interior)))


def triple_norm_v(assembler: Assembler, coeffs: np.ndarray) -> float:
    """Discrete energy norm |||v|||_V of a velocity field."""
    ops = assembler.ops
    v = coeffs[assembler.vidx]                       # (nc, 2, nloc)
    K = ops.Kgrad + ops.Kstab
    val = np.einsum("cdl,clm,cdm->", v, K, v)
    return float(np.sqrt(max(val, 0.0)))


def velocity_r_norm(ops: WeakOps, u_interior: np.ndarray, r: float) -> float:
    """||u_hi||_{0,r}^r by the assembly quadrature (consistent with c_h)."""
    vals = ops.interior_values(u_interior)
    mag2 = np.einsum("cqd,cqd->cq", vals, vals)
    return float(np.einsum("cq,cq->", ops.cq_wts, mag2 ** (r / 2.0)))


class OseenSolver:
    """Holds the discretization and drives repeated linearized solves."""

    def __init__(self, mesh: Mesh, spaces: SpaceConfig, params: ProblemParams,
                 config: SolverConfig = SolverConfig(), dirichlet=None):
        self.mesh = mesh
        self.spaces = spaces
        self.params = params
        self.config = config
        self.dofmap: DofMap = build_dofmap(mesh, spaces)
        self.ops = WeakOps(mesh, spaces, quad_degree=config.quad_degree)
        self.assembler = Assembler(self.dofmap, self.ops)
        self.A = self.assembler.assemble_a(params.nu)
        self.B = self.assembler.assemble_b()
        self.F = self.assembler.assemble_rhs(params.f)
        self.K_const = self.A + self.B + self.B.T

        bc = DiscreteField(self.dofmap)
        if dirichlet is not None:
            set_dirichlet_trace(bc, dirichlet)
        self.fixed_values = bc.coeffs[self.dofmap.boundary_ub].copy()

    def linear_step(self, kappa: DiscreteField) -> DiscreteField:
        """One Oseen step: solve with convection/damping frozen at kappa."""
        asm = self.assembler
        K = self.K_const
        if self.params.alpha != 0.0:
            K = K + asm.assemble_c(kappa, self.params.alpha, self.params.r)
        K = K + asm.assemble_d(kappa)
        system = asm.apply_constraints(K, self.F, self.fixed_values)
        if self.config.condense:
            x = CondensedSolver(asm, system).solve()
        else:
            x = solve_direct(system)
        self._last_residual = self._relative_residual(system, x)
        field = DiscreteField(self.dofmap, x[:self.dofmap.total])
        self._shift_pressure_mean(field)
        return field

    def _shift_pressure_mean(self, field: DiscreteField) -> None:
        """Normalize the pressure to zero interior mean.

        The solve pins one pressure-trace dof instead of carrying a global
        mean constraint; shifting the constant mode of both pressure blocks
        moves along the nullspace of the unpinned operator, so every
        retained equation is unaffected.
        """
        shift = mean_value(field) / self.mesh.areas.sum()
        field.p_interior[:, 0] -= shift
        field.p_trace[:, 0] -= shift

    @staticmethod
    def _relative_residual(system, x_full) -> float:
        x_free = x_full[system.free]
        res = system.matrix @ x_free - system.rhs
        scale = np.linalg.norm(system.rhs) or 1.0
        return float(np.linalg.norm(res) / scale)

    def solve(self, initial: DiscreteField | None = None):
        """Run the fixed-point loop to the increment tolerance.

        Returns ``(solution, history)``; the solution field carries both the
        velocity and pressure blocks.
        """
        history = IterationHistory()
        u_prev = initial if initial is not None else DiscreteField(self.dofmap)
        for it in range(1, self.config.max_iter + 1):
            t0 = time.perf_counter()
            try:
                u_next = self.linear_step(u_prev)
            except SolverError as exc:
                raise SolverError(
                    f"linear solve failed at Oseen iteration {it}: {exc}",
                    iteration=it) from exc
            delta = u_next.u_interior - u_prev.u_interior
            inc = interior_l2_norm(self.ops, delta)
            history.increments.append(inc)
            history.residuals.append(self._last_residual)
            history.wall_times.append(time.perf_counter() - t0)
            u_prev = u_next
            if inc < self.config.tol:
                history.converged = True
                return u_next, history
        raise NonConvergenceError(
            f"Oseen iteration did not reach {self.config.tol:g} within "
            f"{self.config.max_iter} iterations "
            f"(last increment {history.increments[-1]:.3e})", history)


def oseen_solve(mesh: Mesh, spaces: SpaceConfig, params: ProblemParams,
                config: SolverConfig = SolverConfig(), dirichlet=None):
    """Convenience wrapper: build the solver and run it."""
    solver = OseenSolver(mesh, spaces, params, config, dirichlet)
    solution, history = solver.solve()
    return solution, history, solver
