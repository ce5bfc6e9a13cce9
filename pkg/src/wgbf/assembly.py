"""Global sparse assembly of the discrete flow operator.

The global unknown vector is (u_hi, u_hb, p_hi, p_hb).  The full matrix
stacks

    [ A + C(kappa) + D(kappa)   B ]
    [ B^T                       0 ]

with A the viscous + stabilization block, B the pressure weak-gradient
coupling (entering both momentum and mass rows with the same sign), C the
damping block and D the skew-symmetric convection block.

The pressure is determined only up to a constant; for the linear solve one
pressure-trace dof is pinned to zero alongside the Dirichlet velocity
traces, which keeps the factored matrix sparse (a global mean-constraint
row would couple every pressure dof and destroy the fill-reducing
ordering).  The zero-mean normalization is restored afterwards by shifting
the constant pressure mode; see the solver module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import cell_basis_values, space_dim
from .dofspace import DofMap
from .errors import InvalidArgumentError, SolverError
from .quadrature import map_to_cells, triangle_rule
from .weakops import WeakOps


@dataclass(frozen=True)
class ProblemParams:
    """Coefficients and body force of the flow problem."""

    nu: float
    alpha: float
    r: float
    f: Callable | None = None    # f(points (nq,2)) -> (nq,2)

    def __post_init__(self):
        if self.nu <= 0:
            raise InvalidArgumentError(f"need nu > 0, got {self.nu}")
        if self.alpha < 0:
            raise InvalidArgumentError(f"need alpha >= 0, got {self.alpha}")
        if self.r < 2:
            raise InvalidArgumentError(f"need damping exponent r >= 2, got {self.r}")


@dataclass
class LinearSystem:
    """Constrained sparse system after Dirichlet elimination."""

    matrix: sp.csr_matrix          # on free dofs
    rhs: np.ndarray
    free: np.ndarray               # global indices of free dofs
    fixed: np.ndarray              # global indices of eliminated trace dofs
    fixed_values: np.ndarray
    size: int                      # full unconstrained size

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        full = np.zeros(self.size)
        full[self.free] = x_free
        full[self.fixed] = self.fixed_values
        return full


def _scalar_velocity_indices(dofmap: DofMap) -> np.ndarray:
    """Global indices of the local scalar velocity layout, (nc, 2, n_loc_v)."""
    m, k = dofmap.config.m, dofmap.config.k
    Nm, nk = space_dim(m), k + 1
    nc = dofmap.mesh.num_cells
    ui = dofmap.cell_ui.reshape(nc, 2, Nm)
    ub = dofmap.cell_ub.reshape(nc, 3, 2, nk)          # (nc, edge, comp, l)
    ub = np.moveaxis(ub, 2, 1).reshape(nc, 2, 3 * nk)  # comp-major
    return np.concatenate([ui, ub], axis=2)


def _pressure_indices(dofmap: DofMap) -> np.ndarray:
    """Global indices of the local pressure layout, (nc, n_loc_p)."""
    nc = dofmap.mesh.num_cells
    return np.concatenate(
        [dofmap.cell_pi, dofmap.cell_pb.reshape(nc, -1)], axis=1)


class Assembler:
    """Caches index maps and the kappa-independent blocks for one space."""

    def __init__(self, dofmap: DofMap, ops: WeakOps):
        self.dofmap = dofmap
        self.ops = ops
        self.size = dofmap.total
        self.vidx = _scalar_velocity_indices(dofmap)
        self.pidx = _pressure_indices(dofmap)
        # pinned during the solve to fix the constant pressure mode
        self.pressure_pin = int(dofmap.edge_pb[0, 0])

    def _scatter(self, rows, cols, data) -> sp.csr_matrix:
        mat = sp.coo_matrix(
            (np.ascontiguousarray(data, dtype=float).ravel(),
             (rows.ravel(), cols.ravel())), shape=(self.size, self.size))
        return mat.tocsr()

    def assemble_a(self, nu: float) -> sp.csr_matrix:
        """Viscous block nu (grad_w u, grad_w v) + stabilization s_h."""
        Kloc = nu * (self.ops.Kgrad + self.ops.Kstab)     # (nc, nloc, nloc)
        rows, cols = np.broadcast_arrays(
            self.vidx[:, :, :, None], self.vidx[:, :, None, :])
        data = np.broadcast_to(Kloc[:, None], rows.shape)
        return self._scatter(rows, cols, data)

    def assemble_b(self) -> sp.csr_matrix:
        """Pressure coupling (grad_w q, v_hi), at (u_hi rows, p cols)."""
        nc = self.dofmap.mesh.num_cells
        Nm = self.ops.Nm
        ui = self.dofmap.cell_ui.reshape(nc, 2, Nm)
        rows = ui[:, :, :, None]
        cols = self.pidx[:, None, None, :]
        rows, cols = np.broadcast_arrays(rows, cols)
        return self._scatter(rows, cols, self.ops.Bloc)

    def assemble_c(self, kappa, alpha: float, r: float) -> sp.csr_matrix:
        """Damping block alpha (|kappa_hi|^{r-2} u_hi, v_hi)."""
        if alpha == 0.0:
            return sp.csr_matrix((self.size, self.size))
        kv = self.ops.interior_values(kappa.u_interior)
        Cloc = self.ops.damping_block(kv, alpha, r)
        nc = self.dofmap.mesh.num_cells
        Nm = self.ops.Nm
        ui = self.dofmap.cell_ui.reshape(nc, 2, Nm)
        rows = ui[:, :, :, None]
        cols = ui[:, :, None, :]
        rows, cols = np.broadcast_arrays(rows, cols)
        data = np.broadcast_to(Cloc[:, None], rows.shape)
        return self._scatter(rows, cols, data)

    def assemble_d(self, kappa) -> sp.csr_matrix:
        """Skew-symmetric convection block for frozen kappa."""
        kv = self.ops.interior_values(kappa.u_interior)
        kbn = self.ops.trace_normal_values(kappa.u_trace)
        T_int, T_tr = self.ops.convection_blocks(kv, kbn)
        nc = self.dofmap.mesh.num_cells
        Nm, nk = self.ops.Nm, self.dofmap.config.k + 1
        ui = self.dofmap.cell_ui.reshape(nc, 2, Nm)
        utr = self.vidx[:, :, Nm:]                     # (nc, 2, 3*nk)

        r1 = np.broadcast_arrays(ui[:, :, :, None], ui[:, :, None, :])
        d1 = np.broadcast_to(T_int[:, None], r1[0].shape)
        r2 = np.broadcast_arrays(ui[:, :, :, None], utr[:, :, None, :])
        d2 = np.broadcast_to(T_tr[:, None], r2[0].shape)
        rows = np.concatenate([r1[0].ravel(), r2[0].ravel()])
        cols = np.concatenate([r1[1].ravel(), r2[1].ravel()])
        data = np.concatenate([d1.ravel(), d2.ravel()])
        T = sp.coo_matrix((data, (rows, cols)), shape=(self.size, self.size)).tocsr()
        return 0.5 * (T - T.T)

    def assemble_rhs(self, f, quad_degree: int | None = None) -> np.ndarray:
        """Load vector (f, v_hi); only interior velocity dofs receive load."""
        F = np.zeros(self.size)
        if f is None:
            return F
        mesh = self.dofmap.mesh
        m = self.dofmap.config.m
        qd = quad_degree or (2 * m + 8)
        rule = triangle_rule(qd)
        pts, wts = map_to_cells(rule, mesh.vertices, mesh.cells, mesh.areas)
        V = cell_basis_values(m, pts, mesh.centroids[:, None, :],
                              mesh.h_K[:, None])
        flat = pts.reshape(-1, 2)
        fv = np.asarray(f(flat), dtype=float).reshape(pts.shape)
        loc = np.einsum("cq,cqd,cqb->cdb", wts, fv, V)    # (nc, 2, Nm)
        np.add.at(F, self.dofmap.cell_ui.ravel(), loc.ravel())
        return F

    def apply_constraints(self, matrix: sp.csr_matrix, rhs: np.ndarray,
                          fixed_values: np.ndarray | None = None) -> LinearSystem:
        """Eliminate Dirichlet trace dofs and the pinned pressure dof."""
        if fixed_values is None:
            fixed_values = np.zeros(self.dofmap.boundary_ub.size)
        fixed = np.append(self.dofmap.boundary_ub, self.pressure_pin)
        fixed_values = np.append(fixed_values, 0.0)
        mask = np.ones(self.size, dtype=bool)
        mask[fixed] = False
        free = np.flatnonzero(mask)
        csr = matrix.tocsr()
        K_ff = csr[free][:, free]
        b = rhs[free]
        if fixed.size and np.any(fixed_values):
            b = b - csr[free][:, fixed] @ fixed_values
        return LinearSystem(K_ff.tocsr(), b, free, fixed, fixed_values, self.size)


def solve_direct(system: LinearSystem) -> np.ndarray:
    """Sparse LU solve of the constrained system; returns the full vector."""
    try:
        A = system.matrix.tocsc()
        lu = spla.splu(A)
        x = lu.solve(system.rhs)
        # one step of iterative refinement tightens the round-off floor
        x += lu.solve(system.rhs - A @ x)
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError("linear solve produced non-finite values")
    return system.expand(x)


class CondensedSolver:
    """Static condensation of the cell-interior (u_hi, p_hi) unknowns.

    The interior block of the constrained matrix is block diagonal per cell;
    its per-cell inverse reduces the system to the trace unknowns (u_hb,
    p_hb).  Recovery reproduces the full solution.
    """

    def __init__(self, assembler: Assembler, system: LinearSystem):
        dm = assembler.dofmap
        nc = dm.mesh.num_cells
        s = dm.n_ui_cell + dm.n_pi_cell
        interior = np.concatenate([dm.cell_ui, dm.cell_pi], axis=1).ravel()

        pos = np.full(system.size, -1, dtype=np.int64)
        pos[system.free] = np.arange(system.free.size)
        self.int_pos = pos[interior]
        if np.any(self.int_pos < 0):
            raise SolverError("interior dof unexpectedly eliminated")
        gmask = np.ones(system.free.size, dtype=bool)
        gmask[self.int_pos] = False
        self.glob_pos = np.flatnonzero(gmask)

        K = system.matrix
        K_II = K[self.int_pos][:, self.int_pos].tocoo()
        blocks = np.zeros((nc, s, s))
        br, rr = np.divmod(K_II.row, s)
        bc, cc = np.divmod(K_II.col, s)
        if np.any(br != bc):
            raise SolverError("interior block is not cell-local")
        np.add.at(blocks, (br, rr, cc), K_II.data)
        try:
            inv = np.linalg.inv(blocks)
        except np.linalg.LinAlgError as exc:
            conds = np.linalg.cond(blocks)
            bad = int(np.argmax(conds))
            raise SolverError(
                f"singular local block on cell {bad} "
                f"(condition estimate {conds[bad]:.3e})") from exc
        self.Ainv = sp.bsr_matrix(
            (inv, np.arange(nc), np.arange(nc + 1)), shape=(nc * s, nc * s)).tocsr()

        self.K_IG = K[self.int_pos][:, self.glob_pos].tocsr()
        self.K_GI = K[self.glob_pos][:, self.int_pos].tocsr()
        K_GG = K[self.glob_pos][:, self.glob_pos]
        self.schur = (K_GG - self.K_GI @ self.Ainv @ self.K_IG).tocsc()
        self.system = system

    @property
    def condensed_dim(self) -> int:
        return self.schur.shape[0]

    def solve(self) -> np.ndarray:
        sysm = self.system
        b_I = sysm.rhs[self.int_pos]
        b_G = sysm.rhs[self.glob_pos]
        try:
            lu = spla.splu(self.schur)
            b = b_G - self.K_GI @ (self.Ainv @ b_I)
            x_G = lu.solve(b)
            x_G += lu.solve(b - self.schur @ x_G)
        except RuntimeError as exc:
            raise SolverError(f"condensed factorization failed: {exc}") from exc
        x_I = self.Ainv @ (b_I - self.K_IG @ x_G)
        x_free = np.zeros(sysm.free.size)
        x_free[self.int_pos] = x_I
        x_free[self.glob_pos] = x_G
        return sysm.expand(x_free)
