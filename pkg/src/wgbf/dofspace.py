"""Global degree-of-freedom maps and discrete field containers.

Velocity unknowns: interior [P_m(K)]^2 per cell and trace [P_k(e)]^2 per
edge (k = m-1 or m).  Pressure unknowns: interior P_{m-1}(K) and trace
P_m(e).  All blocks are contiguous; component-major layout inside each
cell/edge slot.  The zero-mean normalization of the interior pressure is
handled by the solver (pin one trace dof, shift the constant mode after
the solve) and does not add an unknown here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import (cell_basis_values, edge_basis_values, edge_mass_diagonal,
                    project_edge, space_dim)
from .errors import InvalidArgumentError
from .mesh import Mesh
from .quadrature import map_to_cells, triangle_rule


@dataclass(frozen=True)
class SpaceConfig:
    """Polynomial degrees of the velocity/pressure spaces."""

    m: int
    k: int

    def __post_init__(self):
        if self.m < 1:
            raise InvalidArgumentError(f"need m >= 1, got m={self.m}")
        if self.k not in (self.m - 1, self.m):
            raise InvalidArgumentError(
                f"velocity trace degree k must be m-1 or m, got k={self.k}")


@dataclass(frozen=True)
class DofMap:
    """Offsets and local-to-global index arrays for the four dof blocks."""

    mesh: Mesh
    config: SpaceConfig
    n_ui_cell: int          # 2 * dim P_m
    n_ub_edge: int          # 2 * (k+1)
    n_pi_cell: int          # dim P_{m-1}
    n_pb_edge: int          # m+1
    off_ui: int
    off_ub: int
    off_pi: int
    off_pb: int
    total: int
    cell_ui: np.ndarray = field(repr=False)     # (nc, 2*Nm)
    cell_ub: np.ndarray = field(repr=False)     # (nc, 3, 2*(k+1))
    edge_ub: np.ndarray = field(repr=False)     # (ne, 2*(k+1))
    cell_pi: np.ndarray = field(repr=False)     # (nc, Npi)
    cell_pb: np.ndarray = field(repr=False)     # (nc, 3, m+1)
    edge_pb: np.ndarray = field(repr=False)     # (ne, m+1)
    boundary_ub: np.ndarray = field(repr=False)  # flat indices of boundary traces

    @property
    def dim_ui(self):
        return self.mesh.num_cells * self.n_ui_cell

    @property
    def dim_ub(self):
        return self.mesh.num_edges * self.n_ub_edge

    @property
    def dim_pi(self):
        return self.mesh.num_cells * self.n_pi_cell

    @property
    def dim_pb(self):
        return self.mesh.num_edges * self.n_pb_edge


def build_dofmap(mesh: Mesh, config: SpaceConfig) -> DofMap:
    m, k = config.m, config.k
    nc, ne = mesh.num_cells, mesh.num_edges
    n_ui = 2 * space_dim(m)
    n_ub = 2 * (k + 1)
    n_pi = space_dim(m - 1)
    n_pb = m + 1

    off_ui = 0
    off_ub = off_ui + nc * n_ui
    off_pi = off_ub + ne * n_ub
    off_pb = off_pi + nc * n_pi
    total = off_pb + ne * n_pb

    cell_ui = off_ui + (np.arange(nc)[:, None] * n_ui + np.arange(n_ui))
    edge_ub = off_ub + (np.arange(ne)[:, None] * n_ub + np.arange(n_ub))
    cell_ub = edge_ub[mesh.cell_edges]
    cell_pi = off_pi + (np.arange(nc)[:, None] * n_pi + np.arange(n_pi))
    edge_pb = off_pb + (np.arange(ne)[:, None] * n_pb + np.arange(n_pb))
    cell_pb = edge_pb[mesh.cell_edges]
    boundary_ub = edge_ub[mesh.boundary_edge].ravel()

    for arr in (cell_ui, edge_ub, cell_ub, cell_pi, edge_pb, cell_pb, boundary_ub):
        arr.setflags(write=False)
    return DofMap(mesh, config, n_ui, n_ub, n_pi, n_pb,
                  off_ui, off_ub, off_pi, off_pb, total,
                  cell_ui, cell_ub, edge_ub, cell_pi, cell_pb, edge_pb,
                  boundary_ub)


class DiscreteField:
    """Coefficient vector over a DofMap with block views.

    Component-major layout: velocity coefficients of a cell are the x
    component's dim-P_m monomial coefficients followed by the y component's;
    edge slots likewise.
    """

    def __init__(self, dofmap: DofMap, coeffs: np.ndarray | None = None):
        self.dofmap = dofmap
        if coeffs is None:
            coeffs = np.zeros(dofmap.total)
        if coeffs.shape != (dofmap.total,):
            raise InvalidArgumentError(
                f"coefficient vector has length {coeffs.shape}, "
                f"expected ({dofmap.total},)")
        self.coeffs = coeffs

    def copy(self) -> "DiscreteField":
        return DiscreteField(self.dofmap, self.coeffs.copy())

    # block views, reshaped to (slots, 2, basis) / (slots, basis)
    @property
    def u_interior(self) -> np.ndarray:
        dm = self.dofmap
        n = dm.n_ui_cell
        return self.coeffs[dm.off_ui:dm.off_ui + dm.dim_ui].reshape(
            dm.mesh.num_cells, 2, n // 2)

    @property
    def u_trace(self) -> np.ndarray:
        dm = self.dofmap
        n = dm.n_ub_edge
        return self.coeffs[dm.off_ub:dm.off_ub + dm.dim_ub].reshape(
            dm.mesh.num_edges, 2, n // 2)

    @property
    def p_interior(self) -> np.ndarray:
        dm = self.dofmap
        return self.coeffs[dm.off_pi:dm.off_pi + dm.dim_pi].reshape(
            dm.mesh.num_cells, dm.n_pi_cell)

    @property
    def p_trace(self) -> np.ndarray:
        dm = self.dofmap
        return self.coeffs[dm.off_pb:dm.off_pb + dm.dim_pb].reshape(
            dm.mesh.num_edges, dm.n_pb_edge)

    def eval_velocity(self, cells: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Evaluate the interior velocity at points inside given cells.

        ``cells`` (n,) indexes the containing cell for each point in
        ``pts`` (n, 2).  Returns (n, 2).
        """
        dm = self.dofmap
        mesh = dm.mesh
        V = cell_basis_values(dm.config.m, pts,
                              mesh.centroids[cells], mesh.h_K[cells])
        return np.einsum("qj,qcj->qc", V, self.u_interior[cells])

    def eval_pressure(self, cells: np.ndarray, pts: np.ndarray) -> np.ndarray:
        dm = self.dofmap
        mesh = dm.mesh
        V = cell_basis_values(dm.config.m - 1, pts,
                              mesh.centroids[cells], mesh.h_K[cells])
        return np.einsum("qj,qj->q", V, self.p_interior[cells])


def set_dirichlet_trace(field: DiscreteField, g, k: int | None = None) -> DiscreteField:
    """Set the boundary velocity-trace coefficients to the edgewise L2
    projection of ``g``; interior and interior-edge dofs are untouched.

    ``g(points)`` maps (nq, 2) boundary points to (nq, 2) velocity values.
    """
    dm = field.dofmap
    if k is None:
        k = dm.config.k
    mesh = dm.mesh
    for e in np.flatnonzero(mesh.boundary_edge):
        a, b = mesh.edge_endpoints(int(e))
        coeffs = project_edge(g, k, a, b)        # (k+1, 2)
        field.u_trace[e] = coeffs.T
    return field


def mean_value(field: DiscreteField) -> float:
    """Integral over the domain of the interior pressure part."""
    dm = field.dofmap
    mesh = dm.mesh
    deg = max(dm.config.m - 1, 1)
    rule = triangle_rule(deg)
    pts, wts = map_to_cells(rule, mesh.vertices, mesh.cells, mesh.areas)
    V = cell_basis_values(dm.config.m - 1, pts,
                          mesh.centroids[:, None, :], mesh.h_K[:, None])
    return float(np.einsum("cq,cqj,cj->", wts, V, field.p_interior))


def pressure_basis_integrals(dofmap: DofMap) -> np.ndarray:
    """Per-cell integrals of the interior pressure basis, shape (nc, Npi).

    This is the row vector of the zero-mean constraint on p_hi.
    """
    mesh = dofmap.mesh
    deg = max(dofmap.config.m - 1, 1)
    rule = triangle_rule(deg)
    pts, wts = map_to_cells(rule, mesh.vertices, mesh.cells, mesh.areas)
    V = cell_basis_values(dofmap.config.m - 1, pts,
                          mesh.centroids[:, None, :], mesh.h_K[:, None])
    return np.einsum("cq,cqj->cj", wts, V)
