"""Error norms, divergence verification, rate tables and field export."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .basis import cell_basis_gradients, cell_basis_values, edge_basis_values
from .dofspace import DiscreteField
from .errors import WgbfError
from .quadrature import edge_rule, map_to_cells, map_to_edges, triangle_rule
from .solver import triple_norm_v, velocity_r_norm

CSV_HEADER = ["mesh", "h", "dofs", "iters",
              "errL2u", "rateL2u", "errH1u", "rateH1u",
              "errL2p", "rateL2p", "divInf", "jumpInf"]


@dataclass
class ErrorReport:
    """Relative errors and conservation diagnostics of one solve."""

    mesh_label: str
    h: float
    dofs: int
    iters: int
    err_l2_u: float
    err_h1_u: float
    err_l2_p: float
    div_inf: float
    jump_inf: float
    err_h1w_u: float = float("nan")    # informational, not in the CSV schema

    def row(self, rates=(None, None, None)) -> list:
        def fmt_rate(x):
            return "" if x is None else f"{x:.4f}"
        return [self.mesh_label, f"{self.h:.10e}", self.dofs, self.iters,
                f"{self.err_l2_u:.6e}", fmt_rate(rates[0]),
                f"{self.err_h1_u:.6e}", fmt_rate(rates[1]),
                f"{self.err_l2_p:.6e}", fmt_rate(rates[2]),
                f"{self.div_inf:.6e}", f"{self.jump_inf:.6e}"]


def _cell_quad_data(mesh, degree):
    rule = triangle_rule(degree)
    pts, wts = map_to_cells(rule, mesh.vertices, mesh.cells, mesh.areas)
    return pts, wts


def compute_errors(solution: DiscreteField, exact_u, exact_grad_u, exact_p,
                   iters: int = 0, mesh_label: str = "",
                   quad_degree: int | None = None) -> ErrorReport:
    """Relative L2/broken-H1 velocity and L2 pressure errors.

    ``exact_u(points)`` -> (n, 2); ``exact_grad_u(points)`` -> (n, 2, 2)
    with entry [i, c, d] = d u_c / d x_d; ``exact_p(points)`` -> (n,).
    The pressure comparison subtracts the mean of (p - p_hi) first.
    """
    dm = solution.dofmap
    mesh = dm.mesh
    m = dm.config.m
    qd = quad_degree or (2 * m + 8)
    pts, wts = _cell_quad_data(mesh, qd)
    cent, hK = mesh.centroids[:, None, :], mesh.h_K[:, None]
    flat = pts.reshape(-1, 2)

    V = cell_basis_values(m, pts, cent, hK)
    G = cell_basis_gradients(m, pts, cent, hK)
    uh = np.einsum("cqj,cdj->cqd", V, solution.u_interior)
    guh = np.einsum("cqjd,cej->cqed", G, solution.u_interior)
    u = np.asarray(exact_u(flat), dtype=float).reshape(uh.shape)
    gu = np.asarray(exact_grad_u(flat), dtype=float).reshape(guh.shape)

    def l2(fvals):
        return float(np.sqrt(np.einsum("cq,cq...->", wts,
                                       np.sum(np.atleast_3d(fvals) ** 2,
                                              axis=tuple(range(2, fvals.ndim))))))

    # absolute errors when the reference norm vanishes
    nrm_u = l2(u) or 1.0
    nrm_gu = l2(gu) or 1.0
    err_u = l2(u - uh) / nrm_u
    err_gu = l2(gu - guh) / nrm_gu

    Vp = cell_basis_values(m - 1, pts, cent, hK)
    ph = np.einsum("cqj,cj->cq", Vp, solution.p_interior)
    p = np.asarray(exact_p(flat), dtype=float).reshape(ph.shape)
    area = float(mesh.areas.sum())
    shift = float(np.einsum("cq,cq->", wts, p - ph)) / area
    nrm_p = float(np.sqrt(np.einsum(
        "cq,cq->", wts, (p - np.einsum("cq,cq->", wts, p) / area) ** 2))) or 1.0
    err_p = float(np.sqrt(np.einsum("cq,cq->", wts, (p - ph - shift) ** 2))) / nrm_p

    div_inf, jump_inf = check_divergence_free(solution)
    err_gw = weak_gradient_error(solution, exact_grad_u, qd)

    return ErrorReport(mesh_label or f"h={mesh.h:.4g}", mesh.h,
                       dm.total, iters, err_u, err_gu, err_p,
                       div_inf, jump_inf, err_gw)


def weak_gradient_error(solution: DiscreteField, exact_grad_u,
                        quad_degree: int | None = None) -> float:
    """Relative L2 distance between the exact velocity gradient and the
    lifted gradient of the discrete pair (interior plus trace), where the
    lift of each row is reconstructed in the vector polynomial space one
    degree below the interior space."""
    dm = solution.dofmap
    mesh = dm.mesh
    m, k = dm.config.m, dm.config.k
    qd = quad_degree or (2 * m + 8)
    pts, wts = _cell_quad_data(mesh, qd)
    cent, hK = mesh.centroids[:, None, :], mesh.h_K[:, None]

    Vg = cell_basis_values(m - 1, pts, cent, hK)
    Gg = cell_basis_gradients(m - 1, pts, cent, hK)
    Mg = np.einsum("cq,cqa,cqb->cab", wts, Vg, Vg)
    Vm = cell_basis_values(m, pts, cent, hK)
    uhq = np.einsum("cqj,cej->cqe", Vm, solution.u_interior)
    rhs = -np.einsum("cq,cqe,cqas->ceas", wts, uhq, Gg)

    erule = edge_rule(qd)
    eq_pts, eq_wts = map_to_edges(erule, mesh.vertices, mesh.edges, mesh.h_e)
    Lk = edge_basis_values(k, erule.points)
    trace_q = np.einsum("ql,Eel->Eqe", Lk, solution.u_trace)
    ce = mesh.cell_edges
    Tg = cell_basis_values(m - 1, eq_pts[ce], mesh.centroids[:, None, None, :],
                           mesh.h_K[:, None, None])
    rhs += np.einsum("cfq,cfqe,cfqa,cfs->ceas",
                     eq_wts[ce], trace_q[ce], Tg, mesh.normals)

    W = np.linalg.solve(Mg[:, None], rhs)           # (nc, 2, Ng, 2)
    gw = np.einsum("cqa,ceas->cqes", Vg, W)
    flat = pts.reshape(-1, 2)
    gu = np.asarray(exact_grad_u(flat), dtype=float).reshape(gw.shape)
    num = np.sqrt(np.einsum("cq,cqes->", wts, (gu - gw) ** 2))
    den = float(np.sqrt(np.einsum("cq,cqes->", wts, gu ** 2))) or 1.0
    return float(num / den)


def check_divergence_free(solution: DiscreteField,
                          quad_degree: int | None = None):
    """Sup norm of the cellwise divergence and the max edge-normal jump."""
    dm = solution.dofmap
    mesh = dm.mesh
    m = dm.config.m
    qd = quad_degree or (2 * m + 4)
    pts, _ = _cell_quad_data(mesh, qd)
    # include the vertices: the divergence is polynomial, near-zero anyway
    pts = np.concatenate([pts, mesh.vertices[mesh.cells]], axis=1)
    G = cell_basis_gradients(m, pts, mesh.centroids[:, None, :],
                             mesh.h_K[:, None])
    div = (np.einsum("cqj,cj->cq", G[..., 0], solution.u_interior[:, 0]) +
           np.einsum("cqj,cj->cq", G[..., 1], solution.u_interior[:, 1]))
    div_inf = float(np.abs(div).max())

    rule = edge_rule(qd)
    epts, _ = map_to_edges(rule, mesh.vertices, mesh.edges, mesh.h_e)
    interior = np.flatnonzero(~mesh.boundary_edge)
    jump_inf = 0.0
    if interior.size:
        tang = (mesh.vertices[mesh.edges[:, 1]] -
                mesh.vertices[mesh.edges[:, 0]])
        tang /= np.linalg.norm(tang, axis=1)[:, None]
        n_e = np.column_stack([tang[:, 1], -tang[:, 0]])
        flows = []
        for side in range(2):
            cells = mesh.edge_cells[interior, side]
            V = cell_basis_values(m, epts[interior], mesh.centroids[cells, None],
                                  mesh.h_K[cells, None])
            uv = np.einsum("eqj,edj->eqd", V, solution.u_interior[cells])
            flows.append(np.einsum("eqd,ed->eq", uv, n_e[interior]))
        jump_inf = float(np.abs(flows[0] - flows[1]).max())
    return div_inf, jump_inf


def energy_identity_residual(solver, solution: DiscreteField) -> float:
    """|nu |||u|||^2 + alpha ||u||_{0,r}^r - (f, u_hi)| for homogeneous
    Dirichlet data; small at the converged fixed point."""
    p = solver.params
    e_visc = p.nu * triple_norm_v(solver.assembler, solution.coeffs) ** 2
    e_damp = p.alpha * velocity_r_norm(solver.ops, solution.u_interior, p.r)
    work = float(solver.F[:solver.dofmap.total] @ solution.coeffs)
    return abs(e_visc + e_damp - work), work


def convergence_rates(levels):
    """Rates log(e_i/e_{i+1}) / log(h_i/h_{i+1}) for a list of (h, err)."""
    rates = []
    for (h0, e0), (h1, e1) in zip(levels[:-1], levels[1:]):
        if e0 <= 0 or e1 <= 0:
            rates.append(None)
        else:
            rates.append(float(np.log(e0 / e1) / np.log(h0 / h1)))
    return rates


def export_table(reports, path):
    """Write error reports (with interleaved rates) as CSV."""
    l2u = [(r.h, r.err_l2_u) for r in reports]
    h1u = [(r.h, r.err_h1_u) for r in reports]
    l2p = [(r.h, r.err_l2_p) for r in reports]
    r_u = [None] + convergence_rates(l2u)
    r_g = [None] + convergence_rates(h1u)
    r_p = [None] + convergence_rates(l2p)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for rep, a, b, c in zip(reports, r_u, r_g, r_p):
                w.writerow(rep.row((a, b, c)))
    except OSError as exc:
        raise WgbfError(f"cannot write table {path}: {exc}") from exc


def read_table(path):
    """Round-trip reader for the CSV schema above."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return list(reader)


def export_fields(solution: DiscreteField, path):
    """Legacy VTK 3.0 ASCII unstructured grid with cell-averaged and
    vertex-sampled velocity/pressure."""
    dm = solution.dofmap
    mesh = dm.mesh
    m = dm.config.m
    cent = mesh.centroids
    # cell averages = value of the L2-mean, i.e. integral / area
    pts, wts = _cell_quad_data(mesh, 2 * m)
    V = cell_basis_values(m, pts, cent[:, None], mesh.h_K[:, None])
    Vp = cell_basis_values(m - 1, pts, cent[:, None], mesh.h_K[:, None])
    u_avg = np.einsum("cq,cqj,cdj->cd", wts, V, solution.u_interior) \
        / mesh.areas[:, None]
    p_avg = np.einsum("cq,cqj,cj->c", wts, Vp, solution.p_interior) \
        / mesh.areas

    # vertex samples from the lowest-index adjacent cell
    owner = np.full(mesh.num_vertices, -1, dtype=np.int64)
    for c in range(mesh.num_cells - 1, -1, -1):
        owner[mesh.cells[c]] = c
    Vv = cell_basis_values(m, mesh.vertices, cent[owner], mesh.h_K[owner])
    u_vtx = np.einsum("vj,vdj->vd", Vv, solution.u_interior[owner])
    Vvp = cell_basis_values(m - 1, mesh.vertices, cent[owner], mesh.h_K[owner])
    p_vtx = np.einsum("vj,vj->v", Vvp, solution.p_interior[owner])

    try:
        with open(path, "w") as fh:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write("wgbf fields\nASCII\nDATASET UNSTRUCTURED_GRID\n")
            fh.write(f"POINTS {mesh.num_vertices} double\n")
            for x, y in mesh.vertices:
                fh.write(f"{x:.12e} {y:.12e} 0.0\n")
            nc = mesh.num_cells
            fh.write(f"CELLS {nc} {4 * nc}\n")
            for tri in mesh.cells:
                fh.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n")
            fh.write(f"CELL_TYPES {nc}\n")
            fh.write("5\n" * nc)
            fh.write(f"CELL_DATA {nc}\n")
            fh.write("VECTORS velocity_avg double\n")
            for vx, vy in u_avg:
                fh.write(f"{vx:.12e} {vy:.12e} 0.0\n")
            fh.write("SCALARS pressure_avg double 1\nLOOKUP_TABLE default\n")
            for p in p_avg:
                fh.write(f"{p:.12e}\n")
            fh.write(f"POINT_DATA {mesh.num_vertices}\n")
            fh.write("VECTORS velocity double\n")
            for vx, vy in u_vtx:
                fh.write(f"{vx:.12e} {vy:.12e} 0.0\n")
            fh.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
            for p in p_vtx:
                fh.write(f"{p:.12e}\n")
    except OSError as exc:
        raise WgbfError(f"cannot write VTK file {path}: {exc}") from exc
