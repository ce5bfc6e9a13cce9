"""Discrete weak gradient / weak divergence operators.

The weak gradient of a scalar pair ``v = {v_i, v_b}`` on a cell K is the
polynomial ``g`` in [P_gamma(K)]^2 with

    (g, s)_K = -(v_i, div s)_K + <v_b, s . n_K>_dK    for all s in [P_gamma]^2,

and the weak divergence of a vector pair mirrors it with scalar tests.
``WeakOps`` precomputes, for every cell of a mesh, the quadrature data and
the dense matrices realizing these operators on local coefficient vectors;
everything downstream (assembly, norms, checks) is built from it.

Local scalar velocity dof layout per cell: the dim-P_m interior monomial
coefficients, then (k+1) edge coefficients for each of the 3 local edges.
Local pressure layout: dim-P_{m-1} interior, then (m+1) per edge.
"""

from __future__ import annotations

import numpy as np

from .basis import (CellGeometry, cell_basis_gradients, cell_basis_values,
                    edge_basis_values, edge_mass_diagonal, space_dim)
from .dofspace import SpaceConfig
from .errors import GeometryError
from .mesh import Mesh
from .quadrature import edge_rule, map_to_cells, map_to_edges, triangle_rule


def default_quad_degree(m: int, bump: int = 4) -> int:
    # d_h has degree-(3m-1) polynomial integrands; the damping weight is
    # smooth but non-polynomial, covered by the 2m+bump floor.
    return max(3 * m + 2, 2 * m + bump)


class WeakOps:
    """Per-mesh quadrature tables and weak-operator matrices.

    All arrays are laid out cell-major so that assembly reduces to batched
    einsum contractions plus a single COO scatter.  Immutable once built.
    """

    def __init__(self, mesh: Mesh, config: SpaceConfig,
                 quad_degree: int | None = None, eta_scale: float = 1.0):
        m, k = config.m, config.k
        self.mesh = mesh
        self.config = config
        self.quad_degree = quad_degree or default_quad_degree(m)
        # stabilization weight: reciprocal of the local mesh size, taken as
        # the shortest edge of the cell.  eta_scale rescales it; used by the
        # self-test controls only.
        self.eta = eta_scale / mesh.h_e[mesh.cell_edges].min(axis=1)

        Nm = space_dim(m)
        Ng = space_dim(m - 1)          # gradient test space P_{m-1}
        self.Nm, self.Ng = Nm, Ng
        self.n_loc_v = Nm + 3 * (k + 1)
        self.n_loc_p = space_dim(m - 1) + 3 * (m + 1)

        cent = mesh.centroids[:, None, :]
        hK = mesh.h_K[:, None]

        rule = triangle_rule(self.quad_degree)
        self.cq_pts, self.cq_wts = map_to_cells(
            rule, mesh.vertices, mesh.cells, mesh.areas)
        self.Vm = cell_basis_values(m, self.cq_pts, cent, hK)          # (nc,nq,Nm)
        self.Gm = cell_basis_gradients(m, self.cq_pts, cent, hK)       # (nc,nq,Nm,2)
        self.Mm = np.einsum("cq,cqi,cqj->cij", self.cq_wts, self.Vm, self.Vm)

        erule = edge_rule(self.quad_degree)
        self.eq_pts, self.eq_wts = map_to_edges(
            erule, mesh.vertices, mesh.edges, mesh.h_e)
        self.Lk = edge_basis_values(k, erule.points)                   # (nqe,k+1)
        self.Lm = edge_basis_values(m, erule.points)                   # (nqe,m+1)

        ce = mesh.cell_edges
        ce_pts = self.eq_pts[ce]                                       # (nc,3,nqe,2)
        self.ce_wts = self.eq_wts[ce]                                  # (nc,3,nqe)
        self.Tm = cell_basis_values(
            m, ce_pts, mesh.centroids[:, None, None, :], mesh.h_K[:, None, None])
        self.ce_he = mesh.h_e[ce]                                      # (nc,3)

        # edgewise L2 projector P_m(K)|_e -> P_k(e) per cell edge
        mom = np.einsum("ceq,ql,ceqj->celj", self.ce_wts, self.Lk, self.Tm)
        dk = edge_mass_diagonal(k, self.ce_he)                         # (nc,3,k+1)
        self.Pk = mom / dk[..., None]                                  # (nc,3,k+1,Nm)
        self.edge_mass_k = dk

        self._build_gradient_tables()
        self._build_pressure_tables()

    # -- velocity weak gradient (gamma = m-1) and stabilization ------------

    def _build_gradient_tables(self):
        m, k = self.config.m, self.config.k
        Nm, Ng = self.Nm, self.Ng
        nloc = self.n_loc_v
        nc = self.mesh.num_cells
        nk = k + 1

        # R_c[a, dof]: (grad_w v . e_c, phi_a) functional, phi_a in P_{m-1}
        R = np.zeros((nc, 2, Ng, nloc))
        Gg = self.Gm[:, :, :Ng, :]     # gradients of the P_{m-1} test basis
        for c in range(2):
            R[:, c, :, :Nm] = -np.einsum(
                "cq,cqj,cqa->caj", self.cq_wts, self.Vm, Gg[..., c])
        bnd = np.einsum("ceq,ql,ceqa->cela", self.ce_wts, self.Lk,
                        self.Tm[..., :Ng])                       # (nc,3,nk,Ng)
        nrm = self.mesh.normals                                  # (nc,3,2)
        for c in range(2):
            blk = bnd * nrm[:, :, None, None, c]
            R[:, c, :, Nm:] = np.moveaxis(blk, 3, 1).reshape(nc, Ng, 3 * nk)

        Mg = self.Mm[:, :Ng, :Ng]
        try:
            self.G = np.linalg.solve(
                Mg[:, None], R)                                  # (nc,2,Ng,nloc)
        except np.linalg.LinAlgError as exc:
            raise GeometryError(f"singular P_{m-1} mass matrix: {exc}") from exc
        self.R = R
        # (grad_w u, grad_w v)_K on local scalar dofs
        self.Kgrad = np.einsum("csal,csam->clm", self.R, self.G)

        # stabilization <eta (Pk v_i - v_b), Pk w_i - w_b>_dK on scalar dofs
        Ks = np.zeros((nc, nloc, nloc))
        d = self.edge_mass_k * self.eta[:, None, None]           # (nc,3,nk)
        Ks[:, :Nm, :Nm] = np.einsum("cel,celi,celj->cij", d, self.Pk, self.Pk)
        cross = -d[..., None] * self.Pk                          # (nc,3,nk,Nm)
        cross = np.moveaxis(cross, 3, 1).reshape(nc, Nm, 3 * nk)
        Ks[:, :Nm, Nm:] = cross
        Ks[:, Nm:, :Nm] = np.swapaxes(cross, 1, 2)
        idx = Nm + np.arange(3 * nk)
        Ks[:, idx, idx] = d.reshape(nc, 3 * nk)
        self.Kstab = Ks

    # -- pressure weak gradient (gamma = m), paired directly with v_hi -----

    def _build_pressure_tables(self):
        m = self.config.m
        Nm, Npi = self.Nm, space_dim(m - 1)
        nc = self.mesh.num_cells
        npb = m + 1

        # Bloc[c, comp, b, pdof] = (grad_w{p} . e_comp, phi_b)_K for the
        # pressure basis pair; phi_b in P_m are exactly the tests of the
        # gamma = m weak gradient, so no mass solve is needed.
        B = np.zeros((nc, 2, Nm, self.n_loc_p))
        for c in range(2):
            B[:, c, :, :Npi] = -np.einsum(
                "cq,cqj,cqb->cbj", self.cq_wts, self.Vm[..., :Npi],
                self.Gm[..., c])
        bnd = np.einsum("ceq,ql,ceqb->celb", self.ce_wts, self.Lm, self.Tm)
        nrm = self.mesh.normals
        for c in range(2):
            blk = bnd * nrm[:, :, None, None, c]
            B[:, c, :, Npi:] = np.moveaxis(blk, 3, 1).reshape(nc, Nm, 3 * npb)
        self.Bloc = B

    # -- kappa-dependent local blocks ---------------------------------------

    def damping_block(self, kappa_vals: np.ndarray, alpha: float,
                      r: float) -> np.ndarray:
        """alpha (|kappa|^{r-2} phi_i, phi_j)_K per cell, shape (nc, Nm, Nm).

        ``kappa_vals`` are interior velocity values at the cell quadrature
        points, shape (nc, nq, 2).  Applied identically to both components.
        """
        w2 = np.einsum("cqd,cqd->cq", kappa_vals, kappa_vals)
        if r == 2.0:
            wgt = np.ones_like(w2)
        else:
            wgt = w2 ** ((r - 2.0) / 2.0)
        return alpha * np.einsum(
            "cq,cq,cqi,cqj->cij", self.cq_wts, wgt, self.Vm, self.Vm)

    def convection_blocks(self, kappa_vals: np.ndarray,
                          kappa_bn: np.ndarray):
        """Pairing of the weak divergence of {u_c kappa_i, u_c kappa_b} rows
        with the P_m test basis, split by u dof type.

        kappa_vals: (nc, nq, 2) interior values at cell quadrature points.
        kappa_bn:   (nc, 3, nqe) trace normal components kappa_b . n_K.
        Returns (T_int, T_tr) of shapes (nc, Nm, Nm) and (nc, Nm, 3*(k+1)),
        identical for both velocity components.
        """
        nc = self.mesh.num_cells
        nk = self.config.k + 1
        kg = np.einsum("cqd,cqbd->cqb", kappa_vals, self.Gm)    # kappa.grad(phi_b)
        T_int = -np.einsum("cq,cqb,cqj->cbj", self.cq_wts, kg, self.Vm)
        T_tr = np.einsum("ceq,ql,ceq,ceqb->celb",
                         self.ce_wts, self.Lk, kappa_bn, self.Tm)
        T_tr = np.moveaxis(T_tr, 3, 1).reshape(nc, self.Nm, 3 * nk)
        return T_int, T_tr

    # -- field evaluation helpers -------------------------------------------

    def interior_values(self, u_interior: np.ndarray) -> np.ndarray:
        """Velocity values at cell quadrature points, (nc, nq, 2)."""
        return np.einsum("cqj,cdj->cqd", self.Vm, u_interior)

    def trace_normal_values(self, u_trace: np.ndarray) -> np.ndarray:
        """u_b . n_K at edge quadrature points per cell edge, (nc, 3, nqe)."""
        vals = np.einsum("ql,cedl->ceqd", self.Lk,
                         u_trace[self.mesh.cell_edges])          # (nc,3,nqe,2)
        return np.einsum("ceqd,ced->ceq", vals, self.mesh.normals)


# -- single-cell, function-valued weak operators (tests, RT identities) -----

def weak_gradient_coeffs(geom: CellGeometry, v_int, v_edges, gamma: int,
                         quad_degree: int | None = None) -> np.ndarray:
    """Weak gradient of an arbitrary scalar pair on one cell.

    ``v_int(points)`` gives interior values; ``v_edges[i](points)`` gives
    trace values on local edge ``i``.  Returns (dim P_gamma, 2) coefficients
    in the cell's scaled monomial basis.
    """
    qd = quad_degree or (2 * gamma + 8)
    pts, w = geom.quad(qd)
    c, h = geom.centroid, geom.diameter
    V = cell_basis_values(gamma, pts, c, h)
    M = np.einsum("q,qa,qb->ab", w, V, V)
    G = cell_basis_gradients(gamma, pts, c, h)
    rhs = -np.einsum("q,q,qad->ad", w, np.asarray(v_int(pts), dtype=float), G)
    for i in range(3):
        epts, ew = geom.edge_quad(i, qd)
        nrm = geom.outward_normal(i)
        Ve = cell_basis_values(gamma, epts, c, h)
        vb = np.asarray(v_edges[i](epts), dtype=float)
        rhs += np.einsum("q,q,qa,d->ad", ew, vb, Ve, nrm)
    return np.linalg.solve(M, rhs)


def weak_divergence_coeffs(geom: CellGeometry, w_int, w_edge_normals,
                           gamma: int, quad_degree: int | None = None) -> np.ndarray:
    """Weak divergence of an arbitrary vector pair on one cell.

    ``w_int(points)`` gives interior vector values (nq, 2);
    ``w_edge_normals[i](points)`` gives ``w_b . n_K`` on local edge ``i``.
    Returns (dim P_gamma,) coefficients.
    """
    qd = quad_degree or (2 * gamma + 8)
    pts, w = geom.quad(qd)
    c, h = geom.centroid, geom.diameter
    V = cell_basis_values(gamma, pts, c, h)
    M = np.einsum("q,qa,qb->ab", w, V, V)
    G = cell_basis_gradients(gamma, pts, c, h)
    wi = np.asarray(w_int(pts), dtype=float)
    rhs = -np.einsum("q,qd,qad->a", w, wi, G)
    for i in range(3):
        epts, ew = geom.edge_quad(i, qd)
        Ve = cell_basis_values(gamma, epts, c, h)
        wn = np.asarray(w_edge_normals[i](epts), dtype=float)
        rhs += np.einsum("q,q,qa->a", ew, wn, Ve)
    return np.linalg.solve(M, rhs)


def build_weak_gradient(geom: CellGeometry, m: int, k: int, gamma: int,
                        quad_degree: int | None = None) -> np.ndarray:
    """Dense matrix G_K mapping local scalar dofs {v_i in P_m, v_b in P_k}
    to the coefficients of the weak gradient in [P_gamma(K)]^2.

    Rows are ordered x-component coefficients then y-component; columns
    follow the local scalar layout (interior, then 3 edges).
    """
    qd = quad_degree or (2 * max(m, gamma) + 4)
    Nm, Ngam = space_dim(m), space_dim(gamma)
    nloc = Nm + 3 * (k + 1)
    pts, w = geom.quad(qd)
    c, h = geom.centroid, geom.diameter
    V = cell_basis_values(m, pts, c, h)
    Vg = cell_basis_values(gamma, pts, c, h)
    Gg = cell_basis_gradients(gamma, pts, c, h)
    M = np.einsum("q,qa,qb->ab", w, Vg, Vg)
    R = np.zeros((2, Ngam, nloc))
    for d in range(2):
        R[d, :, :Nm] = -np.einsum("q,qj,qa->aj", w, V, Gg[..., d])
    rule = edge_rule(qd)
    L = edge_basis_values(k, rule.points)
    for i in range(3):
        epts, ew = geom.edge_quad(i, qd)
        nrm = geom.outward_normal(i)
        Ve = cell_basis_values(gamma, epts, c, h)
        blk = np.einsum("q,ql,qa->al", ew, L, Ve)
        for d in range(2):
            R[d, :, Nm + i * (k + 1):Nm + (i + 1) * (k + 1)] = blk * nrm[d]
    try:
        sol = np.linalg.solve(M[None], R)
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"singular P_{gamma} mass matrix: {exc}") from exc
    return sol.reshape(2 * Ngam, nloc)


def build_weak_divergence(geom: CellGeometry, m: int, k: int, gamma: int,
                          quad_degree: int | None = None) -> np.ndarray:
    """Dense matrix D_K mapping local vector dofs {w_i in [P_m]^2, w_b in
    [P_k]^2 per edge} to coefficients of the weak divergence in P_gamma(K).

    Column layout: interior x coeffs, interior y coeffs, then per edge
    (x coeffs, y coeffs).
    """
    qd = quad_degree or (2 * max(m, gamma) + 4)
    Nm, Ngam = space_dim(m), space_dim(gamma)
    nk = k + 1
    nloc = 2 * Nm + 6 * nk
    pts, w = geom.quad(qd)
    c, h = geom.centroid, geom.diameter
    V = cell_basis_values(m, pts, c, h)
    Vg = cell_basis_values(gamma, pts, c, h)
    Gg = cell_basis_gradients(gamma, pts, c, h)
    M = np.einsum("q,qa,qb->ab", w, Vg, Vg)
    R = np.zeros((Ngam, nloc))
    for d in range(2):
        R[:, d * Nm:(d + 1) * Nm] = -np.einsum("q,qj,qa->aj", w, V, Gg[..., d])
    rule = edge_rule(qd)
    L = edge_basis_values(k, rule.points)
    for i in range(3):
        epts, ew = geom.edge_quad(i, qd)
        nrm = geom.outward_normal(i)
        Ve = cell_basis_values(gamma, epts, c, h)
        blk = np.einsum("q,ql,qa->al", ew, L, Ve)
        base = 2 * Nm + 2 * nk * i
        R[:, base:base + nk] = blk * nrm[0]
        R[:, base + nk:base + 2 * nk] = blk * nrm[1]
    try:
        return np.linalg.solve(M, R)
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"singular P_{gamma} mass matrix: {exc}") from exc


def apply_weak_op_tensor(geom: CellGeometry, m: int, k: int,
                         u_int_coeffs: np.ndarray, u_edge_coeffs: np.ndarray,
                         kappa_int_coeffs: np.ndarray,
                         kappa_edge_coeffs: np.ndarray,
                         gamma: int | None = None,
                         quad_degree: int | None = None) -> np.ndarray:
    """Row-wise weak divergence of the tensor pair {u_i x kappa_i,
    u_b x kappa_b} on one cell.

    Coefficient shapes: interior (2, dim P_m), edges (3, 2, k+1).  Returns
    (2, dim P_gamma): row c is the weak divergence of {u_c kappa_i,
    u_{b,c} kappa_b}.
    """
    gamma = m if gamma is None else gamma
    qd = quad_degree or (3 * m + 2)
    ctr, h = geom.centroid, geom.diameter

    def u_comp(c):
        return lambda pts: (cell_basis_values(m, pts, ctr, h)
                            @ u_int_coeffs[c])

    def kappa_vec(pts):
        return cell_basis_values(m, pts, ctr, h) @ kappa_int_coeffs.T

    rows = []
    for c in range(2):
        def w_int(pts, c=c):
            return u_comp(c)(pts)[:, None] * kappa_vec(pts)

        w_edges = []
        for i in range(3):
            nrm = geom.outward_normal(i)
            a, b = geom.edge(i)

            def wn(pts, i=i, c=c, nrm=nrm, a=a, b=b):
                t = np.linalg.norm(pts - a, axis=1) / np.linalg.norm(b - a)
                L = edge_basis_values(k, t)
                ub = L @ u_edge_coeffs[i, c]
                kb = L @ kappa_edge_coeffs[i].T       # (nq, 2)
                return ub * (kb @ nrm)

            w_edges.append(wn)
        rows.append(weak_divergence_coeffs(geom, w_int, w_edges, gamma, qd))
    return np.asarray(rows)
