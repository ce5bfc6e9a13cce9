"""Polynomial bases on cells and edges, the local RT space, and projections.

Cell bases are monomials in the centroid-scaled coordinates
``((x - cx)/h_K, (y - cy)/h_K)``, ordered by total degree so the basis of
``P_{j'}`` is a prefix of the basis of ``P_j`` for ``j' <= j``.  Edge bases
are shifted Legendre polynomials in the edge arclength parameter ``t`` in
[0,1], running from the lower-numbered endpoint to the higher one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GeometryError
from .quadrature import edge_rule, triangle_rule


def space_dim(j: int) -> int:
    """dim P_j on a triangle."""
    return (j + 1) * (j + 2) // 2


@lru_cache(maxsize=None)
def monomial_exponents(degree: int) -> np.ndarray:
    """Exponent pairs of the scaled monomial basis, graded by total degree."""
    exps = [(d - b, b) for d in range(degree + 1) for b in range(d + 1)]
    arr = np.asarray(exps, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def _scaled_powers(coord: np.ndarray, degree: int) -> np.ndarray:
    """Stack coord**p for p = 0..degree along a new last axis."""
    out = np.ones(coord.shape + (degree + 1,))
    for p in range(1, degree + 1):
        out[..., p] = out[..., p - 1] * coord
    return out


def cell_basis_values(degree: int, pts: np.ndarray, centroid, h) -> np.ndarray:
    """Values of the scaled monomials of P_degree at physical points.

    ``pts`` has shape (..., 2); ``centroid``/``h`` broadcast against the
    leading axes.  Returns shape (..., dim).
    """
    pts = np.asarray(pts, dtype=float)
    centroid = np.asarray(centroid, dtype=float)
    h = np.asarray(h, dtype=float)
    X = (pts[..., 0] - centroid[..., 0]) / h
    Y = (pts[..., 1] - centroid[..., 1]) / h
    exps = monomial_exponents(degree)
    Xp = _scaled_powers(X, degree)
    Yp = _scaled_powers(Y, degree)
    return Xp[..., exps[:, 0]] * Yp[..., exps[:, 1]]


def cell_basis_gradients(degree: int, pts: np.ndarray, centroid, h) -> np.ndarray:
    """Gradients of the scaled monomials, shape (..., dim, 2)."""
    pts = np.asarray(pts, dtype=float)
    centroid = np.asarray(centroid, dtype=float)
    h = np.asarray(h, dtype=float)
    X = (pts[..., 0] - centroid[..., 0]) / h
    Y = (pts[..., 1] - centroid[..., 1]) / h
    exps = monomial_exponents(degree)
    Xp = _scaled_powers(X, degree)
    Yp = _scaled_powers(Y, degree)
    a, b = exps[:, 0], exps[:, 1]
    gx = np.where(a > 0, a, 0) * Xp[..., np.maximum(a - 1, 0)] * Yp[..., b]
    gy = np.where(b > 0, b, 0) * Xp[..., a] * Yp[..., np.maximum(b - 1, 0)]
    grad = np.stack([gx, gy], axis=-1)
    return grad / np.asarray(h)[..., None, None]


def eval_cell_poly(coeffs: np.ndarray, degree: int, pts, centroid, h):
    """Evaluate a polynomial given by scaled-monomial coefficients."""
    vals = cell_basis_values(degree, pts, centroid, h)
    return vals @ np.asarray(coeffs)


def edge_basis_values(degree: int, t: np.ndarray) -> np.ndarray:
    """Shifted Legendre values at parameters ``t`` in [0,1], shape (..., j+1)."""
    t = np.asarray(t, dtype=float)
    vals = np.empty(t.shape + (degree + 1,))
    for l in range(degree + 1):
        c = np.zeros(l + 1)
        c[l] = 1.0
        vals[..., l] = np.polynomial.legendre.legval(2.0 * t - 1.0, c)
    return vals


def edge_mass_diagonal(degree: int, h_e) -> np.ndarray:
    """Diagonal of the edge mass matrix: <L_i, L_j>_e = h_e/(2i+1) delta_ij."""
    return np.asarray(h_e)[..., None] / (2.0 * np.arange(degree + 1) + 1.0)


@dataclass(frozen=True)
class CellGeometry:
    """Geometry of a single triangle used by the local operations."""

    verts: np.ndarray      # (3, 2), counterclockwise

    @property
    def centroid(self):
        return self.verts.mean(axis=0)

    @property
    def area(self):
        d1 = self.verts[1] - self.verts[0]
        d2 = self.verts[2] - self.verts[0]
        return 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])

    @property
    def diameter(self):
        return float(max(np.linalg.norm(self.verts[(i + 1) % 3] - self.verts[i])
                         for i in range(3)))

    def edge(self, i):
        """Endpoints of local edge ``i`` (opposite vertex ``i``)."""
        return self.verts[(i + 1) % 3], self.verts[(i + 2) % 3]

    def edge_length(self, i):
        a, b = self.edge(i)
        return float(np.linalg.norm(b - a))

    def outward_normal(self, i):
        a, b = self.edge(i)
        t = (b - a) / np.linalg.norm(b - a)
        return np.array([t[1], -t[0]])

    def quad(self, degree):
        """Physical quadrature points and weights on the cell."""
        rule = triangle_rule(degree)
        p0 = self.verts[0]
        d1, d2 = self.verts[1] - p0, self.verts[2] - p0
        pts = p0 + np.outer(rule.points[:, 0], d1) + np.outer(rule.points[:, 1], d2)
        return pts, rule.weights * 2.0 * self.area

    def edge_quad(self, i, degree):
        """Physical quadrature points and weights on local edge ``i``."""
        rule = edge_rule(degree)
        a, b = self.edge(i)
        pts = a + np.outer(rule.points, b - a)
        return pts, rule.weights * self.edge_length(i)


def cell_geometry(mesh, c: int) -> CellGeometry:
    return CellGeometry(mesh.vertices[mesh.cells[c]])


def cell_mass_matrix(geom: CellGeometry, degree: int, quad_degree=None) -> np.ndarray:
    qd = quad_degree if quad_degree is not None else 2 * degree
    pts, w = geom.quad(qd)
    V = cell_basis_values(degree, pts, geom.centroid, geom.diameter)
    return np.einsum("q,qi,qj->ij", w, V, V)


def project_cell(f, degree: int, geom: CellGeometry, quad_degree=None):
    """L2 projection of ``f`` onto P_degree(K) in the scaled monomial basis.

    ``f(points)`` maps (nq, 2) points to scalars (nq,) or vectors (nq, d);
    vector data is projected componentwise and returned as (dim, d).
    """
    qd = quad_degree if quad_degree is not None else 2 * degree + 4
    pts, w = geom.quad(qd)
    V = cell_basis_values(degree, pts, geom.centroid, geom.diameter)
    fv = np.asarray(f(pts), dtype=float)
    M = np.einsum("q,qi,qj->ij", w, V, V)
    rhs = np.einsum("q,qi,q...->i...", w, V, fv)
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"singular cell mass matrix: {exc}") from exc


def project_edge(f, degree: int, a, b, quad_degree=None):
    """L2 projection of ``f`` onto P_degree of the segment ``a``->``b``.

    Returns shifted-Legendre coefficients, shape (degree+1,) or
    (degree+1, d) for vector data.
    """
    qd = quad_degree if quad_degree is not None else 2 * degree + 4
    rule = edge_rule(qd)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    h = float(np.linalg.norm(b - a))
    pts = a + np.outer(rule.points, b - a)
    w = rule.weights * h
    L = edge_basis_values(degree, rule.points)
    fv = np.asarray(f(pts), dtype=float)
    rhs = np.einsum("q,qi,q...->i...", w, L, fv)
    diag = edge_mass_diagonal(degree, h)
    return rhs / (diag if rhs.ndim == 1 else diag[:, None])


@dataclass(frozen=True)
class RTBasis:
    """Vector basis of RT_m(K) = [P_m(K)]^2 + x P~_m(K).

    The first 2*dim(P_m) members are the vector scaled monomials
    (phi_a, 0), (0, phi_a); the last m+1 members are x_hat * psi_b with
    psi_b the homogeneous degree-m scaled monomials and
    x_hat = (x - centroid)/h.
    """

    degree: int
    geom: CellGeometry

    @property
    def dim(self):
        return (self.degree + 1) * (self.degree + 3)

    def values(self, pts) -> np.ndarray:
        """Shape (nq, dim, 2)."""
        m = self.degree
        nm = space_dim(m)
        V = cell_basis_values(m, pts, self.geom.centroid, self.geom.diameter)
        nq = V.shape[0]
        out = np.zeros((nq, self.dim, 2))
        out[:, :nm, 0] = V
        out[:, nm:2 * nm, 1] = V
        xhat = (np.asarray(pts) - self.geom.centroid) / self.geom.diameter
        hom = slice(nm - (m + 1), nm)   # homogeneous degree-m monomials
        out[:, 2 * nm:, :] = V[:, hom, None] * xhat[:, None, :]
        return out

    def divergences(self, pts) -> np.ndarray:
        """Shape (nq, dim)."""
        m = self.degree
        nm = space_dim(m)
        c, h = self.geom.centroid, self.geom.diameter
        G = cell_basis_gradients(m, pts, c, h)
        V = cell_basis_values(m, pts, c, h)
        nq = V.shape[0]
        out = np.zeros((nq, self.dim))
        out[:, :nm] = G[:, :, 0]
        out[:, nm:2 * nm] = G[:, :, 1]
        xhat = (np.asarray(pts) - c) / h
        hom = slice(nm - (m + 1), nm)
        # div(x_hat psi) = 2/h psi + x_hat . grad psi
        out[:, 2 * nm:] = (2.0 / h) * V[:, hom] + np.einsum(
            "qid,qd->qi", G[:, hom, :], xhat)
        return out


def project_rt(f, m: int, geom: CellGeometry, quad_degree=None) -> np.ndarray:
    """RT projection of a smooth vector field onto RT_m(K).

    The projection is pinned down by edge-normal moments against P_m(e) on
    the three edges and, for m >= 1, interior moments against
    [P_{m-1}(K)]^2.  Returns coefficients in the RTBasis ordering.
    """
    qd = quad_degree if quad_degree is not None else 2 * m + 8
    basis = RTBasis(m, geom)
    n = basis.dim
    A = np.zeros((n, n))
    rhs = np.zeros(n)
    row = 0
    for i in range(3):
        pts, w = geom.edge_quad(i, qd)
        nrm = geom.outward_normal(i)
        rule = edge_rule(qd)
        L = edge_basis_values(m, rule.points)            # (nq, m+1)
        bn = basis.values(pts) @ nrm                     # (nq, n)
        fn = np.asarray(f(pts), dtype=float) @ nrm       # (nq,)
        A[row:row + m + 1] = np.einsum("q,ql,qn->ln", w, L, bn)
        rhs[row:row + m + 1] = np.einsum("q,ql,q->l", w, L, fn)
        row += m + 1
    if m >= 1:
        pts, w = geom.quad(qd)
        W = cell_basis_values(m - 1, pts, geom.centroid, geom.diameter)
        BV = basis.values(pts)                           # (nq, n, 2)
        fv = np.asarray(f(pts), dtype=float)             # (nq, 2)
        for c in range(2):
            nrows = space_dim(m - 1)
            A[row:row + nrows] = np.einsum("q,qi,qn->in", w, W, BV[:, :, c])
            rhs[row:row + nrows] = np.einsum("q,qi,q->i", w, W, fv[:, c])
            row += nrows
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"singular RT interpolation system: {exc}") from exc
