"""Quadrature rules on the reference triangle and on edges.

Triangle rules are collapsed Gauss-Legendre products (Duffy transform),
which gives positive weights and guaranteed exactness at any requested
degree.  Rules are cached per degree.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadRule:
    """Points and weights on the reference domain.

    For the triangle the reference domain is the unit right triangle
    (0,0),(1,0),(0,1) and weights sum to 1/2.  For an edge the reference
    domain is [0,1] and weights sum to 1.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadRule:
    """Rule exact for bivariate polynomials of total degree <= ``degree``."""
    degree = max(int(degree), 1)
    nu = (degree + 3) // 2   # ceil((d+2)/2)
    nv = (degree + 2) // 2   # ceil((d+1)/2)
    xu, wu = np.polynomial.legendre.leggauss(nu)
    xv, wv = np.polynomial.legendre.leggauss(nv)
    xu, wu = 0.5 * (xu + 1.0), 0.5 * wu
    xv, wv = 0.5 * (xv + 1.0), 0.5 * wv
    U, V = np.meshgrid(xu, xv, indexing="ij")
    WU, WV = np.meshgrid(wu, wv, indexing="ij")
    xi = U.ravel()
    eta = (V * (1.0 - U)).ravel()
    w = (WU * WV * (1.0 - U)).ravel()
    pts = np.column_stack([xi, eta])
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadRule(pts, w, degree)


@lru_cache(maxsize=None)
def edge_rule(degree: int) -> QuadRule:
    """Gauss-Legendre rule on [0,1] exact up to ``degree``."""
    degree = max(int(degree), 1)
    n = (degree + 2) // 2
    x, w = np.polynomial.legendre.leggauss(n)
    pts = 0.5 * (x + 1.0)
    wts = 0.5 * w
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadRule(pts, wts, degree)


def map_to_cells(rule: QuadRule, vertices: np.ndarray, cells: np.ndarray,
                 areas: np.ndarray):
    """Physical quadrature points/weights for every cell.

    Returns ``(points, weights)`` of shapes (nc, nq, 2) and (nc, nq).
    """
    p0 = vertices[cells[:, 0]][:, None, :]
    d1 = (vertices[cells[:, 1]] - vertices[cells[:, 0]])[:, None, :]
    d2 = (vertices[cells[:, 2]] - vertices[cells[:, 0]])[:, None, :]
    xi = rule.points[None, :, 0, None]
    eta = rule.points[None, :, 1, None]
    pts = p0 + xi * d1 + eta * d2
    wts = rule.weights[None, :] * (2.0 * areas[:, None])
    return pts, wts


def map_to_edges(rule: QuadRule, vertices: np.ndarray, edges: np.ndarray,
                 h_e: np.ndarray):
    """Physical quadrature points/weights for every edge.

    The edge parameter runs from the lower-numbered endpoint to the higher
    one, so both adjacent cells see the same point ordering.
    Returns ``(points, weights)`` of shapes (ne, nq, 2) and (ne, nq).
    """
    a = vertices[edges[:, 0]][:, None, :]
    b = vertices[edges[:, 1]][:, None, :]
    t = rule.points[None, :, None]
    pts = a + t * (b - a)
    wts = rule.weights[None, :] * h_e[:, None]
    return pts, wts
