"""Quadrature exactness against symbolic integrals."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgbf.mesh import generate_uniform_mesh
from wgbf.quadrature import edge_rule, map_to_cells, map_to_edges, triangle_rule


def _exact_triangle_monomial(p, q):
    # int_T x^p y^q over the unit right triangle = p! q! / (p+q+2)!
    from math import factorial
    return factorial(p) * factorial(q) / factorial(p + q + 2)


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 6, 8, 12])
def test_triangle_rule_exactness(degree):
    rule = triangle_rule(degree)
    assert np.all(rule.weights > 0.0)
    assert rule.weights.sum() == pytest.approx(0.5, rel=1e-14)
    for p in range(degree + 1):
        for q in range(degree + 1 - p):
            val = np.sum(rule.weights *
                         rule.points[:, 0] ** p * rule.points[:, 1] ** q)
            assert val == pytest.approx(_exact_triangle_monomial(p, q),
                                        rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("degree", [1, 2, 5, 9])
def test_edge_rule_exactness(degree):
    rule = edge_rule(degree)
    for p in range(degree + 1):
        val = np.sum(rule.weights * rule.points ** p)
        assert val == pytest.approx(1.0 / (p + 1), rel=1e-13)


@given(st.integers(min_value=0, max_value=3),
       st.integers(min_value=0, max_value=3))
@settings(max_examples=20, deadline=None)
def test_mapped_cell_rule_integrates_monomials(p, q):
    # summed over all cells the mapped rule integrates x^p y^q over [0,1]^2
    mesh = generate_uniform_mesh(3, 3)
    rule = triangle_rule(p + q + 2)
    pts, wts = map_to_cells(rule, mesh.vertices, mesh.cells, mesh.areas)
    val = np.sum(wts * pts[..., 0] ** p * pts[..., 1] ** q)
    assert val == pytest.approx(1.0 / ((p + 1) * (q + 1)), rel=1e-12)


def test_mapped_edge_rule_lengths():
    mesh = generate_uniform_mesh(2, 2)
    rule = edge_rule(3)
    pts, wts = map_to_edges(rule, mesh.vertices, mesh.edges, mesh.h_e)
    assert np.allclose(wts.sum(axis=1), mesh.h_e)
    # arclength integral of a linear function = midpoint value * length
    vals = pts[..., 0] + 2.0 * pts[..., 1]
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] +
                  mesh.vertices[mesh.edges[:, 1]])
    exact = (mids[:, 0] + 2.0 * mids[:, 1]) * mesh.h_e
    assert np.allclose(np.sum(wts * vals, axis=1), exact)


def test_rules_are_cached():
    assert triangle_rule(4) is triangle_rule(4)
    assert edge_rule(4) is edge_rule(4)
