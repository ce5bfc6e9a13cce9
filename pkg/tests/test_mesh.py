"""Mesh generation, import and topology invariants."""

import numpy as np
import pytest

from wgbf import generate_uniform_mesh, import_mesh, topology_report
from wgbf.errors import (InvalidArgumentError, MeshFormatError,
                         MeshTopologyError)


def test_smallest_mesh_counts():
    mesh = generate_uniform_mesh(1, 1)
    assert mesh.num_cells == 2
    assert mesh.num_edges == 5
    assert int(mesh.boundary_edge.sum()) == 4


def test_4x4_counts_euler():
    # V - E + F = 2 with the outer face: V=25, F=32 cells -> E=56
    mesh = generate_uniform_mesh(4, 4)
    assert mesh.num_vertices == 25
    assert mesh.num_cells == 32
    assert mesh.num_edges == 56
    assert mesh.num_vertices - mesh.num_edges + mesh.num_cells + 1 == 2
    assert int(mesh.boundary_edge.sum()) == 16
    assert mesh.num_edges - int(mesh.boundary_edge.sum()) == 40


def test_mesh_size_is_cell_diagonal():
    mesh = generate_uniform_mesh(8, 8)
    assert mesh.h == pytest.approx(np.sqrt(2.0) / 8.0, rel=1e-14)


def test_topology_report():
    rep = topology_report(generate_uniform_mesh(4, 4))
    assert rep == {
        "cells": 32, "edges": 56, "interior_edges": 40, "boundary_edges": 16,
        "h_min": pytest.approx(np.sqrt(2.0) / 4.0),
        "h_max": pytest.approx(np.sqrt(2.0) / 4.0),
    }


def test_areas_and_orientation():
    mesh = generate_uniform_mesh(3, 5, rect=(0.0, 3.0, -1.0, 4.0))
    assert np.all(mesh.areas > 0.0)
    assert mesh.areas.sum() == pytest.approx(15.0, rel=1e-13)


def test_outward_normals_are_unit_and_outward():
    mesh = generate_uniform_mesh(2, 2)
    norms = np.linalg.norm(mesh.normals, axis=2)
    assert np.allclose(norms, 1.0)
    # outward: normal points away from the centroid
    for c in range(mesh.num_cells):
        pts = mesh.vertices[mesh.cells[c]]
        for le, (a, b) in enumerate([(1, 2), (2, 0), (0, 1)]):
            mid = 0.5 * (pts[a] + pts[b])
            assert (mid - mesh.centroids[c]) @ mesh.normals[c, le] > 0.0


def test_edge_cells_consistency():
    mesh = generate_uniform_mesh(4, 4)
    for e in range(mesh.num_edges):
        for c in mesh.edge_cells[e]:
            if c >= 0:
                assert e in mesh.cell_edges[c]
    assert np.all(mesh.edge_cells[~mesh.boundary_edge] >= 0)
    assert np.all(mesh.edge_cells[mesh.boundary_edge, 1] == -1)


def test_invalid_arguments():
    with pytest.raises(InvalidArgumentError):
        generate_uniform_mesh(0, 4)
    with pytest.raises(InvalidArgumentError):
        generate_uniform_mesh(2, 2, rect=(0.0, 0.0, 0.0, 1.0))


def _write_mesh_files(tmp_path, vertices, cells):
    node = tmp_path / "mesh.node"
    cell = tmp_path / "mesh.cell"
    lines = [f"{len(vertices)}"]
    lines += [f"{i} {x} {y} 0" for i, (x, y) in enumerate(vertices)]
    node.write_text("\n".join(lines) + "\n")
    lines = [f"{len(cells)}"]
    lines += [f"{i} {a} {b} {c}" for i, (a, b, c) in enumerate(cells)]
    cell.write_text("\n".join(lines) + "\n")
    return str(node), str(cell)


def test_import_roundtrip_1x1(tmp_path):
    ref = generate_uniform_mesh(1, 1)
    node, cell = _write_mesh_files(tmp_path, ref.vertices, ref.cells)
    mesh = import_mesh(node, cell)
    assert mesh.num_cells == ref.num_cells
    assert mesh.num_edges == ref.num_edges
    assert np.allclose(mesh.vertices, ref.vertices)
    assert np.allclose(mesh.areas.sum(), ref.areas.sum())


def test_import_4x4_edge_count(tmp_path):
    ref = generate_uniform_mesh(4, 4)
    node, cell = _write_mesh_files(tmp_path, ref.vertices, ref.cells)
    mesh = import_mesh(node, cell)
    assert mesh.num_edges == 56
    assert topology_report(mesh) == topology_report(ref)


def test_import_missing_vertex(tmp_path):
    vertices = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    cells = [(0, 1, 7)]
    node, cell = _write_mesh_files(tmp_path, vertices, cells)
    with pytest.raises(MeshTopologyError):
        import_mesh(node, cell)


def test_import_malformed_file(tmp_path):
    node = tmp_path / "bad.node"
    node.write_text("not-a-count\n")
    cell = tmp_path / "bad.cell"
    cell.write_text("0\n")
    with pytest.raises(MeshFormatError):
        import_mesh(str(node), str(cell))


def test_clockwise_cell_rejected(tmp_path):
    vertices = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    cells = [(0, 2, 1)]
    node, cell = _write_mesh_files(tmp_path, vertices, cells)
    with pytest.raises(MeshTopologyError):
        import_mesh(node, cell)
