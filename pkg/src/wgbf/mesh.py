"""Conforming triangular meshes with full cell-edge topology.

A mesh is immutable after construction.  Cells are stored counterclockwise;
local edge ``i`` of a cell is the edge opposite local vertex ``i``.  Edge
numbering is lexicographic in the (sorted) vertex pair, which makes generated
meshes bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, MeshFormatError, MeshTopologyError


@dataclass(frozen=True)
class Mesh:
    """Simplicial 2D mesh with edge topology and geometric quantities.

    Attributes
    ----------
    vertices : (nv, 2) float array
    cells : (nc, 3) int array, counterclockwise vertex triples
    edges : (ne, 2) int array, sorted vertex pairs, lexicographic order
    cell_edges : (nc, 3) int array, global edge index of each local edge
    cell_edge_signs : (nc, 3) int array, +1 where the cell is the lower
        numbered neighbour of the edge (so the global edge normal ``n_e``
        equals the cell's outward normal), -1 otherwise
    edge_cells : (ne, 2) int array, adjacent cells (second entry -1 on the
        boundary)
    boundary_edge : (ne,) bool array
    normals : (nc, 3, 2) outward unit normals per cell edge
    areas, h_K : per-cell area and diameter (longest edge)
    h_e : per-edge length
    """

    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    cell_edges: np.ndarray
    cell_edge_signs: np.ndarray
    edge_cells: np.ndarray
    boundary_edge: np.ndarray
    normals: np.ndarray
    areas: np.ndarray
    h_K: np.ndarray
    h_e: np.ndarray
    centroids: np.ndarray = field(repr=False, default=None)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def h(self) -> float:
        return float(self.h_K.max())

    def edge_endpoints(self, e: int) -> np.ndarray:
        """Coordinates of the two endpoints of edge ``e`` (low vertex first)."""
        return self.vertices[self.edges[e]]


def _build_from_arrays(vertices: np.ndarray, cells: np.ndarray) -> Mesh:
    """Derive edges, topology and geometry from raw vertex/cell arrays."""
    nv = vertices.shape[0]
    nc = cells.shape[0]
    if cells.min(initial=0) < 0 or cells.max(initial=-1) >= nv:
        bad = int(np.argmax((cells < 0) | (cells >= nv)).item() // 3)
        raise MeshTopologyError(
            f"cell {bad} references a vertex outside [0, {nv})")

    v0, v1, v2 = (vertices[cells[:, i]] for i in range(3))
    d1, d2 = v1 - v0, v2 - v0
    signed = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    if np.any(signed <= 0.0):
        bad = int(np.argmax(signed <= 0.0))
        raise MeshTopologyError(
            f"cell {bad} has non-positive signed area {signed[bad]:.3e} "
            "(vertices must be counterclockwise)")

    # local edge i is opposite local vertex i
    locals_ = [(1, 2), (2, 0), (0, 1)]
    raw = np.concatenate([cells[:, loc] for loc in locals_], axis=0)
    raw_sorted = np.sort(raw, axis=1)
    edges, inverse = np.unique(raw_sorted, axis=0, return_inverse=True)
    ne = edges.shape[0]
    cell_edges = inverse.ravel().reshape(3, nc).T.copy()

    edge_cells = np.full((ne, 2), -1, dtype=np.int64)
    for c in range(nc):
        for le in range(3):
            e = cell_edges[c, le]
            if edge_cells[e, 0] < 0:
                edge_cells[e, 0] = c
            elif edge_cells[e, 1] < 0:
                edge_cells[e, 1] = c
            else:
                raise MeshTopologyError(
                    f"edge {tuple(edges[e])} is shared by more than 2 cells")
    boundary_edge = edge_cells[:, 1] < 0

    # geometry
    pts = vertices[cells]                       # (nc, 3, 2)
    tangents = np.stack(
        [pts[:, b] - pts[:, a] for a, b in locals_], axis=1)   # (nc, 3, 2)
    lengths = np.linalg.norm(tangents, axis=2)
    # outward normal of a CCW cell: rotate the CCW tangent by -90 degrees
    normals = np.stack(
        [tangents[..., 1], -tangents[..., 0]], axis=-1) / lengths[..., None]
    h_K = lengths.max(axis=1)
    h_e = np.linalg.norm(vertices[edges[:, 1]] - vertices[edges[:, 0]], axis=1)

    signs = np.where(edge_cells[cell_edges, 0] == np.arange(nc)[:, None], 1, -1)
    centroids = pts.mean(axis=1)

    for arr in (vertices, cells, edges, cell_edges, signs, edge_cells,
                boundary_edge, normals, signed, h_K, h_e, centroids):
        arr.setflags(write=False)
    return Mesh(vertices, cells, edges, cell_edges, signs, edge_cells,
                boundary_edge, normals, signed, h_K, h_e, centroids)


def generate_uniform_mesh(nx: int, ny: int,
                          rect: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
                          ) -> Mesh:
    """Uniform triangulation of the rectangle ``(x0, x1, y0, y1)``.

    Every grid cell is split along its lower-left to upper-right diagonal,
    giving ``2*nx*ny`` counterclockwise triangles.  Vertices are numbered
    lexicographically by (y, x).
    """
    if nx < 1 or ny < 1:
        raise InvalidArgumentError(f"cell counts must be >= 1, got ({nx}, {ny})")
    x0, x1, y0, y1 = rect
    if not (x1 > x0 and y1 > y0):
        raise InvalidArgumentError(f"degenerate rectangle {rect}")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(ix, iy):
        return iy * (nx + 1) + ix

    cells = []
    for iy in range(ny):
        for ix in range(nx):
            a, b = vid(ix, iy), vid(ix + 1, iy)
            c, d = vid(ix + 1, iy + 1), vid(ix, iy + 1)
            cells.append((a, b, c))   # lower triangle
            cells.append((a, c, d))   # upper triangle
    return _build_from_arrays(vertices, np.asarray(cells, dtype=np.int64))


def _read_table(path, ncols, kind):
    """Read a whitespace table: first line = count, then `index cols...`."""
    rows = []
    with open(path) as fh:
        lines = fh.readlines()
    if not lines:
        raise MeshFormatError(path, 1, f"empty {kind} file")
    try:
        count = int(lines[0].split()[0])
    except (ValueError, IndexError):
        raise MeshFormatError(path, 1, f"expected {kind} count") from None
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        if len(parts) < ncols + 1:
            raise MeshFormatError(path, ln,
                                  f"expected {ncols + 1} fields, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts[:ncols + 1]])
        except ValueError:
            raise MeshFormatError(path, ln, f"non-numeric field in {line!r}") from None
    if len(rows) != count:
        raise MeshFormatError(path, len(lines),
                              f"header promised {count} {kind} rows, found {len(rows)}")
    table = np.asarray(rows)
    order = np.argsort(table[:, 0])
    return table[order, 1:]


def import_mesh(node_file, cell_file) -> Mesh:
    """Read a mesh from ASCII node/cell files (see the package README)."""
    nodes = _read_table(node_file, 3, "node")       # x y boundary_marker
    cells = _read_table(cell_file, 3, "cell")       # v0 v1 v2
    vertices = np.ascontiguousarray(nodes[:, :2])
    conn = cells.astype(np.int64)
    if not np.allclose(cells, conn):
        raise MeshFormatError(cell_file, 2, "non-integer vertex index")
    return _build_from_arrays(vertices, conn)


def topology_report(mesh: Mesh) -> dict:
    """Counts and mesh-size extremes, consistent with the mesh invariants."""
    nb = int(mesh.boundary_edge.sum())
    return {
        "cells": mesh.num_cells,
        "edges": mesh.num_edges,
        "interior_edges": mesh.num_edges - nb,
        "boundary_edges": nb,
        "h_min": float(mesh.h_K.min()),
        "h_max": float(mesh.h_K.max()),
    }
