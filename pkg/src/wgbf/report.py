"""Figure rendering for study and cavity runs.

Figures are written next to the delimited/VTK output: a log-log convergence
plot per study, and streamline/pressure-contour panels for cavity solves.
"""

from __future__ import annotations

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import matplotlib.tri as mtri


def plot_convergence(reports, path, title: str = "Convergence study"):
    """Log-log error-vs-h plot with slope guide lines."""
    h = np.array([r.h for r in reports])
    series = [("velocity L2", [r.err_l2_u for r in reports], "o-"),
              ("velocity broken H1", [r.err_h1_u for r in reports], "s-"),
              ("pressure L2", [r.err_l2_p for r in reports], "^-")]
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    for label, err, style in series:
        ax.loglog(h, err, style, label=label)
    # slope guides anchored to the coarsest velocity error
    e0 = reports[0].err_l2_u
    for slope, ls in ((1, ":"), (2, "--"), (3, "-.")):
        ax.loglog(h, e0 * (h / h[0]) ** slope, ls, color="gray", lw=0.8,
                  label=f"slope {slope}")
    ax.set_xlabel("mesh size h")
    ax.set_ylabel("relative error")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _vertex_fields(solution):
    """Vertex-sampled velocity and pressure plus a triangulation."""
    dm = solution.dofmap
    mesh = dm.mesh
    owner = np.full(mesh.num_vertices, -1, dtype=np.int64)
    for c in range(mesh.num_cells - 1, -1, -1):
        owner[mesh.cells[c]] = c
    u = solution.eval_velocity(owner, mesh.vertices)
    p = solution.eval_pressure(owner, mesh.vertices)
    tri = mtri.Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1],
                             mesh.cells)
    return tri, u, p


def plot_cavity(solution, path, title: str = "Cavity flow"):
    """Streamlines of the interior velocity and pressure contours."""
    tri, u, p = _vertex_fields(solution)
    mesh = solution.dofmap.mesh
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.4))

    # resample onto a regular grid for the streamline integrator
    n = 120
    xs = np.linspace(mesh.vertices[:, 0].min(), mesh.vertices[:, 0].max(), n)
    ys = np.linspace(mesh.vertices[:, 1].min(), mesh.vertices[:, 1].max(), n)
    XX, YY = np.meshgrid(xs, ys)
    interp_u = mtri.LinearTriInterpolator(tri, u[:, 0])
    interp_v = mtri.LinearTriInterpolator(tri, u[:, 1])
    U = interp_u(XX, YY).filled(0.0)
    V = interp_v(XX, YY).filled(0.0)
    speed = np.hypot(U, V)
    ax1.streamplot(XX, YY, U, V, density=1.4, color=speed,
                   cmap="viridis", linewidth=0.8)
    ax1.set_title("velocity streamlines")
    ax1.set_aspect("equal")

    cs = ax2.tricontourf(tri, p, levels=24, cmap="coolwarm")
    ax2.tricontour(tri, p, levels=24, colors="k", linewidths=0.3)
    fig.colorbar(cs, ax=ax2, shrink=0.9)
    ax2.set_title("pressure contours")
    ax2.set_aspect("equal")

    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
