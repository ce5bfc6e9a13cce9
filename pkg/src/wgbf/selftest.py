"""Built-in verification suite of the discrete operators.

Each check returns a SelfTestResult; ``run_all`` collects the suite used by
the command line ``--selftest`` flag.  Flagged results document expected
negative-control behavior and do not count as failures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import Assembler, ProblemParams
from .basis import (RTBasis, cell_geometry, edge_basis_values, project_cell,
                    project_edge, project_rt)
from .dofspace import DiscreteField, SpaceConfig, build_dofmap
from .mesh import generate_uniform_mesh
from .postproc import check_divergence_free, compute_errors
from .scenarios import ManufacturedSolution
from .solver import SolverConfig, oseen_solve, velocity_r_norm
from .weakops import WeakOps, weak_gradient_coeffs


@dataclass
class SelfTestResult:
    name: str
    passed: bool
    detail: str
    flagged: bool = False


def _smooth_vector(pts):
    return np.stack([np.sin(pts[..., 0]) * np.cos(pts[..., 1]),
                     np.cos(pts[..., 0]) * np.sin(pts[..., 1])], axis=-1)


def _smooth_vector_grad(pts):
    x, y = pts[..., 0], pts[..., 1]
    g = np.empty(pts.shape[:-1] + (2, 2))
    g[..., 0, 0] = np.cos(x) * np.cos(y)
    g[..., 0, 1] = -np.sin(x) * np.sin(y)
    g[..., 1, 0] = -np.sin(x) * np.sin(y)
    g[..., 1, 1] = np.cos(x) * np.cos(y)
    return g


def _smooth_scalar(pts):
    return np.sin(pts[..., 0] + pts[..., 1])


def _smooth_scalar_grad(pts):
    c = np.cos(pts[..., 0] + pts[..., 1])
    return np.stack([c, c], axis=-1)


def check_commutativity(m: int, k: int, nx: int = 4, tol: float = 1e-10
                        ) -> SelfTestResult:
    """Projection/weak-operator commutation on every cell of a small mesh.

    (i) the weak gradient of the projected vector pair equals the cellwise
    L2 projection of the true gradient; (ii) likewise for scalar pairs with
    the degree-m weak gradient.
    """
    mesh = generate_uniform_mesh(nx, nx)
    qd = 2 * m + 10
    worst = 0.0
    for c in range(mesh.num_cells):
        geom = cell_geometry(mesh, c)
        rt = RTBasis(m, geom)
        rt_coef = project_rt(_smooth_vector, m, geom, quad_degree=qd)
        edge_coefs = [project_edge(_smooth_vector, k, *geom.edge(i),
                                   quad_degree=qd) for i in range(3)]

        for comp in range(2):
            def v_int(pts, comp=comp):
                return rt.values(pts)[:, :, comp] @ rt_coef

            v_edges = []
            for i in range(3):
                a, b = geom.edge(i)

                def vb(pts, i=i, comp=comp, a=a, b=b):
                    t = np.linalg.norm(pts - a, axis=1) / np.linalg.norm(b - a)
                    return edge_basis_values(k, t) @ edge_coefs[i][:, comp]

                v_edges.append(vb)
            lhs = weak_gradient_coeffs(geom, v_int, v_edges, m - 1, qd)
            rhs = project_cell(
                lambda pts, comp=comp: _smooth_vector_grad(pts)[:, comp, :],
                m - 1, geom, quad_degree=qd)
            worst = max(worst, float(np.abs(lhs - rhs).max()))

        q_coef = project_cell(_smooth_scalar, m - 1, geom, quad_degree=qd)
        qe_coefs = [project_edge(_smooth_scalar, m, *geom.edge(i),
                                 quad_degree=qd) for i in range(3)]

        def q_int(pts):
            from .basis import cell_basis_values
            return cell_basis_values(m - 1, pts, geom.centroid,
                                     geom.diameter) @ q_coef

        q_edges = []
        for i in range(3):
            a, b = geom.edge(i)

            def qb(pts, i=i, a=a, b=b):
                t = np.linalg.norm(pts - a, axis=1) / np.linalg.norm(b - a)
                return edge_basis_values(m, t) @ qe_coefs[i]

            q_edges.append(qb)
        lhs = weak_gradient_coeffs(geom, q_int, q_edges, m, qd)
        rhs = project_cell(_smooth_scalar_grad, m, geom, quad_degree=qd)
        worst = max(worst, float(np.abs(lhs - rhs).max()))

    return SelfTestResult(
        f"commutativity m={m} k={k}", worst <= tol,
        f"max coefficient deviation {worst:.3e} (tol {tol:g})")


def _random_zero_trace_field(dofmap, rng) -> DiscreteField:
    field = DiscreteField(dofmap, rng.standard_normal(dofmap.total))
    field.coeffs[dofmap.boundary_ub] = 0.0
    return field


def _energy_quadrature_path(ops: WeakOps, assembler: Assembler,
                            coeffs: np.ndarray) -> float:
    """|||v|||^2 via the weak-gradient coefficients and projection residual,
    independently of the assembled matrix scatter."""
    v = coeffs[assembler.vidx]                    # (nc, 2, nloc)
    g = np.einsum("csal,cdl->cdsa", ops.G, v)     # weak-gradient coefficients
    Mg = ops.Mm[:, :ops.Ng, :ops.Ng]
    grad = np.einsum("cdsa,cab,cdsb->", g, Mg, g)
    Nm, nk = ops.Nm, ops.config.k + 1
    proj = np.einsum("celj,cdj->cdel", ops.Pk, v[:, :, :Nm])
    vb = v[:, :, Nm:].reshape(v.shape[0], 2, 3, nk)
    mis = proj - vb
    stab = np.einsum("c,cel,cdel->", ops.eta, ops.edge_mass_k, mis ** 2)
    return float(grad + stab)


def check_operator_identities(m: int, k: int, n_fields: int = 20,
                              nx: int = 4, seed: int = 20260824
                              ) -> SelfTestResult:
    """Randomized energy, damping-consistency and skewness identities."""
    nu, alpha, r = 1.37, 5.0, 10.0
    mesh = generate_uniform_mesh(nx, nx)
    cfg = SpaceConfig(m, k)
    dofmap = build_dofmap(mesh, cfg)
    ops = WeakOps(mesh, cfg)
    asm = Assembler(dofmap, ops)
    A = asm.assemble_a(nu)
    rng = np.random.default_rng(seed)
    n = dofmap.total
    fails = []
    for trial in range(n_fields):
        v = _random_zero_trace_field(dofmap, rng)
        kap = _random_zero_trace_field(dofmap, rng)
        x = np.zeros(asm.size)
        x[:n] = v.coeffs
        energy = _energy_quadrature_path(ops, asm, x)
        quad_a = float(x @ (A @ x))
        if abs(quad_a - nu * energy) > 1e-10 * max(energy, 1.0):
            fails.append(f"trial {trial}: viscous energy mismatch "
                         f"{abs(quad_a - nu * energy):.3e}")
        C = asm.assemble_c(v, alpha, r)
        ref = alpha * velocity_r_norm(ops, v.u_interior, r)
        if abs(float(x @ (C @ x)) - ref) > 1e-8 * max(ref, 1.0):
            fails.append(f"trial {trial}: damping identity mismatch")
        D = asm.assemble_d(kap)
        scale = 1.0 + np.linalg.norm(kap.coeffs) * energy
        if abs(float(x @ (D @ x))) > 1e-12 * scale:
            fails.append(f"trial {trial}: convection skewness broken")
    return SelfTestResult(
        f"operator identities m={m} k={k}", not fails,
        "; ".join(fails) if fails else f"{n_fields} random fields ok")


def _manufactured_solve(nx: int, m: int, k: int, condense: bool = False):
    ms = ManufacturedSolution()
    mesh = generate_uniform_mesh(nx, nx)
    params = ProblemParams(ms.nu, ms.alpha, ms.r, ms.forcing)
    cfg = SolverConfig(condense=condense)
    sol, hist, solver = oseen_solve(mesh, SpaceConfig(m, k), params, cfg,
                                    dirichlet=ms.velocity)
    return ms, sol, hist, solver


def check_divergence(nx: int = 8, m: int = 1, k: int = 0,
                     tol: float = 1e-10) -> SelfTestResult:
    """A converged solve is exactly divergence free up to round-off."""
    _, sol, _, _ = _manufactured_solve(nx, m, k)
    div, jump = check_divergence_free(sol)
    ok = div <= tol and jump <= tol
    return SelfTestResult(
        "divergence-free velocity", ok,
        f"cellwise sup {div:.3e}, normal jump {jump:.3e} (tol {tol:g})")


def check_condensation(nx: int = 8, m: int = 1, k: int = 0) -> SelfTestResult:
    """Condensed and full solves agree to 6 significant digits."""
    ms, sol_a, hist_a, _ = _manufactured_solve(nx, m, k, condense=False)
    _, sol_b, hist_b, _ = _manufactured_solve(nx, m, k, condense=True)
    rep_a = compute_errors(sol_a, ms.velocity, ms.velocity_gradient,
                           ms.pressure, iters=hist_a.iterations)
    rep_b = compute_errors(sol_b, ms.velocity, ms.velocity_gradient,
                           ms.pressure, iters=hist_b.iterations)
    diffs = []
    for name in ("err_l2_u", "err_h1_u", "err_l2_p"):
        a, b = getattr(rep_a, name), getattr(rep_b, name)
        rel = abs(a - b) / max(abs(a), abs(b), 1e-300)
        if rel > 5e-7:
            diffs.append(f"{name}: {a:.8e} vs {b:.8e}")
    return SelfTestResult(
        "static condensation equivalence", not diffs,
        "; ".join(diffs) if diffs else
        f"errors agree to 6 significant digits "
        f"({rep_a.err_l2_u:.6e} vs {rep_b.err_l2_u:.6e})")


def check_stabilization_scaling(m: int = 1, k: int = 0, nx: int = 4
                                ) -> SelfTestResult:
    """Doubling the penalty weight keeps the energy identity exact."""
    nu = 1.0
    mesh = generate_uniform_mesh(nx, nx)
    cfg = SpaceConfig(m, k)
    dofmap = build_dofmap(mesh, cfg)
    ops = WeakOps(mesh, cfg, eta_scale=2.0)
    asm = Assembler(dofmap, ops)
    A = asm.assemble_a(nu)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(5):
        v = _random_zero_trace_field(dofmap, rng)
        x = np.zeros(asm.size)
        x[:dofmap.total] = v.coeffs
        energy = _energy_quadrature_path(ops, asm, x)
        worst = max(worst, abs(float(x @ (A @ x)) - nu * energy)
                    / max(energy, 1.0))
    return SelfTestResult(
        "energy identity with doubled penalty", worst <= 1e-10,
        f"max relative deviation {worst:.3e}")


def check_no_stabilization_control(m: int = 1, k: int = 0) -> SelfTestResult:
    """Negative control: with the penalty off, the energy seminorm has a
    kernel that still carries interior/trace mismatch.  Flagged, not failed.
    """
    mesh = generate_uniform_mesh(2, 2)
    cfg = SpaceConfig(m, k)
    ops = WeakOps(mesh, cfg)
    Kg = ops.Kgrad[0]
    S = ops.Kstab[0]
    w, vecs = np.linalg.eigh(Kg)
    degraded = False
    for i in range(len(w)):
        if w[i] < 1e-12 * max(w.max(), 1.0):
            vec = vecs[:, i]
            if float(vec @ S @ vec) > 1e-8:
                degraded = True
                break
    return SelfTestResult(
        "penalty-off negative control", True,
        "unpenalized seminorm kernel carries trace mismatch (expected)"
        if degraded else "no degradation detected (unexpected)",
        flagged=degraded)


def run_all(verbose_print=None):
    """Run the whole suite; returns (results, all_passed)."""
    results = []
    for m, k in ((1, 0), (1, 1), (2, 1), (2, 2)):
        results.append(check_commutativity(m, k))
        results.append(check_operator_identities(m, k))
    results.append(check_divergence())
    results.append(check_condensation())
    results.append(check_stabilization_scaling())
    results.append(check_no_stabilization_control())
    ok = all(r.passed for r in results)
    if verbose_print is not None:
        for r in results:
            tag = "PASS" if r.passed else "FAIL"
            if r.flagged:
                tag += " (flagged)"
            verbose_print(f"[{tag}] {r.name}: {r.detail}")
    return results, ok
