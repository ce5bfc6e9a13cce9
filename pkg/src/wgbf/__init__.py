"""Divergence-free weak Galerkin solver for stationary incompressible flow
with convective transport and nonlinear damping."""

from .assembly import Assembler, CondensedSolver, LinearSystem, ProblemParams
from .dofspace import (DiscreteField, DofMap, SpaceConfig, build_dofmap,
                       set_dirichlet_trace)
from .errors import (ConfigError, GeometryError, InvalidArgumentError,
                     MeshFormatError, MeshTopologyError, NonConvergenceError,
                     SolverError, WgbfError)
from .mesh import Mesh, generate_uniform_mesh, import_mesh, topology_report
from .postproc import (ErrorReport, check_divergence_free, compute_errors,
                       convergence_rates, energy_identity_residual,
                       export_fields, export_table, weak_gradient_error)
from .scenarios import (ManufacturedSolution, ScenarioConfig,
                        cavity_lid_velocity, load_config)
from .solver import (IterationHistory, OseenSolver, SolverConfig,
                     interior_l2_norm, oseen_solve, triple_norm_v,
                     velocity_r_norm)
from .weakops import WeakOps, default_quad_degree

__version__ = "0.1.0"

__all__ = [
    "Assembler", "CondensedSolver", "LinearSystem", "ProblemParams",
    "DiscreteField", "DofMap", "SpaceConfig", "build_dofmap",
    "set_dirichlet_trace",
    "ConfigError", "GeometryError", "InvalidArgumentError", "MeshFormatError",
    "MeshTopologyError", "NonConvergenceError", "SolverError", "WgbfError",
    "Mesh", "generate_uniform_mesh", "import_mesh", "topology_report",
    "ErrorReport", "check_divergence_free", "compute_errors",
    "convergence_rates", "energy_identity_residual", "export_fields",
    "export_table", "weak_gradient_error",
    "ManufacturedSolution", "ScenarioConfig", "cavity_lid_velocity",
    "load_config",
    "IterationHistory", "OseenSolver", "SolverConfig", "interior_l2_norm",
    "oseen_solve", "triple_norm_v", "velocity_r_norm",
    "WeakOps", "default_quad_degree",
]
