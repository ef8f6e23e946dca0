"""Nonconforming discrete Stokes complex on uniform rectangular meshes.

The 12-DoF plate element, the 12-DoF divergence-free velocity element and
piecewise-constant pressures, with biharmonic and Stokes solvers, pressure
postprocessing and convergence studies.
"""

from .analysis import (
    ErrorReport,
    broken_error,
    divergence_residual,
    postprocess_pressure,
    verify_complex,
)
from .assembly import (
    SolverError,
    assemble_biharmonic,
    assemble_stokes,
    solve_biharmonic,
    solve_stokes,
)
from .cases import ExactCase, benchmark_biharmonic, benchmark_stokes
from .elements import ElementBasis, apply_dofs, dof_matrix, eval_basis, nodal_basis
from .mesh import Domain, Mesh, build_uniform_mesh, cell_geometry
from .quadrature import cell_rule, edge_rule, gauss_1d
from .spaces import (
    DofMap,
    FEField,
    build_dofmap,
    interpolate_scalar,
    interpolate_velocity,
    project_pressure,
)

__all__ = [
    "Domain", "Mesh", "build_uniform_mesh", "cell_geometry",
    "gauss_1d", "cell_rule", "edge_rule",
    "ElementBasis", "dof_matrix", "nodal_basis", "eval_basis", "apply_dofs",
    "DofMap", "FEField", "build_dofmap", "interpolate_scalar", "interpolate_velocity", "project_pressure",
    "assemble_biharmonic", "assemble_stokes", "solve_biharmonic", "solve_stokes", "SolverError",
    "ExactCase", "benchmark_biharmonic", "benchmark_stokes",
    "ErrorReport", "broken_error", "divergence_residual", "postprocess_pressure", "verify_complex",
]
